#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "nn_util.hpp"
#include "vloc/cpg/build.hpp"
#include "vloc/embed/vectorize.hpp"
#include "vloc/minic/parser.hpp"
#include "vloc/models/model.hpp"
#include "vloc/nn/grad_check.hpp"

using namespace vloc;
using namespace vloc::models;
using nn::Tensor;
using testutil::randn;

namespace {

const char* kProgram = R"(int f(int n, int *p) {
int a = n + 1;
int b = 0;
if (a > 3) {
b = a * 2;
} else {
b = *p;
}
while (b < 10) {
b = b + a;
}
return b;
})";

cpg::CodeGraph graph_of(const char* src) { return cpg::build_cpg(minic::parse_source(src)); }

ModelConfig tiny_ggnn(int input, int hidden, int steps) {
    ModelConfig c;
    c.kind = ModelKind::Ggnn;
    c.input_dim = input;
    c.ggnn = {hidden, steps};
    return c;
}

ModelConfig tiny_transformer(int input) {
    ModelConfig c;
    c.kind = ModelKind::Transformer;
    c.input_dim = input;
    c.transformer = {2, 2, 8, 12, 512, 0.0};
    return c;
}

// Directed hop distance from u following edge direction (messages flow src → dst).
std::vector<int> hops_from(const cpg::CodeGraph& g, int u) {
    std::vector<int> dist(g.size(), -1);
    std::queue<int> q;
    dist[static_cast<std::size_t>(u)] = 0;
    q.push(u);
    while (!q.empty()) {
        const int a = q.front();
        q.pop();
        for (const auto& e : g.edges)
            if (e.src == a && dist[static_cast<std::size_t>(e.dst)] < 0) {
                dist[static_cast<std::size_t>(e.dst)] = dist[static_cast<std::size_t>(a)] + 1;
                q.push(e.dst);
            }
    }
    return dist;
}

// Plain GRU step with zero input, written directly from the gate equations.
Eigen::RowVectorXd gru_zero_input(const nn::ParamStore<double>& ps, const Eigen::RowVectorXd& h) {
    const auto d = h.size();
    const auto& b = ps.at("ggnn.gru.b");
    const auto& uzr = ps.at("ggnn.gru.Uzr");
    const auto& un = ps.at("ggnn.gru.Un");
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    Eigen::RowVectorXd out(d);
    const Eigen::RowVectorXd hz = h * uzr.leftCols(d), hr = h * uzr.rightCols(d);
    Eigen::RowVectorXd r(d);
    for (Eigen::Index i = 0; i < d; ++i) r(i) = sig(b(0, d + i) + hr(i));
    const Eigen::RowVectorXd rn = r.cwiseProduct(h) * un;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double z = sig(b(0, i) + hz(i));
        const double cand = std::tanh(b(0, 2 * d + i) + rn(i));
        out(i) = (1 - z) * cand + z * h(i);
    }
    return out;
}

cpg::CodeGraph permute(const cpg::CodeGraph& g, const std::vector<int>& pi) {
    cpg::CodeGraph out = g;
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto n = g.nodes[i];
        n.id = pi[i];
        out.nodes[static_cast<std::size_t>(pi[i])] = n;
    }
    for (auto& e : out.edges) {
        e.src = pi[static_cast<std::size_t>(e.src)];
        e.dst = pi[static_cast<std::size_t>(e.dst)];
    }
    return out;
}

} // namespace

TEST_CASE("ggnn: zero steps returns the input") {
    const auto g = graph_of(kProgram);
    const auto cfg = tiny_ggnn(6, 6, 0);
    const auto ps = init_params(cfg, 1).cast<double>();
    CHECK_FALSE(ps.contains("ggnn.proj.W"));
    nn::Prng prng(3, "x");
    const Tensor<double> x = randn(static_cast<Eigen::Index>(g.size()), 6, prng);
    nn::Tape<double> t(false);
    CHECK(ggnn_forward(t, ps, cfg.ggnn, g, t.constant(x)).value() == x);
}

TEST_CASE("ggnn: zero edge matrices give a K-fold GRU of zero input") {
    const auto g = graph_of(kProgram);
    const auto cfg = tiny_ggnn(5, 5, 4);
    auto ps = init_params(cfg, 2).cast<double>();
    ps.at("ggnn.A").setZero();
    nn::Prng prng(4, "x");
    ps.at("ggnn.gru.b") = randn(1, 15, prng, 0.5);
    const Tensor<double> x = randn(static_cast<Eigen::Index>(g.size()), 5, prng);
    nn::Tape<double> t(false);
    const auto h = ggnn_forward(t, ps, cfg.ggnn, g, t.constant(x)).value();
    for (Eigen::Index v = 0; v < x.rows(); ++v) {
        Eigen::RowVectorXd ref = x.row(v);
        for (int k = 0; k < 4; ++k) ref = gru_zero_input(ps, ref);
        CHECK((h.row(v) - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("ggnn: permutation equivariance") {
    const auto g = graph_of(kProgram);
    const auto cfg = tiny_ggnn(8, 6, 3);
    const auto ps = init_params(cfg, 5);
    const auto n = g.size();
    for (int trial = 0; trial < 10; ++trial) {
        nn::Prng prng(static_cast<std::uint64_t>(trial), "perm");
        std::vector<int> pi(n);
        std::iota(pi.begin(), pi.end(), 0);
        for (std::size_t i = n - 1; i > 0; --i) std::swap(pi[i], pi[prng.below(i + 1)]);
        const Tensor<float> x = randn<float>(static_cast<Eigen::Index>(n), 8, prng);
        Tensor<float> px(x.rows(), x.cols());
        for (std::size_t i = 0; i < n; ++i) px.row(pi[i]) = x.row(static_cast<Eigen::Index>(i));
        nn::Tape<float> t(false);
        const auto h = ggnn_forward(t, ps, cfg.ggnn, g, t.constant(x)).value();
        const auto ph = ggnn_forward(t, ps, cfg.ggnn, permute(g, pi), t.constant(px)).value();
        for (std::size_t i = 0; i < n; ++i)
            CHECK((ph.row(pi[i]) - h.row(static_cast<Eigen::Index>(i))).cwiseAbs().maxCoeff() <= 1e-5f);
    }
}

TEST_CASE("ggnn: K-hop locality is exact") {
    const auto g = graph_of(kProgram);
    for (int k : {1, 2, 3}) {
        const auto cfg = tiny_ggnn(6, 6, k);
        const auto ps = init_params(cfg, 9);
        nn::Prng prng(static_cast<std::uint64_t>(k), "loc");
        const Tensor<float> x = randn<float>(static_cast<Eigen::Index>(g.size()), 6, prng);
        int far_nodes = 0;
        for (std::size_t u = 1; u < g.size(); ++u) {
            Tensor<float> y = x;
            y.row(static_cast<Eigen::Index>(u)).array() += 1.0f;
            nn::Tape<float> t(false);
            const auto a = ggnn_forward(t, ps, cfg.ggnn, g, t.constant(x)).value();
            const auto b = ggnn_forward(t, ps, cfg.ggnn, g, t.constant(y)).value();
            const auto dist = hops_from(g, static_cast<int>(u));
            for (std::size_t v = 0; v < g.size(); ++v) {
                if (dist[v] >= 0 && dist[v] <= k) continue;
                ++far_nodes;
                CHECK(a.row(static_cast<Eigen::Index>(v)) == b.row(static_cast<Eigen::Index>(v)));
            }
            CHECK(a.row(static_cast<Eigen::Index>(u)) != b.row(static_cast<Eigen::Index>(u)));
        }
        CHECK(far_nodes > 0);
    }
}

TEST_CASE("transformer: sequence is the node list in id order, dummy first") {
    const auto g = graph_of("int f() {\nreturn 0;\n}");
    std::vector<std::string> kinds;
    for (const auto& n : g.nodes) kinds.push_back(n.kind);
    CHECK(kinds == std::vector<std::string>{"Dummy", "Function", "ParamList", "Block", "Return", "Literal"});
}

TEST_CASE("transformer: deterministic and position sensitive") {
    const auto cfg = tiny_transformer(6);
    const auto ps = init_params(cfg, 3);
    const auto g1 = graph_of("int f(int n) {\nint a = n;\nint b = 7;\nreturn a;\n}");
    const auto g2 = graph_of("int f(int n) {\nint b = 7;\nint a = n;\nreturn a;\n}");
    embed::EmbeddingTable table;
    embed::Word2VecConfig wc;
    wc.dim = 3;
    wc.t_max = 2;
    wc.epochs = 1;
    table = embed::train_word2vec(std::vector<std::vector<std::string>>{embed::token_sequence(g1)}, wc);
    const auto x1 = embed::vectorize_graph(g1, table);
    const auto x2 = embed::vectorize_graph(g2, table);
    nn::Tape<float> t(false);
    const auto s1 = forward_scores(t, cfg, ps, g1, x1).value();
    CHECK(s1 == forward_scores(t, cfg, ps, g1, x1).value());
    const auto s2 = forward_scores(t, cfg, ps, g2, x2).value();
    // the two Decl statements trade places; their node positions hold different content now
    int changed = 0;
    for (Eigen::Index i = 0; i < s1.rows(); ++i) changed += s1(i, 0) != s2(i, 0);
    CHECK(changed > 0);
    // identical multiset of node vectors, different order: not permutation invariant
    std::vector<float> a(s1.data(), s1.data() + s1.size()), b(s2.data(), s2.data() + s2.size());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a != b);
}

TEST_CASE("transformer: a perturbation reaches positions beyond K hops") {
    const auto g = graph_of(kProgram);
    const auto cfg = tiny_transformer(6);
    const auto ps = init_params(cfg, 4);
    constexpr int K = 2;
    for (int trial = 0; trial < 5; ++trial) {
        nn::Prng prng(static_cast<std::uint64_t>(trial), "glob");
        const Tensor<float> x = randn<float>(static_cast<Eigen::Index>(g.size()), 6, prng);
        const auto u = 1 + prng.below(g.size() - 1);
        Tensor<float> y = x;
        y.row(static_cast<Eigen::Index>(u)).array() += 0.5f;
        nn::Tape<float> t(false);
        const auto a = transformer_forward(t, ps, cfg.transformer, t.constant(x), false, nullptr).value();
        const auto b = transformer_forward(t, ps, cfg.transformer, t.constant(y), false, nullptr).value();
        const auto dist = hops_from(g, static_cast<int>(u));
        bool far_changed = false;
        for (std::size_t v = 0; v < g.size(); ++v)
            if ((dist[v] < 0 || dist[v] > K) && a.row(static_cast<Eigen::Index>(v)) != b.row(static_cast<Eigen::Index>(v)))
                far_changed = true;
        CHECK(far_changed);
    }
}

TEST_CASE("transformer: errors") {
    auto cfg = tiny_transformer(6);
    cfg.transformer.max_seq = 4;
    const auto ps = init_params(cfg, 1);
    const auto g = graph_of(kProgram);
    nn::Tape<float> t(false);
    CHECK_THROWS_AS(forward_scores(t, cfg, ps, g, Tensor<float>(Tensor<float>::Zero(static_cast<Eigen::Index>(g.size()), 6))),
                    SequenceTooLong);
    CHECK_THROWS_AS(forward_scores(t, cfg, ps, g, Tensor<float>(Tensor<float>::Zero(static_cast<Eigen::Index>(g.size()), 5))),
                    ShapeMismatch);
    cfg.transformer.heads = 3;
    CHECK_THROWS_AS(init_params(cfg, 1), InvalidConfig);
}

TEST_CASE("head and predict") {
    nn::ParamStore<float> ps;
    ps.add("head.W", Tensor<float>::Zero(4, 1));
    ps.add("head.b", Tensor<float>::Zero(1, 1));
    nn::Prng prng(1, "h");
    nn::Tape<float> t(false);
    const auto s = score_nodes(t, ps, t.constant(randn<float>(5, 4, prng))).value();
    CHECK(s.isZero(0.0f));
    const auto p = predict(std::span<const float>(s.data(), 5));
    for (double v : p.probs) CHECK(v == doctest::Approx(0.2));

    CHECK(predict(std::vector<float>{7.0f}).node == 0);
    CHECK(argmax(std::vector<float>{2, 5, 5}) == 1);
    const auto z = predict(std::vector<float>{0, 0});
    CHECK(z.node == 0);
    CHECK(z.probs[0] == doctest::Approx(0.5));
    CHECK(z.probs[1] == doctest::Approx(0.5));
    CHECK(predict(std::vector<float>{1, 3, 2}).node == 1);
    CHECK_THROWS_AS(predict(std::vector<float>{}), EmptyScoreVector);
}

TEST_CASE("predict: shift invariance and argmax under positive affine maps") {
    for (int trial = 0; trial < 200; ++trial) {
        nn::Prng prng(static_cast<std::uint64_t>(trial), "affine");
        std::vector<float> s(2 + prng.below(30));
        for (auto& v : s) v = static_cast<float>(std::round(prng.normal() * 8.0) / 4.0); // ties happen
        const float a = static_cast<float>(std::ldexp(1.0, static_cast<int>(prng.below(6)) - 2));
        const float c = static_cast<float>(std::round(prng.normal() * 16.0));
        std::vector<float> m(s), shifted(s);
        for (auto& v : m) v = a * v + c;
        for (auto& v : shifted) v += c;
        const auto p = predict(s);
        CHECK(argmax(m) == p.node);
        const auto q = predict(shifted);
        CHECK(q.node == p.node);
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(q.probs[i] == doctest::Approx(p.probs[i]).epsilon(1e-9));
    }
}

TEST_CASE("end-to-end gradient check, both models (64-bit)") {
    const auto g = graph_of("int f(int n) {\nint a = n + 1;\nif (a > 2) {\na = 0;\n}\nreturn a;\n}");
    const int label = 5;
    for (const auto& cfg : {tiny_ggnn(6, 4, 3), tiny_transformer(6)}) {
        double worst = 0;
        for (int seed = 1; seed <= 20; ++seed) {
            auto ps = init_params(cfg, static_cast<std::uint64_t>(seed)).cast<double>();
            nn::Prng prng(static_cast<std::uint64_t>(seed), "e2e");
            for (auto& [name, v] : ps)
                if (name.ends_with(".b") || name.ends_with(".beta")) v = randn(v.rows(), v.cols(), prng, 0.1);
            const Tensor<double> x = randn(static_cast<Eigen::Index>(g.size()), 6, prng);
            const auto r = nn::grad_check(
                [&](auto& t, const auto& p) {
                    using T = typename std::decay_t<decltype(p)>::value_type;
                    return nn::softmax_cross_entropy(forward_scores(t, cfg, p, g, Tensor<T>(x.cast<T>())), label);
                },
                ps);
            INFO(to_string(cfg.kind) << " seed " << seed << " worst " << r.worst << " " << r.max_rel_error);
            CHECK(r.max_rel_error < 1e-3);
            worst = std::max(worst, r.max_rel_error);
        }
        MESSAGE(to_string(cfg.kind) << " worst relative error " << worst);
    }
}

TEST_CASE("bundle checkpoint round trip") {
    const auto g = graph_of(kProgram);
    embed::Word2VecConfig wc;
    wc.dim = 4;
    wc.t_max = 3;
    wc.epochs = 1;
    for (auto cfg : {tiny_ggnn(12, 5, 2), tiny_transformer(12)}) {
        Bundle b;
        b.cfg = cfg;
        b.params = init_params(cfg, 11);
        b.embedding = embed::train_word2vec(std::vector<std::vector<std::string>>{embed::token_sequence(g)}, wc);
        b.provenance = {{"seed", 11}};
        const auto bytes = nn::encode_checkpoint(b.to_checkpoint());
        const auto back = Bundle::from_checkpoint(nn::decode_checkpoint(bytes));
        CHECK(back.params == b.params);
        CHECK(back.embedding.fingerprint() == b.embedding.fingerprint());
        CHECK(back.score(g) == b.score(g));
        CHECK(nn::encode_checkpoint(back.to_checkpoint()) == bytes);
        CHECK_THROWS_AS(Bundle::from_checkpoint(b.embedding.to_checkpoint()), nn::BadCheckpoint);
    }
}
