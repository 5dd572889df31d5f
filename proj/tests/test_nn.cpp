#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nn_util.hpp"
#include "vloc/nn/adam.hpp"
#include "vloc/nn/grad_check.hpp"
#include "vloc/nn/layers.hpp"

using namespace vloc;
using namespace vloc::nn;
using testutil::randn;

namespace {

constexpr int kSeeds = 20;
constexpr double kLayerTol = 1e-4;

Tensor<double> row(std::initializer_list<double> v) {
    Tensor<double> t(1, static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) t(0, i++) = x;
    return t;
}

template <typename Loss>
void check_all_seeds(const std::function<void(ParamStore<double>&, Prng&)>& setup, const Loss& loss) {
    for (int seed = 1; seed <= kSeeds; ++seed) {
        Prng prng(static_cast<std::uint64_t>(seed), "gradcheck");
        ParamStore<double> ps;
        setup(ps, prng);
        const auto r = grad_check(loss, ps);
        INFO("seed " << seed << " worst " << r.worst);
        CHECK(r.max_rel_error < kLayerTol);
        CHECK(r.checked > 0);
    }
}

} // namespace

TEST_CASE("softmax: symmetric pair and normalization") {
    Tape<double> t;
    auto y = softmax_rows(t.constant(row({0, 0})));
    CHECK(y.value()(0, 0) == doctest::Approx(0.5));
    CHECK(y.value()(0, 1) == doctest::Approx(0.5));

    Prng prng(3, "softmax");
    for (int i = 0; i < 50; ++i) {
        Tensor<double> x = randn(4, 9, prng, 5.0);
        auto p = softmax_rows(t.constant(x)).value();
        Tensor<double> xs = x.array() + 37.5;
        auto ps = softmax_rows(t.constant(xs)).value();
        for (Eigen::Index r = 0; r < 4; ++r) {
            CHECK(std::abs(p.row(r).sum() - 1.0) < 1e-6);
            Eigen::Index a, b;
            p.row(r).maxCoeff(&a);
            ps.row(r).maxCoeff(&b);
            CHECK(a == b);
        }
    }
}

TEST_CASE("softmax: masked columns get exactly zero") {
    Tape<double> t;
    Prng prng(5, "mask");
    const std::vector<char> mask{1, 0, 1, 1, 0};
    auto y = softmax_rows(t.constant(randn(3, 5, prng)), mask).value();
    for (Eigen::Index r = 0; r < 3; ++r) {
        CHECK(y(r, 1) == 0.0);
        CHECK(y(r, 4) == 0.0);
        CHECK(std::abs(y.row(r).sum() - 1.0) < 1e-6);
    }
}

TEST_CASE("cross entropy of a uniform distribution is ln n") {
    for (int n : {2, 3, 7, 50}) {
        Tape<double> t;
        Tensor<double> p = Tensor<double>::Constant(1, n, 1.0 / n);
        for (int target : {0, n - 1}) {
            CHECK(cross_entropy(t.constant(p), target).value()(0, 0) == doctest::Approx(std::log(n)));
            CHECK(softmax_cross_entropy(t.constant(Tensor<double>::Zero(1, n)), target).value()(0, 0) ==
                  doctest::Approx(std::log(n)));
        }
    }
}

TEST_CASE("gru with zero parameters keeps a zero state") {
    ParamStore<double> ps;
    Prng prng(1, "gru");
    init_gru(ps, "g", 5, 4, prng);
    for (auto& [name, v] : ps) v.setZero();
    Tape<double> t;
    auto h = gru_cell(t, ps, "g", t.constant(randn(3, 5, prng)), t.constant(Tensor<double>::Zero(3, 4)));
    CHECK(h.value().isZero(0.0));
}

TEST_CASE("attention: masked keys get zero weight, others sum to one") {
    Prng prng(11, "attn");
    ParamStore<double> ps;
    init_attention(ps, "a", 8, 8, prng);
    const std::vector<char> mask{1, 1, 1, 0, 0, 1};
    for (int trial = 0; trial < 10; ++trial) {
        Tape<double> t;
        auto res = self_attention(t, ps, "a", t.constant(randn(6, 8, prng)), mask, 2);
        REQUIRE(res.weights.size() == 2);
        for (const auto& w : res.weights)
            for (Eigen::Index q = 0; q < 6; ++q) {
                CHECK(w.value()(q, 3) == 0.0);
                CHECK(w.value()(q, 4) == 0.0);
                CHECK(std::abs(w.value().row(q).sum() - 1.0) < 1e-6);
            }
    }
}

TEST_CASE("dropout identity rules") {
    Prng prng(2, "drop");
    Tape<double> t;
    auto x = t.constant(randn(4, 6, prng));
    Prng dp(9, "mask");
    CHECK(dropout(x, 0.1, dp, false).id == x.id);
    CHECK(dropout(x, 0.0, dp, true).id == x.id);
    CHECK(dropout(x, 0.0, dp, false).id == x.id);
    auto y = dropout(x, 0.5, dp, true).value();
    for (Eigen::Index i = 0; i < y.size(); ++i)
        CHECK((y.data()[i] == 0.0 || y.data()[i] == doctest::Approx(2.0 * x.value().data()[i])));

    Prng a(9, "mask"), b(9, "mask");
    CHECK(dropout(x, 0.3, a, true).value() == dropout(x, 0.3, b, true).value());
}

TEST_CASE("errors: shape mismatch and non-finite values") {
    Tape<double> t;
    CHECK_THROWS_AS(matmul(t.constant(Tensor<double>::Zero(2, 3)), t.constant(Tensor<double>::Zero(2, 3))),
                    ShapeMismatch);
    CHECK_THROWS_AS(add(t.constant(Tensor<double>::Zero(2, 3)), t.constant(Tensor<double>::Zero(3, 2))),
                    ShapeMismatch);
    Tensor<double> big = Tensor<double>::Constant(1, 1, 1e308);
    CHECK_THROWS_AS(scale(t.constant(big), 10.0), NonFiniteValue);
    CHECK_THROWS_AS(cross_entropy(t.constant(row({1.0, 0.0})), 1), NonFiniteValue);
}

TEST_CASE("adam: first step is -lr * sign(g)") {
    ParamStore<float> ps;
    ps.add("w", Tensor<float>::Constant(1, 3, 1.0f));
    GradStore<float> g;
    Tensor<float> gv(1, 3);
    gv << 0.3f, -2.0f, 1e-3f;
    g.emplace("w", gv);
    AdamState st;
    st.cfg.lr = 1e-3;
    adam_step(ps, g, st);
    CHECK(st.t == 1);
    CHECK(ps.at("w")(0, 0) == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
    CHECK(ps.at("w")(0, 1) == doctest::Approx(1.0 + 1e-3).epsilon(1e-6));
    CHECK(ps.at("w")(0, 2) == doctest::Approx(1.0 - 1e-3).epsilon(1e-4));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged, runs are deterministic") {
    Prng prng(4, "adam");
    ParamStore<float> base;
    base.add("a", randn<float>(3, 4, prng));
    base.add("b", randn<float>(1, 4, prng));
    {
        ParamStore<float> ps = base;
        AdamState st;
        GradStore<float> g{{"a", Tensor<float>::Zero(3, 4)}, {"b", Tensor<float>::Zero(1, 4)}};
        for (int i = 0; i < 5; ++i) adam_step(ps, g, st);
        CHECK(ps == base);
    }
    auto run = [&] {
        ParamStore<float> ps = base;
        AdamState st;
        Prng gp(8, "grads");
        for (int i = 0; i < 20; ++i) {
            GradStore<float> g{{"a", randn<float>(3, 4, gp)}, {"b", randn<float>(1, 4, gp)}};
            adam_step(ps, g, st);
        }
        return ps;
    };
    CHECK(run() == run());
    ParamStore<float> ps = base;
    AdamState st;
    CHECK_THROWS_AS(adam_step(ps, {{"a", Tensor<float>::Zero(4, 3)}}, st), ShapeMismatch);
}

TEST_CASE("prng: addressable and stream-independent") {
    Prng a(42, "x"), b(42, "x"), c(42, "y");
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Prng d(42, "x");
    CHECK(d.next_u64() != c.next_u64());
    Prng e(42, "x");
    e.set_counter(17);
    Prng f(42, "x");
    for (int i = 0; i < 17; ++i) f.next_u64();
    CHECK(e.next_u64() == f.next_u64());
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK((u >= 0.0 && u < 1.0));
        CHECK(a.below(7) < 7u);
    }
}

// ---- gradient checks, 64-bit, every layer over 20 seeds ----------------------

TEST_CASE("gradcheck: linear on a 3x4 input") {
    check_all_seeds(
        [](ParamStore<double>& ps, Prng& prng) {
            ps.add("x", randn(3, 4, prng));
            init_linear(ps, "l", 4, 5, prng);
            ps.at("l.b") = randn(1, 5, prng);
            ps.add("c", randn(3, 5, prng));
        },
        [](auto& t, const auto& ps) {
            return dot_const(linear(t, ps, "l", t.param(ps, "x")), ps.at("c"));
        });
}

TEST_CASE("gradcheck: softmax + cross entropy") {
    check_all_seeds(
        [](ParamStore<double>& ps, Prng& prng) { ps.add("s", randn(1, 7, prng, 2.0)); },
        [](auto& t, const auto& ps) {
            return cross_entropy(softmax_rows(t.param(ps, "s")), 3);
        });
    check_all_seeds(
        [](ParamStore<double>& ps, Prng& prng) { ps.add("s", randn(7, 1, prng, 2.0)); },
        [](auto& t, const auto& ps) { return softmax_cross_entropy(t.param(ps, "s"), 5); });
}

TEST_CASE("gradcheck: gru cell, full parameter set") {
    check_all_seeds(
        [](ParamStore<double>& ps, Prng& prng) {
            ps.add("x", randn(3, 5, prng));
            ps.add("h", randn(3, 4, prng, 0.5));
            init_gru(ps, "g", 5, 4, prng);
            ps.at("g.b") = randn(1, 12, prng, 0.3);
            ps.add("c", randn(3, 4, prng));
        },
        [](auto& t, const auto& ps) {
            return dot_const(gru_cell(t, ps, "g", t.param(ps, "x"), t.param(ps, "h")), ps.at("c"));
        });
}

TEST_CASE("gradcheck: layer norm") {
    check_all_seeds(
        [](ParamStore<double>& ps, Prng& prng) {
            ps.add("x", randn(4, 6, prng, 2.0));
            init_layer_norm(ps, "ln", 6);
            ps.at("ln.gamma") = randn(1, 6, prng);
            ps.at("ln.beta") = randn(1, 6, prng);
            ps.add("c", randn(4, 6, prng));
        },
        [](auto& t, const auto& ps) {
            return dot_const(layer_norm(t, ps, "ln", t.param(ps, "x")), ps.at("c"));
        });
}

TEST_CASE("gradcheck: masked multi-head self-attention") {
    check_all_seeds(
        [](ParamStore<double>& ps, Prng& prng) {
            ps.add("x", randn(5, 8, prng));
            init_attention(ps, "a", 8, 8, prng);
            ps.add("c", randn(5, 8, prng));
        },
        [](auto& t, const auto& ps) {
            static const std::vector<char> mask{1, 1, 0, 1, 0};
            return dot_const(self_attention(t, ps, "a", t.param(ps, "x"), mask, 2).out, ps.at("c"));
        });
}

TEST_CASE("gradcheck: dropout with a replayed mask") {
    check_all_seeds(
        [](ParamStore<double>& ps, Prng& prng) {
            ps.add("x", randn(4, 5, prng));
            ps.add("c", randn(4, 5, prng));
        },
        [](auto& t, const auto& ps) {
            Prng p(77, "dropout");
            return dot_const(dropout(t.param(ps, "x"), 0.3, p, true), ps.at("c"));
        });
}

TEST_CASE("gradcheck: remaining ops") {
    check_all_seeds(
        [](ParamStore<double>& ps, Prng& prng) {
            ps.add("a", randn(4, 3, prng));
            ps.add("b", randn(4, 3, prng));
            ps.add("r", randn(1, 3, prng));
            ps.add("s", randn(1, 1, prng));
            ps.add("c", randn(6, 9, prng));
        },
        [](auto& t, const auto& ps) {
            using T = typename std::decay_t<decltype(ps)>::value_type;
            auto a = t.param(ps, "a");
            auto b = t.param(ps, "b");
            auto m = add_row(add_row(mul(tanh(a), gelu(b)), t.param(ps, "r")), t.param(ps, "s"));
            auto n = sub(sigmoid(b), scale(one_minus(a), 0.7));
            const std::vector<int> src{0, 1, 2, 3, 3}, dst{1, 2, 0, 0, 2};
            auto agg = aggregate_rows(m, src, dst, 4);
            const std::vector<Var<T>> parts{agg, slice_cols(matmul_nt(n, m), 1, 3), slice_cols(n, 0, 3)};
            auto cat = concat_cols<T>(std::span(parts.data(), 2));
            auto y = add(matmul(cat, t.param(ps, "c")),
                         add_const(matmul(n, t.constant(Tensor<T>::Ones(3, 9))), Tensor<T>(Tensor<T>::Ones(4, 9))));
            return sum(mul(y, y));
        });
}
