#include "vloc/models/model.hpp"

#include <algorithm>
#include <cmath>

#include "vloc/embed/vectorize.hpp"

namespace vloc::models {

using nn::Tape;
using nn::Tensor;
using nn::Var;
using ojson = nlohmann::ordered_json;

namespace {

std::string layer_prefix(int l) { return "tr.L" + std::to_string(l); }

} // namespace

nn::ParamStore<float> init_params(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    nn::ParamStore<float> ps;
    const nn::Prng root(seed, "init." + std::string(to_string(cfg.kind)));
    auto stream = [&](const std::string& label) { return root.fork(label); };
    if (cfg.kind == ModelKind::Ggnn) {
        const int d = cfg.ggnn.hidden;
        if (cfg.input_dim != d) {
            auto p = stream("ggnn.proj");
            nn::init_linear(ps, "ggnn.proj", cfg.input_dim, d, p);
        }
        auto pa = stream("ggnn.A");
        Tensor<float> a(cpg::kNumEdgeTypes * d, d);
        for (int t = 0; t < cpg::kNumEdgeTypes; ++t) a.middleRows(t * d, d) = nn::xavier<float>(d, d, pa);
        ps.add("ggnn.A", std::move(a));
        auto pg = stream("ggnn.gru");
        nn::init_gru(ps, "ggnn.gru", d, d, pg);
    } else {
        const auto& t = cfg.transformer;
        auto p = stream("tr.proj");
        nn::init_linear(ps, "tr.proj", cfg.input_dim, t.attn_dim, p);
        for (int l = 0; l < t.layers; ++l) {
            const auto pre = layer_prefix(l);
            auto pl = stream(pre);
            nn::init_attention(ps, pre + ".attn", t.attn_dim, t.attn_dim, pl);
            nn::init_layer_norm(ps, pre + ".ln1", t.attn_dim);
            nn::init_linear(ps, pre + ".ff1", t.attn_dim, t.ffn_dim, pl);
            nn::init_linear(ps, pre + ".ff2", t.ffn_dim, t.attn_dim, pl);
            nn::init_layer_norm(ps, pre + ".ln2", t.attn_dim);
        }
    }
    auto ph = stream("head");
    nn::init_linear(ps, "head", cfg.output_dim(), 1, ph);
    return ps;
}

template <typename T>
Var<T> ggnn_forward(Tape<T>& tape, const nn::ParamStore<T>& ps, const GgnnConfig& cfg, const cpg::CodeGraph& g,
                    Var<T> x) {
    const auto n = static_cast<Eigen::Index>(g.size());
    if (x.rows() != n) throw ShapeMismatch("ggnn: " + std::to_string(x.rows()) + " node vectors for " +
                                           std::to_string(n) + " nodes");
    Var<T> h = ps.contains("ggnn.proj.W") ? nn::linear(tape, ps, "ggnn.proj", x) : x;
    if (h.cols() != cfg.hidden) throw ShapeMismatch("ggnn: node width does not match hidden size");
    if (cfg.steps == 0) return h;

    // incoming edges per type, accumulated in (dst, src) order
    std::array<std::vector<std::pair<int, int>>, cpg::kNumEdgeTypes> by_type;
    for (const auto& e : g.edges) by_type[static_cast<std::size_t>(e.type)].emplace_back(e.dst, e.src);
    std::array<std::vector<int>, cpg::kNumEdgeTypes> src, dst;
    for (std::size_t t = 0; t < by_type.size(); ++t) {
        std::sort(by_type[t].begin(), by_type[t].end());
        for (const auto& [d, s] : by_type[t]) {
            dst[t].push_back(d);
            src[t].push_back(s);
        }
    }
    const Var<T> a = tape.param(ps, "ggnn.A");
    std::vector<Var<T>> parts(cpg::kNumEdgeTypes);
    for (int step = 0; step < cfg.steps; ++step) {
        for (std::size_t t = 0; t < parts.size(); ++t) parts[t] = nn::aggregate_rows(h, src[t], dst[t], n);
        Var<T> msg = nn::matmul(nn::concat_cols<T>(parts), a);
        h = nn::gru_cell(tape, ps, "ggnn.gru", msg, h);
    }
    return h;
}

template <typename T>
Tensor<T> sinusoidal_positions(Eigen::Index n, Eigen::Index d) {
    Tensor<T> pe(n, d);
    for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index i = 0; i < d; ++i) {
            const double angle = static_cast<double>(p) / std::pow(10000.0, static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
            pe(p, i) = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
        }
    return pe;
}

template <typename T>
Var<T> transformer_forward(Tape<T>& tape, const nn::ParamStore<T>& ps, const TransformerConfig& cfg, Var<T> x,
                           bool train, nn::Prng* dropout) {
    const Eigen::Index n = x.rows();
    if (n > cfg.max_seq)
        throw SequenceTooLong(std::to_string(n) + " positions exceed max_seq " + std::to_string(cfg.max_seq));
    const bool drop = train && cfg.dropout > 0;
    if (drop && !dropout) throw InvalidConfig("transformer: dropout stream required in training mode");
    auto maybe_drop = [&](Var<T> v) { return drop ? nn::dropout(v, cfg.dropout, *dropout, true) : v; };

    Var<T> h = nn::add_const(nn::linear(tape, ps, "tr.proj", x), sinusoidal_positions<T>(n, cfg.attn_dim));
    h = maybe_drop(h);
    for (int l = 0; l < cfg.layers; ++l) {
        const auto pre = layer_prefix(l);
        // one graph per pass, so no padded positions to mask
        auto att = nn::self_attention(tape, ps, pre + ".attn", h, {}, cfg.heads);
        h = nn::layer_norm(tape, ps, pre + ".ln1", nn::add(h, maybe_drop(att.out)));
        Var<T> f = nn::linear(tape, ps, pre + ".ff2", nn::gelu(nn::linear(tape, ps, pre + ".ff1", h)));
        h = nn::layer_norm(tape, ps, pre + ".ln2", nn::add(h, maybe_drop(f)));
    }
    return h;
}

template <typename T>
Var<T> score_nodes(Tape<T>& tape, const nn::ParamStore<T>& ps, Var<T> h) {
    return nn::linear(tape, ps, "head", h);
}

template <typename T>
Var<T> forward_scores(Tape<T>& tape, const ModelConfig& cfg, const nn::ParamStore<T>& ps, const cpg::CodeGraph& g,
                      const Tensor<T>& x, bool train, nn::Prng* dropout) {
    if (x.cols() != cfg.input_dim)
        throw ShapeMismatch("node vectors are " + std::to_string(x.cols()) + " wide, model expects " +
                            std::to_string(cfg.input_dim));
    if (x.rows() != static_cast<Eigen::Index>(g.size())) throw ShapeMismatch("one node vector per node required");
    Var<T> in = tape.constant(x);
    Var<T> h = cfg.kind == ModelKind::Ggnn ? ggnn_forward(tape, ps, cfg.ggnn, g, in)
                                           : transformer_forward(tape, ps, cfg.transformer, in, train, dropout);
    return score_nodes(tape, ps, h);
}

int argmax(std::span<const float> s) {
    if (s.empty()) throw EmptyScoreVector("no scores");
    int best = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i] > s[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    return best;
}

Prediction predict(std::span<const float> s) {
    Prediction p;
    p.node = argmax(s);
    const double m = s[static_cast<std::size_t>(p.node)];
    double z = 0;
    p.probs.reserve(s.size());
    for (float v : s) z += p.probs.emplace_back(std::exp(static_cast<double>(v) - m));
    for (double& v : p.probs) v /= z;
    return p;
}

nn::Checkpoint Bundle::to_checkpoint() const {
    nn::Checkpoint ck;
    ck.model_kind = std::string(to_string(cfg.kind));
    const auto emb = embedding.to_checkpoint();
    ck.config = {{"model", cfg.to_json()}, {"embedding", emb.config}};
    ck.tensors = params;
    ck.tensors.add("embedding", embedding.vectors);
    ck.provenance = provenance;
    ck.provenance["embedding"] = emb.provenance;
    return ck;
}

Bundle Bundle::from_checkpoint(const nn::Checkpoint& ck) {
    if (ck.model_kind != "ggnn" && ck.model_kind != "transformer")
        throw nn::BadCheckpoint("expected a model checkpoint, found '" + ck.model_kind + "'");
    try {
        Bundle b;
        b.cfg = ModelConfig::from_json(ck.config.at("model"));
        nn::Checkpoint emb;
        emb.model_kind = "embedding";
        emb.config = ck.config.at("embedding");
        emb.tensors.add("embedding", ck.tensors.at("embedding"));
        emb.provenance = ck.provenance.at("embedding");
        b.embedding = embed::EmbeddingTable::from_checkpoint(emb);
        for (const auto& [name, t] : ck.tensors)
            if (name != "embedding") b.params.add(name, t);
        b.provenance = ck.provenance;
        b.provenance.erase("embedding");
        const auto expect = init_params(b.cfg, 0);
        if (expect.size() != b.params.size()) throw nn::BadCheckpoint("parameter set does not match the config");
        for (const auto& [name, t] : expect) {
            const auto& got = b.params.at(name);
            if (got.rows() != t.rows() || got.cols() != t.cols())
                throw nn::BadCheckpoint("parameter '" + name + "' has the wrong shape");
        }
        if (b.embedding.node_width() != b.cfg.input_dim)
            throw nn::BadCheckpoint("embedding width does not match the model input");
        return b;
    } catch (const nlohmann::json::exception& e) {
        throw nn::BadCheckpoint(std::string("malformed model header: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == "UnknownParameter") throw nn::BadCheckpoint(e.what());
        throw;
    }
}

std::vector<float> Bundle::score(const cpg::CodeGraph& g) const {
    Tape<float> tape(false);
    const auto s = forward_scores(tape, cfg, params, g, embed::vectorize_graph(g, embedding));
    return {s.value().data(), s.value().data() + s.value().size()};
}

#define VLOC_INSTANTIATE(T)                                                                                     \
    template Var<T> ggnn_forward(Tape<T>&, const nn::ParamStore<T>&, const GgnnConfig&, const cpg::CodeGraph&, \
                                 Var<T>);                                                                       \
    template Var<T> transformer_forward(Tape<T>&, const nn::ParamStore<T>&, const TransformerConfig&, Var<T>,   \
                                        bool, nn::Prng*);                                                       \
    template Var<T> score_nodes(Tape<T>&, const nn::ParamStore<T>&, Var<T>);                                    \
    template Var<T> forward_scores(Tape<T>&, const ModelConfig&, const nn::ParamStore<T>&,                      \
                                   const cpg::CodeGraph&, const Tensor<T>&, bool, nn::Prng*);                   \
    template Tensor<T> sinusoidal_positions(Eigen::Index, Eigen::Index);

VLOC_INSTANTIATE(float)
VLOC_INSTANTIATE(double)
VLOC_INSTANTIATE(long double)

} // namespace vloc::models
