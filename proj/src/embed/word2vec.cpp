#include "vloc/embed/word2vec.hpp"

#include <algorithm>
#include <cmath>

#include "vloc/common/io.hpp"
#include "vloc/nn/prng.hpp"

namespace vloc::embed {

using ojson = nlohmann::ordered_json;

std::vector<std::pair<int, int>> skipgram_pairs(std::span<const int> seq, int window) {
    std::vector<std::pair<int, int>> out;
    const int n = static_cast<int>(seq.size());
    for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - window); j <= std::min(n - 1, i + window); ++j)
            if (j != i) out.emplace_back(seq[static_cast<std::size_t>(i)], seq[static_cast<std::size_t>(j)]);
    return out;
}

template <typename T>
SgnsGrad<T> sgns_pair(const nn::Tensor<T>& in, const nn::Tensor<T>& out, int center, int context,
                      std::span<const int> negatives) {
    SgnsGrad<T> g;
    const auto v = in.row(center);
    g.d_center = Eigen::Matrix<T, 1, Eigen::Dynamic>::Zero(in.cols());
    auto term = [&](int row, T sign) {
        const T s = sign * out.row(row).dot(v);
        // −log σ(s) = log(1 + e^{−s}), d/ds = −σ(−s)
        g.loss += s > 0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s));
        const T coeff = -sign / (T(1) + std::exp(s));
        g.d_center += coeff * out.row(row);
        g.rows.push_back(row);
        g.d_out.push_back(coeff * v);
    };
    term(context, T(1));
    for (int k : negatives) term(k, T(-1));
    return g;
}

template SgnsGrad<float> sgns_pair(const nn::Tensor<float>&, const nn::Tensor<float>&, int, int, std::span<const int>);
template SgnsGrad<double> sgns_pair(const nn::Tensor<double>&, const nn::Tensor<double>&, int, int,
                                    std::span<const int>);

std::string corpus_fingerprint(std::span<const std::vector<std::string>> sequences) {
    std::uint64_t h = fnv1a("");
    for (const auto& seq : sequences) {
        for (const auto& t : seq) h = fnv1a(t + '\x1f', h);
        h = fnv1a("\x1e", h);
    }
    return hex64(h);
}

EmbeddingTable train_word2vec(std::span<const std::vector<std::string>> sequences, const Word2VecConfig& cfg,
                              std::vector<double>* epoch_loss) {
    if (cfg.dim < 1 || cfg.window < 1 || cfg.negatives < 0 || cfg.epochs < 0 || cfg.t_max < 1 || !(cfg.lr > 0))
        throw Error("InvalidConfig", "word2vec settings out of range");
    EmbeddingTable table{Vocab::build(sequences, cfg.min_count), {}, cfg, corpus_fingerprint(sequences)};
    const auto V = static_cast<Eigen::Index>(table.vocab.size());

    std::vector<std::vector<int>> ids;
    std::vector<double> counts(static_cast<std::size_t>(V), 0.0);
    std::size_t total_pairs = 0;
    for (const auto& seq : sequences) {
        auto& row = ids.emplace_back();
        for (const auto& t : seq) {
            row.push_back(table.vocab.index(t));
            counts[static_cast<std::size_t>(row.back())] += 1.0;
        }
        total_pairs += skipgram_pairs(row, cfg.window).size();
    }

    nn::Prng init(cfg.seed, "word2vec.init");
    nn::Tensor<float> in(V, cfg.dim);
    for (Eigen::Index i = 0; i < in.size(); ++i)
        in.data()[i] = static_cast<float>((init.uniform() - 0.5) / cfg.dim);
    in.row(kPad).setZero();
    nn::Tensor<float> out = nn::Tensor<float>::Zero(V, cfg.dim);

    // unigram^0.75 noise distribution as a cumulative table
    std::vector<double> cdf(static_cast<std::size_t>(V));
    double acc = 0.0;
    for (std::size_t i = 0; i < cdf.size(); ++i) cdf[i] = acc += std::pow(counts[i], 0.75);

    const double work = static_cast<double>(total_pairs) * cfg.epochs;
    double done = 0.0;
    std::vector<int> negs;
    for (int epoch = 0; epoch < cfg.epochs && total_pairs > 0; ++epoch) {
        nn::Prng prng = init.fork("epoch." + std::to_string(epoch));
        double loss = 0.0;
        for (const auto& seq : ids)
            for (const auto& [c, o] : skipgram_pairs(seq, cfg.window)) {
                const float lr = static_cast<float>(cfg.lr * std::max(1e-4, 1.0 - done / work));
                done += 1.0;
                negs.clear();
                for (int k = 0; k < cfg.negatives; ++k) {
                    const double u = prng.uniform() * acc;
                    auto idx = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
                    idx = std::min(idx, static_cast<int>(V) - 1);
                    if (idx != o) negs.push_back(idx);
                }
                if (c == kPad || o == kPad) continue;
                const auto g = sgns_pair(in, out, c, o, negs);
                for (std::size_t j = 0; j < g.rows.size(); ++j) out.row(g.rows[j]) -= lr * g.d_out[j];
                in.row(c) -= lr * g.d_center;
                loss += g.loss;
            }
        if (epoch_loss) epoch_loss->push_back(loss / static_cast<double>(total_pairs));
    }
    if (!in.allFinite()) throw NonFiniteValue("word2vec produced non-finite embeddings");
    table.vectors = std::move(in);
    return table;
}

std::string EmbeddingTable::fingerprint() const {
    std::uint64_t h = fnv1a("");
    for (const auto& t : vocab.tokens()) h = fnv1a(t + '\x1f', h);
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(vectors.data()),
                               static_cast<std::size_t>(vectors.size()) * sizeof(float)),
              h);
    return hex64(h);
}

nn::Checkpoint EmbeddingTable::to_checkpoint() const {
    nn::Checkpoint ck;
    ck.model_kind = "embedding";
    ck.config = {{"dim", cfg.dim},       {"window", cfg.window}, {"negatives", cfg.negatives},
                 {"epochs", cfg.epochs}, {"lr", cfg.lr},         {"min_count", cfg.min_count},
                 {"seed", cfg.seed},     {"t_max", cfg.t_max},   {"vocab", vocab.tokens()}};
    ck.tensors.add("embedding", vectors);
    ck.provenance = {{"corpus_fingerprint", corpus_fingerprint}, {"fingerprint", fingerprint()}};
    return ck;
}

EmbeddingTable EmbeddingTable::from_checkpoint(const nn::Checkpoint& ck) {
    if (ck.model_kind != "embedding")
        throw nn::BadCheckpoint("expected an embedding checkpoint, found '" + ck.model_kind + "'");
    try {
        EmbeddingTable t;
        const auto& c = ck.config;
        t.cfg.dim = c.at("dim").get<int>();
        t.cfg.window = c.at("window").get<int>();
        t.cfg.negatives = c.at("negatives").get<int>();
        t.cfg.epochs = c.at("epochs").get<int>();
        t.cfg.lr = c.at("lr").get<double>();
        t.cfg.min_count = c.at("min_count").get<int>();
        t.cfg.seed = c.at("seed").get<std::uint64_t>();
        t.cfg.t_max = c.at("t_max").get<int>();
        t.vocab = Vocab::from_tokens(c.at("vocab").get<std::vector<std::string>>(), t.cfg.min_count);
        t.vectors = ck.tensors.at("embedding");
        t.corpus_fingerprint = ck.provenance.at("corpus_fingerprint").get<std::string>();
        if (t.vectors.rows() != static_cast<Eigen::Index>(t.vocab.size()) || t.vectors.cols() != t.cfg.dim)
            throw nn::BadCheckpoint("embedding shape does not match its vocabulary");
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw nn::BadCheckpoint(std::string("malformed embedding config: ") + e.what());
    }
}

} // namespace vloc::embed
