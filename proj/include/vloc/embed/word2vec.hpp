#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "vloc/embed/vocab.hpp"
#include "vloc/nn/checkpoint.hpp"

namespace vloc::embed {

struct Word2VecConfig {
    int dim = 32;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    double lr = 0.025;
    int min_count = 1;
    std::uint64_t seed = 1;
    int t_max = 8;
};

struct EmbeddingTable {
    Vocab vocab;
    nn::Tensor<float> vectors; // |vocab| × dim, row 0 (<PAD>) all zero
    Word2VecConfig cfg;
    std::string corpus_fingerprint;

    int dim() const { return static_cast<int>(vectors.cols()); }
    int node_width() const { return cfg.t_max * dim(); }
    /// Identity of vocabulary + vectors; models trained on one table refuse another.
    std::string fingerprint() const;

    nn::Checkpoint to_checkpoint() const;
    static EmbeddingTable from_checkpoint(const nn::Checkpoint& ck);
};

/// (center, context) index pairs with |i − j| ≤ window, j ≠ i, in center order.
std::vector<std::pair<int, int>> skipgram_pairs(std::span<const int> seq, int window);

/// Negative-sampling loss for one pair and its gradient pieces:
///   L = −log σ(u_o·v_c) − Σ_k log σ(−u_k·v_c)
/// with v = rows of `in`, u = rows of `out`. d_out[j] pairs with rows[j]
/// where rows = {context, negatives...}.
template <typename T>
struct SgnsGrad {
    T loss = 0;
    Eigen::Matrix<T, 1, Eigen::Dynamic> d_center;
    std::vector<int> rows;
    std::vector<Eigen::Matrix<T, 1, Eigen::Dynamic>> d_out;
};

template <typename T>
SgnsGrad<T> sgns_pair(const nn::Tensor<T>& in, const nn::Tensor<T>& out, int center, int context,
                      std::span<const int> negatives);

/// Skip-gram with negative sampling over the token sequences. Deterministic
/// for a given seed; single-threaded. Mean pair loss per epoch goes to
/// `epoch_loss` when given.
EmbeddingTable train_word2vec(std::span<const std::vector<std::string>> sequences, const Word2VecConfig& cfg,
                              std::vector<double>* epoch_loss = nullptr);

std::string corpus_fingerprint(std::span<const std::vector<std::string>> sequences);

} // namespace vloc::embed
