#pragma once

#include <optional>
#include <span>
#include <vector>

#include "vloc/cpg/graph.hpp"
#include "vloc/embed/word2vec.hpp"
#include "vloc/models/config.hpp"
#include "vloc/nn/layers.hpp"

namespace vloc::models {

/// Registers every parameter of the model (encoder + head) under a
/// per-group PRNG stream derived from `seed`.
nn::ParamStore<float> init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Per-node states after K gated propagation steps over typed edges.
template <typename T>
nn::Var<T> ggnn_forward(nn::Tape<T>& tape, const nn::ParamStore<T>& ps, const GgnnConfig& cfg,
                        const cpg::CodeGraph& g, nn::Var<T> x);

/// Encoder stack over the node sequence in id order (dummy first).
/// `dropout` is used only when `train` is set.
template <typename T>
nn::Var<T> transformer_forward(nn::Tape<T>& tape, const nn::ParamStore<T>& ps, const TransformerConfig& cfg,
                               nn::Var<T> x, bool train, nn::Prng* dropout);

/// s_i = w·h_i + b with one shared scalar bias; shape |V| × 1.
template <typename T>
nn::Var<T> score_nodes(nn::Tape<T>& tape, const nn::ParamStore<T>& ps, nn::Var<T> h);

/// Node vectors → raw scores for the configured encoder.
template <typename T>
nn::Var<T> forward_scores(nn::Tape<T>& tape, const ModelConfig& cfg, const nn::ParamStore<T>& ps,
                          const cpg::CodeGraph& g, const nn::Tensor<T>& x, bool train = false,
                          nn::Prng* dropout = nullptr);

template <typename T>
nn::Tensor<T> sinusoidal_positions(Eigen::Index n, Eigen::Index d);

struct Prediction {
    int node = 0;
    std::vector<double> probs;
};

/// Index of the highest score, lowest index on ties.
int argmax(std::span<const float> s);
Prediction predict(std::span<const float> s);

/// A trained model with the embedding table it was trained against.
struct Bundle {
    ModelConfig cfg;
    nn::ParamStore<float> params;
    embed::EmbeddingTable embedding;
    nlohmann::ordered_json provenance = nlohmann::ordered_json::object();

    nn::Checkpoint to_checkpoint() const;
    static Bundle from_checkpoint(const nn::Checkpoint& ck);

    /// Inference scores, one per node.
    std::vector<float> score(const cpg::CodeGraph& g) const;
};

} // namespace vloc::models
