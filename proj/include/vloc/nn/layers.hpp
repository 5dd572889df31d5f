#pragma once

#include <string>
#include <vector>

#include "vloc/nn/tape.hpp"

namespace vloc::nn {

/// Xavier-uniform matrix of shape rows×cols.
template <typename T>
Tensor<T> xavier(Eigen::Index rows, Eigen::Index cols, Prng& prng);

// Parameter registration. Every layer owns the names under `prefix + "."`.
template <typename T>
void init_linear(ParamStore<T>& ps, const std::string& prefix, Eigen::Index in, Eigen::Index out, Prng& prng,
                 bool bias = true);
template <typename T>
void init_gru(ParamStore<T>& ps, const std::string& prefix, Eigen::Index in, Eigen::Index hidden, Prng& prng);
template <typename T>
void init_layer_norm(ParamStore<T>& ps, const std::string& prefix, Eigen::Index dim);
template <typename T>
void init_attention(ParamStore<T>& ps, const std::string& prefix, Eigen::Index model_dim, Eigen::Index attn_dim,
                    Prng& prng);

/// x·W + b over rows.
template <typename T>
Var<T> linear(Tape<T>& tape, const ParamStore<T>& ps, const std::string& prefix, Var<T> x);

/// One GRU step per row: z, r gates and candidate n,
/// h' = (1 − z) ⊙ n + z ⊙ h.
template <typename T>
Var<T> gru_cell(Tape<T>& tape, const ParamStore<T>& ps, const std::string& prefix, Var<T> x, Var<T> h);

template <typename T>
Var<T> layer_norm(Tape<T>& tape, const ParamStore<T>& ps, const std::string& prefix, Var<T> x);

template <typename T>
struct AttentionOut {
    Var<T> out;
    std::vector<Var<T>> weights; // one (queries × keys) matrix per head
};

/// Scaled dot-product attention split over `heads` column groups of q/k/v.
/// key_mask[c] == 0 excludes key c (padding).
template <typename T>
AttentionOut<T> multi_head_attention(Var<T> q, Var<T> k, Var<T> v, std::span<const char> key_mask, int heads);

/// Self-attention with learned q/k/v/output projections.
template <typename T>
AttentionOut<T> self_attention(Tape<T>& tape, const ParamStore<T>& ps, const std::string& prefix, Var<T> x,
                               std::span<const char> key_mask, int heads);

} // namespace vloc::nn
