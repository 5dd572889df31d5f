#pragma once

#include <functional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "vloc/nn/prng.hpp"
#include "vloc/nn/tensor.hpp"

namespace vloc::nn {

template <typename T>
class Tape;

/// Handle to a value recorded on a Tape.
template <typename T>
struct Var {
    Tape<T>* tape = nullptr;
    int id = -1;

    const Tensor<T>& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode autodiff over 2-D tensors. A tape built with record=false
/// only evaluates (inference); gradients are then unavailable.
template <typename T>
class Tape {
  public:
    explicit Tape(bool record = true) : record_(record) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return record_; }

    Var<T> constant(Tensor<T> value) { return push(std::move(value), false, {}); }

    /// Trainable leaf bound to `store[name]`; repeated calls return the same leaf.
    Var<T> param(const ParamStore<T>& store, const std::string& name) {
        for (const auto& [n, id] : params_)
            if (n == name) return {this, id};
        Var<T> v = push(store.at(name), record_, {});
        params_.emplace_back(name, v.id);
        return v;
    }

    const Tensor<T>& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    Tensor<T>& grad(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
    bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

    /// Records an op result. `backward` runs with the output id once the
    /// output gradient is final.
    Var<T> push(Tensor<T> value, bool needs_grad, std::function<void(Tape&, int)> backward,
                const char* op = "leaf") {
        if (!value.allFinite()) throw NonFiniteValue(std::string("op '") + op + "' produced NaN/Inf");
        Node n;
        n.value = std::move(value);
        n.needs_grad = needs_grad && record_;
        if (n.needs_grad) n.backward = std::move(backward);
        nodes_.push_back(std::move(n));
        return {this, static_cast<int>(nodes_.size()) - 1};
    }

    /// Backpropagates from a 1×1 loss.
    void backward(Var<T> loss) {
        if (!record_) throw Error("TapeNotRecording", "backward on an inference tape");
        const auto& lv = value(loss.id);
        if (lv.size() != 1) throw ShapeMismatch("backward needs a scalar loss");
        for (auto& n : nodes_)
            if (n.needs_grad) n.grad = Tensor<T>::Zero(n.value.rows(), n.value.cols());
        if (!needs_grad(loss.id)) return;
        grad(loss.id)(0, 0) = T(1);
        for (int i = loss.id; i >= 0; --i) {
            auto& n = nodes_[static_cast<std::size_t>(i)];
            if (n.needs_grad && n.backward) n.backward(*this, i);
        }
    }

    GradStore<T> param_grads() const {
        GradStore<T> out;
        for (const auto& [name, id] : params_) {
            const auto& n = nodes_[static_cast<std::size_t>(id)];
            out.emplace(name, n.grad.size() ? n.grad : Tensor<T>::Zero(n.value.rows(), n.value.cols()));
        }
        return out;
    }

    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        bool needs_grad = false;
        std::function<void(Tape&, int)> backward;
    };
    bool record_;
    std::vector<Node> nodes_;
    std::vector<std::pair<std::string, int>> params_;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
    return tape->value(id);
}

// ---- ops ------------------------------------------------------------------
// Each op checks shapes, evaluates eagerly, and records its exact adjoint.

template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
/// a · bᵀ
template <typename T> Var<T> matmul_nt(Var<T> a, Var<T> b);
template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
/// Adds a 1×n row (or a 1×1 scalar) to every row.
template <typename T> Var<T> add_row(Var<T> a, Var<T> row);
template <typename T> Var<T> add_const(Var<T> a, const Tensor<T>& c);
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
template <typename T> Var<T> scale(Var<T> a, std::type_identity_t<T> s);
template <typename T> Var<T> one_minus(Var<T> a);
template <typename T> Var<T> sigmoid(Var<T> a);
template <typename T> Var<T> tanh(Var<T> a);
/// tanh-approximated GELU
template <typename T> Var<T> gelu(Var<T> a);
/// Row-wise softmax. Columns with key_mask[c] == 0 receive exactly zero weight.
template <typename T> Var<T> softmax_rows(Var<T> a, std::span<const char> key_mask = {});
template <typename T> Var<T> layer_norm_rows(Var<T> x, Var<T> gamma, Var<T> beta, T eps = T(1e-5));
template <typename T> Var<T> concat_cols(std::span<const Var<T>> parts);
template <typename T> Var<T> slice_cols(Var<T> a, Eigen::Index start, Eigen::Index len);
/// out[dst[k]] += a[src[k]] over rows, out has n_out rows.
template <typename T>
Var<T> aggregate_rows(Var<T> a, std::span<const int> src, std::span<const int> dst, Eigen::Index n_out);
/// Σ a ⊙ c as a 1×1 value.
template <typename T> Var<T> dot_const(Var<T> a, const Tensor<T>& c);
template <typename T> Var<T> sum(Var<T> a);
/// Inverted dropout; the identity (same handle) when !train or p == 0.
template <typename T> Var<T> dropout(Var<T> a, double p, Prng& prng, bool train);
/// −log probs[target] for a vector of probabilities.
template <typename T> Var<T> cross_entropy(Var<T> probs, Eigen::Index target);
/// −log softmax(scores)[target], computed stably.
template <typename T> Var<T> softmax_cross_entropy(Var<T> scores, Eigen::Index target);

} // namespace vloc::nn
