#include "vloc/nn/tape.hpp"

#include <cmath>
#include <numbers>

namespace vloc::nn {

namespace {

std::string dims(Eigen::Index r, Eigen::Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

template <typename T>
void require_same(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeMismatch(std::string(op) + ": " + dims(a.rows(), a.cols()) + " vs " + dims(b.rows(), b.cols()));
}

constexpr double kGeluK = 0.7978845608028654; // sqrt(2/pi)
constexpr double kGeluC = 0.044715;

template <typename T>
using VecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

} // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
    auto& t = *a.tape;
    const auto& A = a.value();
    const auto& B = b.value();
    if (A.cols() != B.rows())
        throw ShapeMismatch("matmul: " + dims(A.rows(), A.cols()) + " · " + dims(B.rows(), B.cols()));
    Tensor<T> C(A.rows(), B.cols());
    C.noalias() = A * B;
    const int ia = a.id, ib = b.id;
    return t.push(std::move(C), t.needs_grad(ia) || t.needs_grad(ib),
                  [ia, ib](Tape<T>& tp, int o) {
                      const auto& G = tp.grad(o);
                      if (tp.needs_grad(ia)) tp.grad(ia).noalias() += G * tp.value(ib).transpose();
                      if (tp.needs_grad(ib)) tp.grad(ib).noalias() += tp.value(ia).transpose() * G;
                  },
                  "matmul");
}

template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
    auto& t = *a.tape;
    const auto& A = a.value();
    const auto& B = b.value();
    if (A.cols() != B.cols())
        throw ShapeMismatch("matmul_nt: " + dims(A.rows(), A.cols()) + " · " + dims(B.rows(), B.cols()) + "ᵀ");
    Tensor<T> C(A.rows(), B.rows());
    C.noalias() = A * B.transpose();
    const int ia = a.id, ib = b.id;
    return t.push(std::move(C), t.needs_grad(ia) || t.needs_grad(ib),
                  [ia, ib](Tape<T>& tp, int o) {
                      const auto& G = tp.grad(o);
                      if (tp.needs_grad(ia)) tp.grad(ia).noalias() += G * tp.value(ib);
                      if (tp.needs_grad(ib)) tp.grad(ib).noalias() += G.transpose() * tp.value(ia);
                  },
                  "matmul_nt");
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
    auto& t = *a.tape;
    require_same("add", a.value(), b.value());
    const int ia = a.id, ib = b.id;
    return t.push(a.value() + b.value(), t.needs_grad(ia) || t.needs_grad(ib),
                  [ia, ib](Tape<T>& tp, int o) {
                      if (tp.needs_grad(ia)) tp.grad(ia) += tp.grad(o);
                      if (tp.needs_grad(ib)) tp.grad(ib) += tp.grad(o);
                  },
                  "add");
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
    auto& t = *a.tape;
    require_same("sub", a.value(), b.value());
    const int ia = a.id, ib = b.id;
    return t.push(a.value() - b.value(), t.needs_grad(ia) || t.needs_grad(ib),
                  [ia, ib](Tape<T>& tp, int o) {
                      if (tp.needs_grad(ia)) tp.grad(ia) += tp.grad(o);
                      if (tp.needs_grad(ib)) tp.grad(ib) -= tp.grad(o);
                  },
                  "sub");
}

template <typename T>
Var<T> add_row(Var<T> a, Var<T> row) {
    auto& t = *a.tape;
    const auto& A = a.value();
    const auto& R = row.value();
    const bool scalar = R.size() == 1;
    if (!scalar && (R.rows() != 1 || R.cols() != A.cols()))
        throw ShapeMismatch("add_row: " + dims(A.rows(), A.cols()) + " + " + dims(R.rows(), R.cols()));
    Tensor<T> C = A;
    if (scalar)
        C.array() += R(0, 0);
    else
        C.rowwise() += R.row(0);
    const int ia = a.id, ir = row.id;
    return t.push(std::move(C), t.needs_grad(ia) || t.needs_grad(ir),
                  [ia, ir, scalar](Tape<T>& tp, int o) {
                      const auto& G = tp.grad(o);
                      if (tp.needs_grad(ia)) tp.grad(ia) += G;
                      if (tp.needs_grad(ir)) {
                          if (scalar)
                              tp.grad(ir)(0, 0) += G.sum();
                          else
                              tp.grad(ir) += G.colwise().sum();
                      }
                  },
                  "add_row");
}

template <typename T>
Var<T> add_const(Var<T> a, const Tensor<T>& c) {
    auto& t = *a.tape;
    require_same("add_const", a.value(), c);
    const int ia = a.id;
    return t.push(a.value() + c, t.needs_grad(ia),
                  [ia](Tape<T>& tp, int o) { tp.grad(ia) += tp.grad(o); }, "add_const");
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
    auto& t = *a.tape;
    require_same("mul", a.value(), b.value());
    const int ia = a.id, ib = b.id;
    return t.push(a.value().cwiseProduct(b.value()), t.needs_grad(ia) || t.needs_grad(ib),
                  [ia, ib](Tape<T>& tp, int o) {
                      const auto& G = tp.grad(o);
                      if (tp.needs_grad(ia)) tp.grad(ia) += G.cwiseProduct(tp.value(ib));
                      if (tp.needs_grad(ib)) tp.grad(ib) += G.cwiseProduct(tp.value(ia));
                  },
                  "mul");
}

template <typename T>
Var<T> scale(Var<T> a, std::type_identity_t<T> s) {
    auto& t = *a.tape;
    const int ia = a.id;
    return t.push(a.value() * s, t.needs_grad(ia),
                  [ia, s](Tape<T>& tp, int o) { tp.grad(ia) += tp.grad(o) * s; }, "scale");
}

template <typename T>
Var<T> one_minus(Var<T> a) {
    auto& t = *a.tape;
    const int ia = a.id;
    Tensor<T> C = (T(1) - a.value().array()).matrix();
    return t.push(std::move(C), t.needs_grad(ia),
                  [ia](Tape<T>& tp, int o) { tp.grad(ia) -= tp.grad(o); }, "one_minus");
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
    auto& t = *a.tape;
    const int ia = a.id;
    Tensor<T> C = (T(1) / (T(1) + (-a.value().array()).exp())).matrix();
    return t.push(std::move(C), t.needs_grad(ia),
                  [ia](Tape<T>& tp, int o) {
                      const auto Y = tp.value(o).array();
                      tp.grad(ia).array() += tp.grad(o).array() * Y * (T(1) - Y);
                  },
                  "sigmoid");
}

template <typename T>
Var<T> tanh(Var<T> a) {
    auto& t = *a.tape;
    const int ia = a.id;
    Tensor<T> C = a.value().array().tanh().matrix();
    return t.push(std::move(C), t.needs_grad(ia),
                  [ia](Tape<T>& tp, int o) {
                      const auto Y = tp.value(o).array();
                      tp.grad(ia).array() += tp.grad(o).array() * (T(1) - Y * Y);
                  },
                  "tanh");
}

template <typename T>
Var<T> gelu(Var<T> a) {
    auto& t = *a.tape;
    const int ia = a.id;
    const T k = T(kGeluK), c = T(kGeluC);
    const auto X = a.value().array();
    Tensor<T> C = (T(0.5) * X * (T(1) + (k * (X + c * X.cube())).tanh())).matrix();
    return t.push(std::move(C), t.needs_grad(ia),
                  [ia, k, c](Tape<T>& tp, int o) {
                      const auto X = tp.value(ia).array();
                      const auto th = (k * (X + c * X.cube())).tanh();
                      const auto d = T(0.5) * (T(1) + th) +
                                     T(0.5) * X * (T(1) - th * th) * k * (T(1) + T(3) * c * X.square());
                      tp.grad(ia).array() += tp.grad(o).array() * d;
                  },
                  "gelu");
}

template <typename T>
Var<T> softmax_rows(Var<T> a, std::span<const char> key_mask) {
    auto& t = *a.tape;
    const auto& A = a.value();
    if (!key_mask.empty() && static_cast<Eigen::Index>(key_mask.size()) != A.cols())
        throw ShapeMismatch("softmax_rows: mask length " + std::to_string(key_mask.size()) + " vs " +
                            std::to_string(A.cols()) + " columns");
    Tensor<T> Y = Tensor<T>::Zero(A.rows(), A.cols());
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
        T m = -std::numeric_limits<T>::infinity();
        for (Eigen::Index c = 0; c < A.cols(); ++c)
            if (key_mask.empty() || key_mask[static_cast<std::size_t>(c)]) m = std::max(m, A(r, c));
        if (!std::isfinite(m)) continue; // every key masked
        T z = 0;
        for (Eigen::Index c = 0; c < A.cols(); ++c) {
            if (!key_mask.empty() && !key_mask[static_cast<std::size_t>(c)]) continue;
            Y(r, c) = std::exp(A(r, c) - m);
            z += Y(r, c);
        }
        Y.row(r) /= z;
    }
    const int ia = a.id;
    return t.push(std::move(Y), t.needs_grad(ia),
                  [ia](Tape<T>& tp, int o) {
                      const auto& Y = tp.value(o);
                      const auto& G = tp.grad(o);
                      const auto dots = (G.cwiseProduct(Y)).rowwise().sum();
                      tp.grad(ia).array() += Y.array() * (G.colwise() - dots).array();
                  },
                  "softmax_rows");
}

template <typename T>
Var<T> layer_norm_rows(Var<T> x, Var<T> gamma, Var<T> beta, T eps) {
    auto& t = *x.tape;
    const auto& X = x.value();
    const Eigen::Index n = X.cols();
    if (gamma.rows() != 1 || gamma.cols() != n || beta.rows() != 1 || beta.cols() != n)
        throw ShapeMismatch("layer_norm_rows: gain/bias must be 1x" + std::to_string(n));
    Tensor<T> xhat(X.rows(), n);
    Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std(X.rows());
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        const T mu = X.row(r).mean();
        const T var = (X.row(r).array() - mu).square().mean();
        inv_std(r) = T(1) / std::sqrt(var + eps);
        xhat.row(r) = (X.row(r).array() - mu) * inv_std(r);
    }
    Tensor<T> Y = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
    Y.rowwise() += beta.value().row(0);
    const int ix = x.id, ig = gamma.id, ib = beta.id;
    return t.push(std::move(Y), t.needs_grad(ix) || t.needs_grad(ig) || t.needs_grad(ib),
                  [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<T>& tp, int o) {
                      const auto& G = tp.grad(o);
                      if (tp.needs_grad(ig)) tp.grad(ig) += G.cwiseProduct(xhat).colwise().sum();
                      if (tp.needs_grad(ib)) tp.grad(ib) += G.colwise().sum();
                      if (!tp.needs_grad(ix)) return;
                      const auto& gam = tp.value(ig);
                      Tensor<T> dxhat = (G.array().rowwise() * gam.row(0).array()).matrix();
                      const auto m1 = dxhat.rowwise().mean();
                      const auto m2 = dxhat.cwiseProduct(xhat).rowwise().mean();
                      for (Eigen::Index r = 0; r < dxhat.rows(); ++r)
                          tp.grad(ix).row(r).array() +=
                              inv_std(r) * (dxhat.row(r).array() - m1(r) - xhat.row(r).array() * m2(r));
                  },
                  "layer_norm_rows");
}

template <typename T>
Var<T> concat_cols(std::span<const Var<T>> parts) {
    if (parts.empty()) throw ShapeMismatch("concat_cols: no inputs");
    auto& t = *parts.front().tape;
    const Eigen::Index rows = parts.front().rows();
    Eigen::Index cols = 0;
    bool ng = false;
    for (const auto& p : parts) {
        if (p.rows() != rows) throw ShapeMismatch("concat_cols: row counts differ");
        cols += p.cols();
        ng = ng || t.needs_grad(p.id);
    }
    Tensor<T> C(rows, cols);
    Eigen::Index at = 0;
    std::vector<std::pair<int, Eigen::Index>> pieces;
    for (const auto& p : parts) {
        C.middleCols(at, p.cols()) = p.value();
        pieces.emplace_back(p.id, at);
        at += p.cols();
    }
    return t.push(std::move(C), ng,
                  [pieces = std::move(pieces)](Tape<T>& tp, int o) {
                      const auto& G = tp.grad(o);
                      for (const auto& [id, off] : pieces)
                          if (tp.needs_grad(id)) tp.grad(id) += G.middleCols(off, tp.value(id).cols());
                  },
                  "concat_cols");
}

template <typename T>
Var<T> slice_cols(Var<T> a, Eigen::Index start, Eigen::Index len) {
    auto& t = *a.tape;
    if (start < 0 || len < 0 || start + len > a.cols()) throw ShapeMismatch("slice_cols: range out of bounds");
    const int ia = a.id;
    return t.push(a.value().middleCols(start, len), t.needs_grad(ia),
                  [ia, start, len](Tape<T>& tp, int o) { tp.grad(ia).middleCols(start, len) += tp.grad(o); },
                  "slice_cols");
}

template <typename T>
Var<T> aggregate_rows(Var<T> a, std::span<const int> src, std::span<const int> dst, Eigen::Index n_out) {
    auto& t = *a.tape;
    if (src.size() != dst.size()) throw ShapeMismatch("aggregate_rows: src/dst length differ");
    const auto& A = a.value();
    Tensor<T> C = Tensor<T>::Zero(n_out, A.cols());
    for (std::size_t k = 0; k < src.size(); ++k) {
        if (src[k] < 0 || src[k] >= A.rows() || dst[k] < 0 || dst[k] >= n_out)
            throw ShapeMismatch("aggregate_rows: index out of range");
        C.row(dst[k]) += A.row(src[k]);
    }
    const int ia = a.id;
    std::vector<int> s(src.begin(), src.end()), d(dst.begin(), dst.end());
    return t.push(std::move(C), t.needs_grad(ia),
                  [ia, s = std::move(s), d = std::move(d)](Tape<T>& tp, int o) {
                      const auto& G = tp.grad(o);
                      auto& ga = tp.grad(ia);
                      for (std::size_t k = 0; k < s.size(); ++k) ga.row(s[k]) += G.row(d[k]);
                  },
                  "aggregate_rows");
}

template <typename T>
Var<T> dot_const(Var<T> a, const Tensor<T>& c) {
    auto& t = *a.tape;
    require_same("dot_const", a.value(), c);
    Tensor<T> v(1, 1);
    v(0, 0) = a.value().cwiseProduct(c).sum();
    const int ia = a.id;
    return t.push(std::move(v), t.needs_grad(ia),
                  [ia, c](Tape<T>& tp, int o) { tp.grad(ia) += tp.grad(o)(0, 0) * c; }, "dot_const");
}

template <typename T>
Var<T> sum(Var<T> a) {
    auto& t = *a.tape;
    Tensor<T> v(1, 1);
    v(0, 0) = a.value().sum();
    const int ia = a.id;
    return t.push(std::move(v), t.needs_grad(ia),
                  [ia](Tape<T>& tp, int o) { tp.grad(ia).array() += tp.grad(o)(0, 0); }, "sum");
}

template <typename T>
Var<T> dropout(Var<T> a, double p, Prng& prng, bool train) {
    if (!train || p <= 0.0) return a;
    if (p >= 1.0) throw Error("InvalidDropout", "rate must be < 1");
    auto& t = *a.tape;
    const T keep = T(1.0 / (1.0 - p));
    Tensor<T> mask(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = prng.uniform() < p ? T(0) : keep;
    const int ia = a.id;
    Tensor<T> y = a.value().cwiseProduct(mask);
    return t.push(std::move(y), t.needs_grad(ia),
                  [ia, mask = std::move(mask)](Tape<T>& tp, int o) {
                      tp.grad(ia) += tp.grad(o).cwiseProduct(mask);
                  },
                  "dropout");
}

template <typename T>
Var<T> cross_entropy(Var<T> probs, Eigen::Index target) {
    auto& t = *probs.tape;
    const auto& P = probs.value();
    if (target < 0 || target >= P.size()) throw ShapeMismatch("cross_entropy: target out of range");
    const T pt = P.data()[target];
    if (!(pt > T(0))) throw NonFiniteValue("cross_entropy: zero probability on the target");
    Tensor<T> v(1, 1);
    v(0, 0) = -std::log(pt);
    const int ip = probs.id;
    return t.push(std::move(v), t.needs_grad(ip),
                  [ip, target, pt](Tape<T>& tp, int o) { tp.grad(ip).data()[target] -= tp.grad(o)(0, 0) / pt; },
                  "cross_entropy");
}

template <typename T>
Var<T> softmax_cross_entropy(Var<T> scores, Eigen::Index target) {
    auto& t = *scores.tape;
    const auto& S = scores.value();
    if (target < 0 || target >= S.size()) throw ShapeMismatch("softmax_cross_entropy: target out of range");
    const VecMap<T> s(S.data(), S.size());
    const T m = s.maxCoeff();
    const T lse = m + std::log((s.array() - m).exp().sum());
    Tensor<T> v(1, 1);
    v(0, 0) = lse - s(target);
    const int is = scores.id;
    return t.push(std::move(v), t.needs_grad(is),
                  [is, target, lse](Tape<T>& tp, int o) {
                      const auto& S = tp.value(is);
                      const T g = tp.grad(o)(0, 0);
                      auto& gs = tp.grad(is);
                      for (Eigen::Index i = 0; i < S.size(); ++i)
                          gs.data()[i] += g * std::exp(S.data()[i] - lse);
                      gs.data()[target] -= g;
                  },
                  "softmax_cross_entropy");
}

#define VLOC_INSTANTIATE(T)                                                                          \
    template Var<T> matmul(Var<T>, Var<T>);                                                          \
    template Var<T> matmul_nt(Var<T>, Var<T>);                                                       \
    template Var<T> add(Var<T>, Var<T>);                                                             \
    template Var<T> sub(Var<T>, Var<T>);                                                             \
    template Var<T> add_row(Var<T>, Var<T>);                                                         \
    template Var<T> add_const(Var<T>, const Tensor<T>&);                                             \
    template Var<T> mul(Var<T>, Var<T>);                                                             \
    template Var<T> scale(Var<T>, std::type_identity_t<T>);                                                                \
    template Var<T> one_minus(Var<T>);                                                               \
    template Var<T> sigmoid(Var<T>);                                                                 \
    template Var<T> tanh(Var<T>);                                                                    \
    template Var<T> gelu(Var<T>);                                                                    \
    template Var<T> softmax_rows(Var<T>, std::span<const char>);                                     \
    template Var<T> layer_norm_rows(Var<T>, Var<T>, Var<T>, T);                                      \
    template Var<T> concat_cols(std::span<const Var<T>>);                                            \
    template Var<T> slice_cols(Var<T>, Eigen::Index, Eigen::Index);                                  \
    template Var<T> aggregate_rows(Var<T>, std::span<const int>, std::span<const int>, Eigen::Index); \
    template Var<T> dot_const(Var<T>, const Tensor<T>&);                                             \
    template Var<T> sum(Var<T>);                                                                     \
    template Var<T> dropout(Var<T>, double, Prng&, bool);                                            \
    template Var<T> cross_entropy(Var<T>, Eigen::Index);                                             \
    template Var<T> softmax_cross_entropy(Var<T>, Eigen::Index);

VLOC_INSTANTIATE(float)
VLOC_INSTANTIATE(double)
VLOC_INSTANTIATE(long double)

} // namespace vloc::nn
