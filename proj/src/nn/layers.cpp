#include "vloc/nn/layers.hpp"

#include <cmath>

namespace vloc::nn {

template <typename T>
Tensor<T> xavier(Eigen::Index rows, Eigen::Index cols, Prng& prng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor<T> w(rows, cols);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>((2.0 * prng.uniform() - 1.0) * limit);
    return w;
}

template <typename T>
void init_linear(ParamStore<T>& ps, const std::string& prefix, Eigen::Index in, Eigen::Index out, Prng& prng,
                 bool bias) {
    ps.add(prefix + ".W", xavier<T>(in, out, prng));
    if (bias) ps.add(prefix + ".b", Tensor<T>::Zero(1, out));
}

template <typename T>
void init_gru(ParamStore<T>& ps, const std::string& prefix, Eigen::Index in, Eigen::Index hidden, Prng& prng) {
    // input weights for [z | r | n], recurrent weights for [z | r] and n
    Tensor<T> wx(in, 3 * hidden);
    for (int g = 0; g < 3; ++g) wx.middleCols(g * hidden, hidden) = xavier<T>(in, hidden, prng);
    Tensor<T> uzr(hidden, 2 * hidden);
    for (int g = 0; g < 2; ++g) uzr.middleCols(g * hidden, hidden) = xavier<T>(hidden, hidden, prng);
    ps.add(prefix + ".Wx", std::move(wx));
    ps.add(prefix + ".Uzr", std::move(uzr));
    ps.add(prefix + ".Un", xavier<T>(hidden, hidden, prng));
    ps.add(prefix + ".b", Tensor<T>::Zero(1, 3 * hidden));
}

template <typename T>
void init_layer_norm(ParamStore<T>& ps, const std::string& prefix, Eigen::Index dim) {
    ps.add(prefix + ".gamma", Tensor<T>::Ones(1, dim));
    ps.add(prefix + ".beta", Tensor<T>::Zero(1, dim));
}

template <typename T>
void init_attention(ParamStore<T>& ps, const std::string& prefix, Eigen::Index model_dim, Eigen::Index attn_dim,
                    Prng& prng) {
    init_linear(ps, prefix + ".q", model_dim, attn_dim, prng);
    // a key bias shifts every score of a query equally, so softmax cancels it
    init_linear(ps, prefix + ".k", model_dim, attn_dim, prng, false);
    init_linear(ps, prefix + ".v", model_dim, attn_dim, prng);
    init_linear(ps, prefix + ".o", attn_dim, model_dim, prng);
}

template <typename T>
Var<T> linear(Tape<T>& tape, const ParamStore<T>& ps, const std::string& prefix, Var<T> x) {
    Var<T> y = matmul(x, tape.param(ps, prefix + ".W"));
    if (ps.contains(prefix + ".b")) y = add_row(y, tape.param(ps, prefix + ".b"));
    return y;
}

template <typename T>
Var<T> gru_cell(Tape<T>& tape, const ParamStore<T>& ps, const std::string& prefix, Var<T> x, Var<T> h) {
    const Eigen::Index d = h.cols();
    if (x.rows() != h.rows()) throw ShapeMismatch("gru_cell: input and state row counts differ");
    Var<T> xw = add_row(matmul(x, tape.param(ps, prefix + ".Wx")), tape.param(ps, prefix + ".b"));
    if (xw.cols() != 3 * d) throw ShapeMismatch("gru_cell: state width does not match parameters");
    Var<T> hu = matmul(h, tape.param(ps, prefix + ".Uzr"));
    Var<T> z = sigmoid(add(slice_cols(xw, 0, d), slice_cols(hu, 0, d)));
    Var<T> r = sigmoid(add(slice_cols(xw, d, d), slice_cols(hu, d, d)));
    Var<T> n = tanh(add(slice_cols(xw, 2 * d, d), matmul(mul(r, h), tape.param(ps, prefix + ".Un"))));
    return add(mul(one_minus(z), n), mul(z, h));
}

template <typename T>
Var<T> layer_norm(Tape<T>& tape, const ParamStore<T>& ps, const std::string& prefix, Var<T> x) {
    return layer_norm_rows(x, tape.param(ps, prefix + ".gamma"), tape.param(ps, prefix + ".beta"));
}

template <typename T>
AttentionOut<T> multi_head_attention(Var<T> q, Var<T> k, Var<T> v, std::span<const char> key_mask, int heads) {
    if (heads < 1 || q.cols() % heads != 0)
        throw ShapeMismatch("attention: width " + std::to_string(q.cols()) + " not divisible by " +
                            std::to_string(heads) + " heads");
    if (k.cols() != q.cols() || v.cols() != q.cols() || k.rows() != v.rows())
        throw ShapeMismatch("attention: q/k/v shapes disagree");
    const Eigen::Index dh = q.cols() / heads;
    const T inv = T(1) / std::sqrt(static_cast<T>(dh));
    AttentionOut<T> res;
    std::vector<Var<T>> parts;
    for (int hd = 0; hd < heads; ++hd) {
        Var<T> qh = slice_cols(q, hd * dh, dh);
        Var<T> kh = slice_cols(k, hd * dh, dh);
        Var<T> vh = slice_cols(v, hd * dh, dh);
        Var<T> w = softmax_rows(scale(matmul_nt(qh, kh), inv), key_mask);
        res.weights.push_back(w);
        parts.push_back(matmul(w, vh));
    }
    res.out = heads == 1 ? parts.front() : concat_cols<T>(parts);
    return res;
}

template <typename T>
AttentionOut<T> self_attention(Tape<T>& tape, const ParamStore<T>& ps, const std::string& prefix, Var<T> x,
                               std::span<const char> key_mask, int heads) {
    auto res = multi_head_attention(linear(tape, ps, prefix + ".q", x), linear(tape, ps, prefix + ".k", x),
                                    linear(tape, ps, prefix + ".v", x), key_mask, heads);
    res.out = linear(tape, ps, prefix + ".o", res.out);
    return res;
}

#define VLOC_INSTANTIATE(T)                                                                                    \
    template Tensor<T> xavier(Eigen::Index, Eigen::Index, Prng&);                                             \
    template void init_linear(ParamStore<T>&, const std::string&, Eigen::Index, Eigen::Index, Prng&, bool);   \
    template void init_gru(ParamStore<T>&, const std::string&, Eigen::Index, Eigen::Index, Prng&);            \
    template void init_layer_norm(ParamStore<T>&, const std::string&, Eigen::Index);                          \
    template void init_attention(ParamStore<T>&, const std::string&, Eigen::Index, Eigen::Index, Prng&);      \
    template Var<T> linear(Tape<T>&, const ParamStore<T>&, const std::string&, Var<T>);                       \
    template Var<T> gru_cell(Tape<T>&, const ParamStore<T>&, const std::string&, Var<T>, Var<T>);             \
    template Var<T> layer_norm(Tape<T>&, const ParamStore<T>&, const std::string&, Var<T>);                   \
    template AttentionOut<T> multi_head_attention(Var<T>, Var<T>, Var<T>, std::span<const char>, int);        \
    template AttentionOut<T> self_attention(Tape<T>&, const ParamStore<T>&, const std::string&, Var<T>,       \
                                            std::span<const char>, int);

VLOC_INSTANTIATE(float)
VLOC_INSTANTIATE(double)
VLOC_INSTANTIATE(long double)

} // namespace vloc::nn
