#include "vloc/embed/vectorize.hpp"

namespace vloc::embed {

namespace {

void fill(Eigen::Ref<Eigen::Matrix<float, 1, Eigen::Dynamic>> dst, const cpg::GraphNode& node,
          const EmbeddingTable& table) {
    const int d = table.dim();
    dst.setZero();
    const auto n = std::min<std::size_t>(node.tokens.size(), static_cast<std::size_t>(table.cfg.t_max));
    for (std::size_t i = 0; i < n; ++i)
        dst.segment(static_cast<Eigen::Index>(i) * d, d) = table.vectors.row(table.vocab.index(node.tokens[i]));
}

} // namespace

Eigen::Matrix<float, 1, Eigen::Dynamic> vectorize_node(const cpg::GraphNode& node, const EmbeddingTable& table) {
    Eigen::Matrix<float, 1, Eigen::Dynamic> v(table.node_width());
    fill(v, node, table);
    return v;
}

nn::Tensor<float> vectorize_graph(const cpg::CodeGraph& g, const EmbeddingTable& table) {
    nn::Tensor<float> out(static_cast<Eigen::Index>(g.nodes.size()), table.node_width());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) fill(out.row(static_cast<Eigen::Index>(i)), g.nodes[i], table);
    return out;
}

} // namespace vloc::embed
