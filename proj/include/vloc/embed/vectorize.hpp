#pragma once

#include "vloc/embed/word2vec.hpp"

namespace vloc::embed {

/// First t_max token embeddings concatenated, zero-padded to t_max·dim.
Eigen::Matrix<float, 1, Eigen::Dynamic> vectorize_node(const cpg::GraphNode& node, const EmbeddingTable& table);

/// One row per node, in id order.
nn::Tensor<float> vectorize_graph(const cpg::CodeGraph& g, const EmbeddingTable& table);

} // namespace vloc::embed
