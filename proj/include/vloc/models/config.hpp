#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "vloc/common/error.hpp"

namespace vloc::models {

VLOC_DEFINE_ERROR(SequenceTooLong);
VLOC_DEFINE_ERROR(EmptyScoreVector);
VLOC_DEFINE_ERROR(InvalidConfig);

enum class ModelKind { Ggnn, Transformer };

std::string_view to_string(ModelKind k);
ModelKind model_kind_from_string(std::string_view s);

struct GgnnConfig {
    int hidden = 256;
    int steps = 8;

    /// Narrower state for single-machine runs.
    static GgnnConfig desk() { return {64, 8}; }
};

struct TransformerConfig {
    int layers = 6;
    int heads = 8;
    int attn_dim = 512;
    int ffn_dim = 2048;
    int max_seq = 512;
    double dropout = 0.1;

    static TransformerConfig desk() { return {2, 4, 128, 256, 512, 0.1}; }
};

struct ModelConfig {
    ModelKind kind = ModelKind::Ggnn;
    int input_dim = 256; // NodeVector width
    GgnnConfig ggnn = GgnnConfig::desk();
    TransformerConfig transformer = TransformerConfig::desk();

    /// Width of the per-node representation fed to the head.
    int output_dim() const { return kind == ModelKind::Ggnn ? ggnn.hidden : transformer.attn_dim; }
    void validate() const;

    nlohmann::ordered_json to_json() const;
    static ModelConfig from_json(const nlohmann::ordered_json& j);
};

} // namespace vloc::models
