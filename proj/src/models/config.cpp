#include "vloc/models/config.hpp"

namespace vloc::models {

using ojson = nlohmann::ordered_json;

std::string_view to_string(ModelKind k) { return k == ModelKind::Ggnn ? "ggnn" : "transformer"; }

ModelKind model_kind_from_string(std::string_view s) {
    if (s == "ggnn") return ModelKind::Ggnn;
    if (s == "transformer") return ModelKind::Transformer;
    throw InvalidConfig("unknown model kind '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
    if (input_dim < 1) throw InvalidConfig("input_dim must be positive");
    if (kind == ModelKind::Ggnn) {
        if (ggnn.hidden < 1 || ggnn.steps < 0) throw InvalidConfig("ggnn needs hidden >= 1 and steps >= 0");
        return;
    }
    const auto& t = transformer;
    if (t.layers < 0 || t.heads < 1 || t.attn_dim < 1 || t.ffn_dim < 1 || t.max_seq < 1)
        throw InvalidConfig("transformer sizes must be positive");
    if (t.attn_dim % t.heads != 0) throw InvalidConfig("attn_dim must be divisible by heads");
    if (t.dropout < 0 || t.dropout >= 1) throw InvalidConfig("dropout must be in [0, 1)");
}

ojson ModelConfig::to_json() const {
    ojson j = {{"kind", to_string(kind)}, {"input_dim", input_dim}};
    if (kind == ModelKind::Ggnn) {
        j["hidden"] = ggnn.hidden;
        j["steps"] = ggnn.steps;
    } else {
        const auto& t = transformer;
        j["layers"] = t.layers;
        j["heads"] = t.heads;
        j["attn_dim"] = t.attn_dim;
        j["ffn_dim"] = t.ffn_dim;
        j["max_seq"] = t.max_seq;
        j["dropout"] = t.dropout;
    }
    return j;
}

ModelConfig ModelConfig::from_json(const ojson& j) {
    try {
        ModelConfig c;
        c.kind = model_kind_from_string(j.at("kind").get<std::string>());
        c.input_dim = j.value("input_dim", c.input_dim);
        if (c.kind == ModelKind::Ggnn) {
            c.ggnn.hidden = j.value("hidden", c.ggnn.hidden);
            c.ggnn.steps = j.value("steps", c.ggnn.steps);
        } else {
            auto& t = c.transformer;
            t.layers = j.value("layers", t.layers);
            t.heads = j.value("heads", t.heads);
            t.attn_dim = j.value("attn_dim", t.attn_dim);
            t.ffn_dim = j.value("ffn_dim", t.ffn_dim);
            t.max_seq = j.value("max_seq", t.max_seq);
            t.dropout = j.value("dropout", t.dropout);
        }
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig(std::string("model config: ") + e.what());
    }
}

} // namespace vloc::models
