#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "vloc/nn/tensor.hpp"

namespace vloc::nn {

VLOC_DEFINE_ERROR(BadCheckpoint);

inline constexpr std::string_view kCheckpointMagic = "VELVETCK";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// On-disk container: magic, u32 version, u64 header length, JSON header,
/// then little-endian float32 payloads in tensor-name order. All integers
/// are little-endian.
struct Checkpoint {
    std::string model_kind; // ggnn | transformer | embedding
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    ParamStore<float> tensors;
    nlohmann::ordered_json provenance = nlohmann::ordered_json::object();
};

std::string encode_checkpoint(const Checkpoint& ck);
/// `origin` names the source in error messages.
Checkpoint decode_checkpoint(std::string_view bytes, const std::string& origin = "<memory>");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace vloc::nn
