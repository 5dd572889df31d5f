#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vloc/cpg/graph.hpp"

namespace vloc::cpg {

inline constexpr int kSchemaVersion = 1;

/// One JSONL record, no trailing newline.
std::string serialize(const Sample& s);
Sample deserialize(std::string_view line);

std::vector<Sample> read_samples(const std::filesystem::path& path);
std::string samples_to_jsonl(const std::vector<Sample>& samples);

} // namespace vloc::cpg
