#pragma once

#include <filesystem>
#include <optional>
#include <span>

#include <json.hpp>

#include "vloc/cpg/graph.hpp"
#include "vloc/datagen/templates.hpp"

namespace vloc::datagen {

struct CorpusSpec {
    std::array<double, kAllKinds.size()> weights; // indexed by VulnKind
    int count = 100;
    double vulnerable_fraction = 0.5;
    Difficulty difficulty = Difficulty::Easy;
    std::uint64_t seed = 1;
    std::int64_t ts_start = -1; // -1: 1e6 for easy, 1e8 for hard
    std::int64_t ts_step = 10;

    CorpusSpec() { weights.fill(1.0 / static_cast<double>(kAllKinds.size())); }

    void validate() const;
    std::int64_t first_timestamp() const;
    nlohmann::ordered_json to_json() const;
    static CorpusSpec from_json(const nlohmann::ordered_json& j);
};

struct ManifestEntry {
    std::string path; // relative to the corpus directory
    bool vulnerable = false;
    std::optional<int> line;
    VulnKind kind = VulnKind::BufferOverrun;
    std::int64_t commit_ts = 0;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Corpus {
    std::vector<ManifestEntry> manifest;
    std::vector<std::string> sources; // parallel to manifest
};

/// Vulnerable functions are paired with their one-line-fixed twin as long as
/// both classes have members left; twins sit next to each other in emission
/// order. Kinds follow the weights by largest-remainder rounding.
Corpus generate_corpus(const CorpusSpec& spec);

/// Writes sources under `dir/src/<hh>/<hash>.c` and `dir/manifest.jsonl`.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

std::string manifest_to_jsonl(std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Integer counts for `total` items in proportion to `weights`, largest
/// remainder first, ties by lower index.
std::vector<int> largest_remainder(std::span<const double> weights, int total);

struct SampleSet {
    std::vector<cpg::Sample> samples;
    std::vector<std::string> skipped; // "path: reason"
};

/// Parses, builds and annotates each manifest entry. Oversized graphs are
/// skipped and listed; any other failure is raised with the file named.
SampleSet manifest_to_samples(std::span<const ManifestEntry> entries, const std::filesystem::path& base_dir,
                              int max_nodes = 512);

} // namespace vloc::datagen
