#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vloc/cpg/graph.hpp"
#include "vloc/ensemble/ensemble.hpp"

namespace vloc::eval {

VLOC_DEFINE_ERROR(EmptyRecordSet);
VLOC_DEFINE_ERROR(InvalidK);

struct RankedNode {
    int node = 0;
    double score = 0;
    std::optional<int> line; // none for the dummy
};

struct PredictionRecord {
    std::string id;
    std::vector<RankedNode> ranking; // descending score, ascending index on ties
    int predicted_node = 0;
    std::optional<int> predicted_line;
    int label_node = 0;
    std::optional<int> true_line;

    bool vulnerable() const { return label_node > 0; }
    /// Distinct lines in rank order; the dummy takes a slot of its own.
    std::vector<std::optional<int>> ranked_lines(std::size_t limit) const;
    nlohmann::ordered_json to_json(std::size_t max_lines = 10) const;
};

PredictionRecord make_record(const std::string& id, const cpg::CodeGraph& g, std::span<const float> scores,
                             int label_node, std::optional<int> true_line);

bool topk_hit(const PredictionRecord& r, std::size_t k);
/// Over records with a vulnerable ground truth only.
double topk_accuracy(std::span<const PredictionRecord> records, std::size_t k);

/// |l_pred − l_true|; none when either line is undefined.
std::optional<int> prediction_distance(const PredictionRecord& r);

struct DistanceStats {
    double mean = 0;      // NaN when nothing was counted
    std::size_t counted = 0;
    std::size_t excluded = 0; // vulnerable records whose prediction is the dummy
};
DistanceStats distance_stats(std::span<const PredictionRecord> records);

struct ClassificationMetrics {
    double accuracy = 0, precision = 0, recall = 0, f1 = 0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};
ClassificationMetrics classification_metrics(std::span<const PredictionRecord> records);

/// Exact node match, the dummy counting as class 0.
double prediction_accuracy(std::span<const PredictionRecord> records);

struct SystemRow {
    std::string name;
    std::size_t records = 0;
    std::size_t vulnerable = 0;
    std::map<std::size_t, double> topk; // empty without vulnerable records
    DistanceStats distance;
    bool hybrid = false; // the set contains non-vulnerable samples
    double prediction_accuracy = 0;
    ClassificationMetrics cls;

    nlohmann::ordered_json to_json() const;
};

SystemRow summarize(const std::string& name, std::span<const PredictionRecord> records, std::span<const std::size_t> ks);

struct NamedSystem {
    std::string name;
    const ensemble::Ensemble* system;
};

struct SystemResult {
    SystemRow row;
    std::vector<PredictionRecord> records;
};

struct EvalReport {
    std::vector<std::size_t> ks;
    std::vector<SystemResult> systems;

    nlohmann::ordered_json to_json() const;
    std::string to_text() const;
    std::string records_jsonl() const;
};

std::vector<PredictionRecord> score_samples(const ensemble::Ensemble& system, std::span<const cpg::Sample> samples);

EvalReport compare_report(std::span<const NamedSystem> systems, std::span<const cpg::Sample> samples,
                          std::span<const std::size_t> ks);

/// "1,3,5" → {1, 3, 5}; rejects zero, junk and empty lists.
std::vector<std::size_t> parse_ks(const std::string& text);

} // namespace vloc::eval
