#pragma once

#include <array>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vloc/cpg/graph.hpp"
#include "vloc/models/model.hpp"

namespace vloc::pipeline {

VLOC_DEFINE_ERROR(TooFewSamples);
VLOC_DEFINE_ERROR(EmptyTrainSet);
VLOC_DEFINE_ERROR(NonFiniteLoss);
VLOC_DEFINE_ERROR(VocabMismatch);
VLOC_DEFINE_ERROR(InvalidTrainConfig);

enum class SplitOrder { Temporal, Given };

struct SplitConfig {
    std::array<double, 3> ratios{0.90, 0.05, 0.05}; // train, valid, test
    SplitOrder order = SplitOrder::Temporal;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    static SplitConfig from_json(const nlohmann::ordered_json& j);
};

struct SplitSizes {
    std::size_t train = 0, valid = 0, test = 0;
};

/// test = ⌈r_test·n⌉; train and valid share the rest by largest remainder.
/// Every part gets at least one sample.
SplitSizes split_sizes(std::size_t n, const SplitConfig& cfg);

struct Split {
    std::vector<cpg::Sample> train, valid, test;
};

/// Temporal order sorts by commit_ts (stable) so the latest samples are
/// tested; given order keeps the input sequence.
Split split_dataset(std::vector<cpg::Sample> samples, const SplitConfig& cfg);

struct TrainConfig {
    double lr = 1e-4;
    int max_epochs = 10;
    int patience = 3;
    int batch_size = 1;
    std::uint64_t seed = 1;
    bool vul_only = false;
    double min_delta = 1e-6;
    long max_steps = 0; // 0: unbounded

    static TrainConfig pretrain() { return {}; }
    static TrainConfig finetune() {
        TrainConfig c;
        c.lr = 1e-5;
        c.max_epochs = 50;
        return c;
    }

    void validate() const;
    nlohmann::ordered_json to_json() const;
    /// Missing keys fall back to `defaults`.
    static TrainConfig from_json(const nlohmann::ordered_json& j, const TrainConfig& defaults);
    static TrainConfig from_json(const nlohmann::ordered_json& j) { return from_json(j, TrainConfig{}); }
};

/// Stops once the monitored loss has gone `patience` epochs without
/// dropping more than `min_delta` below the best so far.
class EarlyStopping {
  public:
    EarlyStopping(int patience, double min_delta) : patience_(patience), min_delta_(min_delta) {}

    /// Returns true when this epoch is the new best.
    bool update(double loss);
    bool should_stop() const { return stale_ >= patience_; }
    int best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_; }

  private:
    int patience_;
    double min_delta_;
    int epoch_ = 0;
    int best_epoch_ = 0;
    int stale_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

struct EpochRecord {
    int epoch = 0;
    long steps = 0;
    double train_loss = 0;
    double valid_loss = 0; // NaN when there is no validation set
    double wall_ms = 0;

    nlohmann::ordered_json to_json() const;
};

struct TrainResult {
    models::Bundle best;
    std::vector<EpochRecord> history;
    int best_epoch = 0; // 0: the initial parameters
};

std::string history_to_jsonl(std::span<const EpochRecord> history);

/// Mean cross-entropy of the model over the samples (inference mode).
double mean_loss(const models::Bundle& model, std::span<const cpg::Sample> samples);

/// Trains from `seed`-initialized parameters. With `vul_only` both sets
/// are reduced to their vulnerable samples first. An empty validation set
/// makes the epoch's training loss drive early stopping.
TrainResult train(const models::ModelConfig& cfg, std::span<const cpg::Sample> train_set,
                  std::span<const cpg::Sample> valid_set, const TrainConfig& tc, const embed::EmbeddingTable& embedding);

/// Same loop, starting from `base`. A non-empty `expected_fingerprint`
/// must match the base's embedding table.
TrainResult finetune(const models::Bundle& base, std::span<const cpg::Sample> train_set,
                     std::span<const cpg::Sample> valid_set, const TrainConfig& tc,
                     const std::string& expected_fingerprint = {});

} // namespace vloc::pipeline
