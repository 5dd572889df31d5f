#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vloc/models/model.hpp"

namespace vloc::ensemble {

VLOC_DEFINE_ERROR(LengthMismatch);
VLOC_DEFINE_ERROR(EmptyEnsemble);
VLOC_DEFINE_ERROR(IncompatibleMembers);
VLOC_DEFINE_ERROR(InvalidWeights);

/// S = Σ wᵢ·Sᵢ. Uniform weights are applied as a plain mean so that
/// averaging identical vectors returns them bit for bit.
std::vector<float> ensemble_scores(std::span<const std::vector<float>> members, std::span<const double> weights);

/// Weights must be non-negative and sum to 1 (within 1e-9).
void validate_weights(std::span<const double> weights, std::size_t members);
std::vector<double> uniform_weights(std::size_t n);

/// On-disk form: {"v": 1, "members": [checkpoint paths], "weights": [...]}.
/// Relative member paths resolve against the spec file's directory.
struct EnsembleSpec {
    std::vector<std::string> members;
    std::vector<double> weights;

    nlohmann::ordered_json to_json() const;
    static EnsembleSpec from_json(const nlohmann::ordered_json& j);
};

EnsembleSpec read_ensemble_spec(const std::filesystem::path& path);

/// A scoring system: one model or an average of several that share an
/// embedding table.
class Ensemble {
  public:
    Ensemble(std::vector<models::Bundle> members, std::vector<double> weights);
    static Ensemble single(models::Bundle member);
    static Ensemble load(const EnsembleSpec& spec, const std::filesystem::path& base_dir);

    std::vector<float> score(const cpg::CodeGraph& g) const;
    models::Prediction predict(const cpg::CodeGraph& g) const;

    const std::vector<models::Bundle>& members() const { return members_; }
    const std::vector<double>& weights() const { return weights_; }
    const embed::EmbeddingTable& embedding() const { return members_.front().embedding; }

  private:
    std::vector<models::Bundle> members_;
    std::vector<double> weights_;
};

using MemberFactory = std::function<models::Bundle(models::ModelKind, std::uint64_t seed)>;

/// One member per (kind, seed) pair, uniform weights. Repeated pairs are
/// produced once and shared.
Ensemble build_k_ensemble(std::span<const models::ModelKind> kinds, std::span<const std::uint64_t> seeds,
                          const MemberFactory& make);

} // namespace vloc::ensemble
