#include "vloc/ensemble/ensemble.hpp"

#include <cmath>
#include <map>

#include "vloc/common/io.hpp"
#include "vloc/embed/vectorize.hpp"

namespace vloc::ensemble {

using nlohmann::ordered_json;

std::vector<double> uniform_weights(std::size_t n) {
    return std::vector<double>(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
}

void validate_weights(std::span<const double> weights, std::size_t members) {
    if (members == 0) throw EmptyEnsemble("an ensemble needs at least one member");
    if (weights.size() != members)
        throw LengthMismatch(std::to_string(weights.size()) + " weights for " + std::to_string(members) + " members");
    double sum = 0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0) throw InvalidWeights("weights must be finite and non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidWeights("weights must sum to 1, got " + std::to_string(sum));
}

std::vector<float> ensemble_scores(std::span<const std::vector<float>> members, std::span<const double> weights) {
    validate_weights(weights, members.size());
    const std::size_t n = members.front().size();
    for (const auto& m : members)
        if (m.size() != n)
            throw LengthMismatch("member score vectors differ in length (" + std::to_string(n) + " vs " +
                                 std::to_string(m.size()) + ")");

    bool uniform = true;
    for (double w : weights) uniform = uniform && w == weights.front();

    std::vector<double> acc(n, 0.0);
    for (std::size_t k = 0; k < members.size(); ++k)
        for (std::size_t i = 0; i < n; ++i)
            acc[i] += uniform ? static_cast<double>(members[k][i]) : weights[k] * static_cast<double>(members[k][i]);
    std::vector<float> out(n);
    const double k = static_cast<double>(members.size());
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(uniform ? acc[i] / k : acc[i]);
    return out;
}

ordered_json EnsembleSpec::to_json() const { return {{"v", 1}, {"members", members}, {"weights", weights}}; }

EnsembleSpec EnsembleSpec::from_json(const ordered_json& j) {
    EnsembleSpec s;
    s.members = j.at("members").get<std::vector<std::string>>();
    s.weights = j.contains("weights") ? j.at("weights").get<std::vector<double>>() : uniform_weights(s.members.size());
    validate_weights(s.weights, s.members.size());
    return s;
}

EnsembleSpec read_ensemble_spec(const std::filesystem::path& path) {
    try {
        return EnsembleSpec::from_json(ordered_json::parse(read_file(path)));
    } catch (const ordered_json::exception& e) {
        throw InvalidWeights(path.string() + ": malformed ensemble spec: " + e.what());
    }
}

Ensemble::Ensemble(std::vector<models::Bundle> members, std::vector<double> weights)
    : members_(std::move(members)), weights_(std::move(weights)) {
    validate_weights(weights_, members_.size());
    const auto fp = members_.front().embedding.fingerprint();
    for (std::size_t i = 1; i < members_.size(); ++i)
        if (members_[i].embedding.fingerprint() != fp)
            throw IncompatibleMembers("member " + std::to_string(i) + " was trained against a different embedding table");
}

Ensemble Ensemble::single(models::Bundle member) {
    std::vector<models::Bundle> v;
    v.push_back(std::move(member));
    return Ensemble(std::move(v), {1.0});
}

Ensemble Ensemble::load(const EnsembleSpec& spec, const std::filesystem::path& base_dir) {
    std::vector<models::Bundle> members;
    for (const auto& m : spec.members) {
        const std::filesystem::path p = std::filesystem::path(m).is_absolute() ? std::filesystem::path(m) : base_dir / m;
        members.push_back(models::Bundle::from_checkpoint(nn::load_checkpoint(p)));
    }
    return Ensemble(std::move(members), spec.weights);
}

std::vector<float> Ensemble::score(const cpg::CodeGraph& g) const {
    const auto x = embed::vectorize_graph(g, embedding());
    std::vector<std::vector<float>> scores;
    scores.reserve(members_.size());
    for (const auto& m : members_) {
        nn::Tape<float> tape(false);
        const auto s = models::forward_scores(tape, m.cfg, m.params, g, x);
        scores.emplace_back(s.value().data(), s.value().data() + s.value().size());
    }
    if (scores.size() == 1) return scores.front();
    return ensemble_scores(scores, weights_);
}

models::Prediction Ensemble::predict(const cpg::CodeGraph& g) const { return models::predict(score(g)); }

Ensemble build_k_ensemble(std::span<const models::ModelKind> kinds, std::span<const std::uint64_t> seeds,
                          const MemberFactory& make) {
    if (kinds.size() != seeds.size())
        throw LengthMismatch(std::to_string(kinds.size()) + " kinds for " + std::to_string(seeds.size()) + " seeds");
    if (kinds.empty()) throw EmptyEnsemble("no members requested");
    std::map<std::pair<models::ModelKind, std::uint64_t>, std::size_t> seen;
    std::vector<models::Bundle> members;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const auto key = std::make_pair(kinds[i], seeds[i]);
        if (auto it = seen.find(key); it != seen.end()) {
            members.push_back(members[it->second]);
            continue;
        }
        seen[key] = members.size();
        members.push_back(make(kinds[i], seeds[i]));
    }
    return Ensemble(std::move(members), uniform_weights(kinds.size()));
}

} // namespace vloc::ensemble
