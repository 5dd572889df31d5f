#include "vloc/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "vloc/embed/vectorize.hpp"
#include "vloc/nn/adam.hpp"

namespace vloc::pipeline {

using nlohmann::ordered_json;
using nn::Tape;
using nn::Tensor;

void SplitConfig::validate() const {
    double sum = 0;
    for (double r : ratios) {
        if (!(r > 0)) throw TooFewSamples("split ratios must be positive");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw TooFewSamples("split ratios must sum to 1");
}

ordered_json SplitConfig::to_json() const {
    return {{"v", 1},
            {"ratios", ratios},
            {"order", order == SplitOrder::Temporal ? "temporal" : "given"}};
}

SplitConfig SplitConfig::from_json(const ordered_json& j) {
    SplitConfig c;
    if (j.contains("ratios")) c.ratios = j.at("ratios").get<std::array<double, 3>>();
    if (j.contains("order")) {
        const auto o = j.at("order").get<std::string>();
        if (o == "temporal")
            c.order = SplitOrder::Temporal;
        else if (o == "given")
            c.order = SplitOrder::Given;
        else
            throw TooFewSamples("unknown split order '" + o + "'");
    }
    c.validate();
    return c;
}

SplitSizes split_sizes(std::size_t n, const SplitConfig& cfg) {
    cfg.validate();
    if (n < 3) throw TooFewSamples("splitting needs at least 3 samples, got " + std::to_string(n));
    SplitSizes s;
    const double nd = static_cast<double>(n);
    s.test = static_cast<std::size_t>(std::ceil(cfg.ratios[2] * nd - 1e-9));
    s.test = std::clamp<std::size_t>(s.test, 1, n - 2);
    const std::size_t rest = n - s.test;
    const double exact_train = cfg.ratios[0] / (cfg.ratios[0] + cfg.ratios[1]) * static_cast<double>(rest);
    const double exact_valid = static_cast<double>(rest) - exact_train;
    s.train = static_cast<std::size_t>(std::floor(exact_train + 1e-9));
    s.valid = static_cast<std::size_t>(std::floor(exact_valid + 1e-9));
    // at most one left over; the larger remainder takes it, train on ties
    if (s.train + s.valid < rest) {
        if (exact_train - static_cast<double>(s.train) >= exact_valid - static_cast<double>(s.valid))
            ++s.train;
        else
            ++s.valid;
    }
    if (s.valid == 0) {
        --s.train;
        ++s.valid;
    }
    if (s.train == 0) {
        ++s.train;
        --s.valid;
    }
    return s;
}

Split split_dataset(std::vector<cpg::Sample> samples, const SplitConfig& cfg) {
    const auto sz = split_sizes(samples.size(), cfg);
    if (cfg.order == SplitOrder::Temporal)
        std::stable_sort(samples.begin(), samples.end(),
                         [](const cpg::Sample& a, const cpg::Sample& b) { return a.commit_ts < b.commit_ts; });
    Split out;
    auto it = std::make_move_iterator(samples.begin());
    out.train.assign(it, it + static_cast<std::ptrdiff_t>(sz.train));
    it += static_cast<std::ptrdiff_t>(sz.train);
    out.valid.assign(it, it + static_cast<std::ptrdiff_t>(sz.valid));
    it += static_cast<std::ptrdiff_t>(sz.valid);
    out.test.assign(it, std::make_move_iterator(samples.end()));
    return out;
}

void TrainConfig::validate() const {
    if (!(lr > 0) || !std::isfinite(lr)) throw InvalidTrainConfig("learning rate must be positive");
    if (max_epochs < 0) throw InvalidTrainConfig("max_epochs must be non-negative");
    if (patience < 1) throw InvalidTrainConfig("patience must be at least 1");
    if (batch_size < 1) throw InvalidTrainConfig("batch_size must be at least 1");
    if (min_delta < 0) throw InvalidTrainConfig("min_delta must be non-negative");
    if (max_steps < 0) throw InvalidTrainConfig("max_steps must be non-negative");
}

ordered_json TrainConfig::to_json() const {
    return {{"v", 1},
            {"lr", lr},
            {"max_epochs", max_epochs},
            {"patience", patience},
            {"batch_size", batch_size},
            {"seed", seed},
            {"vul_only", vul_only},
            {"min_delta", min_delta},
            {"max_steps", max_steps}};
}

TrainConfig TrainConfig::from_json(const ordered_json& j, const TrainConfig& defaults) {
    TrainConfig c = defaults;
    try {
        for (const auto& [k, v] : j.items()) {
            if (k == "v") {
                if (v.get<int>() != 1) throw InvalidTrainConfig("unsupported train config version");
            } else if (k == "lr") {
                c.lr = v.get<double>();
            } else if (k == "max_epochs") {
                c.max_epochs = v.get<int>();
            } else if (k == "patience") {
                c.patience = v.get<int>();
            } else if (k == "batch_size") {
                c.batch_size = v.get<int>();
            } else if (k == "seed") {
                c.seed = v.get<std::uint64_t>();
            } else if (k == "vul_only") {
                c.vul_only = v.get<bool>();
            } else if (k == "min_delta") {
                c.min_delta = v.get<double>();
            } else if (k == "max_steps") {
                c.max_steps = v.get<long>();
            } else if (k != "split" && k != "model") {
                throw InvalidTrainConfig("unknown train config key '" + k + "'");
            }
        }
    } catch (const ordered_json::exception& e) {
        throw InvalidTrainConfig(std::string("malformed train config: ") + e.what());
    }
    c.validate();
    return c;
}

bool EarlyStopping::update(double loss) {
    ++epoch_;
    if (loss < best_ - min_delta_) {
        best_ = loss;
        best_epoch_ = epoch_;
        stale_ = 0;
        return true;
    }
    ++stale_;
    return false;
}

ordered_json EpochRecord::to_json() const {
    ordered_json j = {{"epoch", epoch}, {"steps", steps}, {"train_loss", train_loss}};
    j["valid_loss"] = std::isfinite(valid_loss) ? ordered_json(valid_loss) : ordered_json(nullptr);
    j["wall_ms"] = wall_ms;
    return j;
}

std::string history_to_jsonl(std::span<const EpochRecord> history) {
    std::string out;
    for (const auto& r : history) out += r.to_json().dump() + "\n";
    return out;
}

namespace {

struct Prepared {
    const cpg::Sample* sample;
    Tensor<float> x;
};

std::vector<Prepared> prepare(std::span<const cpg::Sample> samples, const embed::EmbeddingTable& emb, bool vul_only) {
    std::vector<Prepared> out;
    for (const auto& s : samples)
        if (!vul_only || s.vulnerable()) out.push_back({&s, embed::vectorize_graph(s.graph, emb)});
    return out;
}

std::string describe(const cpg::Sample& s) {
    return s.source_path.empty() ? "function '" + s.graph.function_name + "'" : s.source_path;
}

double sample_loss(const models::Bundle& m, const Prepared& p) {
    Tape<float> tape(false);
    const auto s = models::forward_scores(tape, m.cfg, m.params, p.sample->graph, p.x);
    const auto loss = nn::softmax_cross_entropy(s, p.sample->label_node);
    return static_cast<double>(loss.value()(0, 0));
}

double mean_prepared_loss(const models::Bundle& m, const std::vector<Prepared>& set) {
    double sum = 0;
    for (const auto& p : set) {
        double l = 0;
        try {
            l = sample_loss(m, p);
        } catch (const NonFiniteValue& e) {
            throw NonFiniteLoss("validation diverged on " + describe(*p.sample) + " (" + e.what() + ")");
        }
        if (!std::isfinite(l)) throw NonFiniteLoss("non-finite validation loss on " + describe(*p.sample));
        sum += l;
    }
    return sum / static_cast<double>(set.size());
}

TrainResult run(models::Bundle model, std::span<const cpg::Sample> train_set, std::span<const cpg::Sample> valid_set,
                const TrainConfig& tc) {
    tc.validate();
    const auto train_data = prepare(train_set, model.embedding, tc.vul_only);
    const auto valid_data = prepare(valid_set, model.embedding, tc.vul_only);
    if (train_data.empty()) throw EmptyTrainSet("no training samples" + std::string(tc.vul_only ? " (vul-only)" : ""));
    for (const auto& p : train_data)
        if (p.sample->label_node < 0 || p.sample->label_node >= static_cast<int>(p.sample->graph.size()))
            throw EmptyTrainSet("label out of range in " + describe(*p.sample));

    model.provenance["train"] = tc.to_json();
    TrainResult result{model, {}, 0};
    nn::AdamState adam;
    adam.cfg.lr = tc.lr;
    const nn::Prng order_root(tc.seed, "train.order");
    nn::Prng dropout(tc.seed, "train.dropout");
    EarlyStopping stopper(tc.patience, tc.min_delta);
    long steps = 0;

    std::vector<std::size_t> order(train_data.size());
    for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), std::size_t{0});
        nn::Prng shuffle = order_root.fork("epoch." + std::to_string(epoch));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

        double loss_sum = 0;
        std::size_t seen = 0;
        nn::GradStore<float> acc;
        int in_batch = 0;
        auto flush = [&] {
            if (in_batch == 0) return;
            if (in_batch > 1)
                for (auto& [name, g] : acc) g /= static_cast<float>(in_batch);
            nn::adam_step(model.params, acc, adam);
            acc.clear();
            in_batch = 0;
            ++steps;
        };
        for (std::size_t idx : order) {
            if (tc.max_steps > 0 && steps >= tc.max_steps) break;
            const auto& p = train_data[idx];
            const auto where = describe(*p.sample) + " at epoch " + std::to_string(epoch) + ", step " +
                               std::to_string(steps);
            Tape<float> tape;
            double l = 0;
            try {
                const auto s =
                    models::forward_scores(tape, model.cfg, model.params, p.sample->graph, p.x, true, &dropout);
                const auto loss = nn::softmax_cross_entropy(s, p.sample->label_node);
                l = static_cast<double>(loss.value()(0, 0));
                if (!std::isfinite(l)) throw NonFiniteLoss("non-finite training loss on " + where);
                tape.backward(loss);
            } catch (const NonFiniteValue& e) {
                throw NonFiniteLoss("training diverged on " + where + " (" + e.what() + ")");
            }
            for (auto& [name, g] : tape.param_grads()) {
                if (auto it = acc.find(name); it != acc.end())
                    it->second += g;
                else
                    acc.emplace(name, std::move(g));
            }
            loss_sum += l;
            ++seen;
            if (++in_batch == tc.batch_size) flush();
        }
        flush();

        EpochRecord rec;
        rec.epoch = epoch;
        rec.steps = steps;
        rec.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
        rec.valid_loss = valid_data.empty() ? std::nan("") : mean_prepared_loss(model, valid_data);
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(rec);

        if (stopper.update(valid_data.empty() ? rec.train_loss : rec.valid_loss)) {
            result.best.params = model.params;
            result.best_epoch = epoch;
        }
        if (stopper.should_stop() || (tc.max_steps > 0 && steps >= tc.max_steps)) break;
    }
    result.best.provenance["best_epoch"] = result.best_epoch;
    return result;
}

} // namespace

double mean_loss(const models::Bundle& model, std::span<const cpg::Sample> samples) {
    const auto data = prepare(samples, model.embedding, false);
    if (data.empty()) throw EmptyTrainSet("no samples to score");
    return mean_prepared_loss(model, data);
}

TrainResult train(const models::ModelConfig& cfg, std::span<const cpg::Sample> train_set,
                  std::span<const cpg::Sample> valid_set, const TrainConfig& tc, const embed::EmbeddingTable& embedding) {
    cfg.validate();
    if (cfg.input_dim != embedding.node_width())
        throw models::InvalidConfig("model input_dim " + std::to_string(cfg.input_dim) +
                                    " does not match the embedding node width " +
                                    std::to_string(embedding.node_width()));
    models::Bundle b{cfg, models::init_params(cfg, tc.seed), embedding, ordered_json::object()};
    b.provenance["init_seed"] = tc.seed;
    return run(std::move(b), train_set, valid_set, tc);
}

TrainResult finetune(const models::Bundle& base, std::span<const cpg::Sample> train_set,
                     std::span<const cpg::Sample> valid_set, const TrainConfig& tc,
                     const std::string& expected_fingerprint) {
    if (!expected_fingerprint.empty() && expected_fingerprint != base.embedding.fingerprint())
        throw VocabMismatch("base model embedding " + base.embedding.fingerprint() + " differs from expected " +
                            expected_fingerprint);
    tc.validate();
    if (tc.max_epochs == 0) return {base, {}, 0};
    models::Bundle b = base;
    b.provenance["base"] = base.provenance;
    return run(std::move(b), train_set, valid_set, tc);
}

} // namespace vloc::pipeline
