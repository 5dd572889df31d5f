#include "vloc/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace vloc::eval {

using nlohmann::ordered_json;

namespace {

ordered_json opt_json(const std::optional<int>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json num_json(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

void require_records(std::span<const PredictionRecord> records, const char* what) {
    if (records.empty()) throw EmptyRecordSet(std::string(what) + " needs at least one record");
}

std::string describe(const cpg::Sample& s, std::size_t index) {
    if (!s.source_path.empty()) return s.source_path;
    if (!s.graph.function_name.empty()) return s.graph.function_name;
    return "sample " + std::to_string(index);
}

} // namespace

std::vector<std::optional<int>> PredictionRecord::ranked_lines(std::size_t limit) const {
    std::vector<std::optional<int>> out;
    for (const auto& r : ranking) {
        if (out.size() >= limit) break;
        if (std::find(out.begin(), out.end(), r.line) == out.end()) out.push_back(r.line);
    }
    return out;
}

ordered_json PredictionRecord::to_json(std::size_t max_lines) const {
    ordered_json lines = ordered_json::array();
    for (const auto& l : ranked_lines(max_lines)) lines.push_back(opt_json(l));
    ordered_json top = ordered_json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(ranking.size(), max_lines); ++i)
        top.push_back({{"node", ranking[i].node}, {"score", ranking[i].score}, {"line", opt_json(ranking[i].line)}});
    return {{"id", id},
            {"predicted_node", predicted_node},
            {"predicted_line", opt_json(predicted_line)},
            {"label_node", label_node},
            {"true_line", opt_json(true_line)},
            {"ranked_lines", lines},
            {"ranking", top}};
}

PredictionRecord make_record(const std::string& id, const cpg::CodeGraph& g, std::span<const float> scores,
                             int label_node, std::optional<int> true_line) {
    if (scores.size() != g.size())
        throw ensemble::LengthMismatch(id + ": " + std::to_string(scores.size()) + " scores for " +
                                       std::to_string(g.size()) + " nodes");
    PredictionRecord r;
    r.id = id;
    r.label_node = label_node;
    r.true_line = true_line;
    std::vector<int> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    });
    for (int i : idx)
        r.ranking.push_back({i, static_cast<double>(scores[static_cast<std::size_t>(i)]),
                             g.nodes[static_cast<std::size_t>(i)].line});
    r.predicted_node = models::argmax(scores);
    r.predicted_line = g.nodes[static_cast<std::size_t>(r.predicted_node)].line;
    if (r.predicted_node == 0) r.predicted_line.reset();
    return r;
}

bool topk_hit(const PredictionRecord& r, std::size_t k) {
    if (k == 0) throw InvalidK("k must be at least 1");
    if (!r.true_line) return false;
    const auto lines = r.ranked_lines(k);
    return std::find(lines.begin(), lines.end(), r.true_line) != lines.end();
}

double topk_accuracy(std::span<const PredictionRecord> records, std::size_t k) {
    if (k == 0) throw InvalidK("k must be at least 1");
    std::size_t n = 0, hits = 0;
    for (const auto& r : records) {
        if (!r.vulnerable()) continue;
        ++n;
        hits += topk_hit(r, k);
    }
    if (n == 0) throw EmptyRecordSet("top-k accuracy needs records with a vulnerable ground truth");
    return static_cast<double>(hits) / static_cast<double>(n);
}

std::optional<int> prediction_distance(const PredictionRecord& r) {
    if (!r.predicted_line || !r.true_line) return std::nullopt;
    return std::abs(*r.predicted_line - *r.true_line);
}

DistanceStats distance_stats(std::span<const PredictionRecord> records) {
    DistanceStats s;
    double sum = 0;
    for (const auto& r : records) {
        if (!r.vulnerable()) continue;
        if (const auto d = prediction_distance(r)) {
            sum += *d;
            ++s.counted;
        } else {
            ++s.excluded;
        }
    }
    s.mean = s.counted ? sum / static_cast<double>(s.counted) : std::nan("");
    return s;
}

ClassificationMetrics classification_metrics(std::span<const PredictionRecord> records) {
    require_records(records, "classification metrics");
    ClassificationMetrics m;
    for (const auto& r : records) {
        const bool truth = r.vulnerable();
        const bool pred = r.predicted_node != 0;
        if (truth && pred)
            ++m.tp;
        else if (!truth && pred)
            ++m.fp;
        else if (!truth)
            ++m.tn;
        else
            ++m.fn;
    }
    const auto d = [](std::size_t a, std::size_t b) {
        return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
    };
    m.accuracy = d(m.tp + m.tn, records.size());
    m.precision = d(m.tp, m.tp + m.fp);
    m.recall = d(m.tp, m.tp + m.fn);
    m.f1 = m.precision + m.recall == 0 ? 0.0 : 2 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

double prediction_accuracy(std::span<const PredictionRecord> records) {
    require_records(records, "prediction accuracy");
    std::size_t hits = 0;
    for (const auto& r : records) hits += r.predicted_node == r.label_node;
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

SystemRow summarize(const std::string& name, std::span<const PredictionRecord> records,
                    std::span<const std::size_t> ks) {
    require_records(records, "a report row");
    SystemRow row;
    row.name = name;
    row.records = records.size();
    for (const auto& r : records) {
        row.vulnerable += r.vulnerable();
        row.hybrid = row.hybrid || !r.vulnerable();
    }
    if (row.vulnerable > 0)
        for (auto k : ks) row.topk[k] = topk_accuracy(records, k);
    row.distance = distance_stats(records);
    row.prediction_accuracy = prediction_accuracy(records);
    row.cls = classification_metrics(records);
    return row;
}

ordered_json SystemRow::to_json() const {
    ordered_json tk = ordered_json::object();
    for (const auto& [k, v] : topk) tk["top" + std::to_string(k)] = v;
    ordered_json j = {{"name", name},
                      {"records", records},
                      {"vulnerable", vulnerable},
                      {"topk", tk},
                      {"distance",
                       {{"mean", num_json(distance.mean)},
                        {"counted", distance.counted},
                        {"excluded", distance.excluded}}},
                      {"hybrid", hybrid},
                      {"prediction_accuracy", prediction_accuracy}};
    j["classification"] = {{"accuracy", cls.accuracy}, {"precision", cls.precision}, {"recall", cls.recall},
                           {"f1", cls.f1},             {"tp", cls.tp},               {"fp", cls.fp},
                           {"tn", cls.tn},             {"fn", cls.fn}};
    return j;
}

std::vector<PredictionRecord> score_samples(const ensemble::Ensemble& system, std::span<const cpg::Sample> samples) {
    std::vector<PredictionRecord> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const auto id = describe(s, i);
        try {
            const auto scores = system.score(s.graph);
            out.push_back(make_record(id, s.graph, scores, s.label_node, s.vulnerable_line));
        } catch (const Error& e) {
            throw Error(e.kind(), id + ": " + std::string(e.what()).substr(e.kind().size() + 2));
        }
    }
    return out;
}

EvalReport compare_report(std::span<const NamedSystem> systems, std::span<const cpg::Sample> samples,
                          std::span<const std::size_t> ks) {
    if (samples.empty()) throw EmptyRecordSet("the evaluation set is empty");
    EvalReport rep;
    rep.ks.assign(ks.begin(), ks.end());
    for (const auto& sys : systems) {
        SystemResult r;
        r.records = score_samples(*sys.system, samples);
        r.row = summarize(sys.name, r.records, ks);
        rep.systems.push_back(std::move(r));
    }
    return rep;
}

ordered_json EvalReport::to_json() const {
    ordered_json rows = ordered_json::array();
    for (const auto& s : systems) rows.push_back(s.row.to_json());
    return {{"v", 1}, {"ks", ks}, {"systems", rows}};
}

std::string EvalReport::to_text() const {
    std::vector<std::string> header{"System"};
    for (auto k : ks) header.push_back("Top-" + std::to_string(k));
    header.push_back("Distance");
    const bool hybrid = std::any_of(systems.begin(), systems.end(), [](const auto& s) { return s.row.hybrid; });
    if (hybrid) {
        header.push_back("Pred Acc");
        header.push_back("Vul-CLS F1");
        header.push_back("Vul-LOC");
    }
    std::vector<std::vector<std::string>> rows{header};
    const auto pct = [](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.1f%%", 100.0 * v);
        return std::string(b);
    };
    for (const auto& s : systems) {
        std::vector<std::string> row{s.row.name};
        for (auto k : ks) row.push_back(s.row.topk.count(k) ? pct(s.row.topk.at(k)) : "-");
        char b[32];
        if (std::isfinite(s.row.distance.mean))
            std::snprintf(b, sizeof b, "%.2f", s.row.distance.mean);
        else
            std::snprintf(b, sizeof b, "-");
        row.emplace_back(b);
        if (hybrid) {
            row.push_back(pct(s.row.prediction_accuracy));
            row.push_back(pct(s.row.cls.f1));
            row.push_back(s.row.topk.count(1) ? pct(s.row.topk.at(1)) : "-");
        }
        rows.push_back(std::move(row));
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    std::ostringstream out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            const auto& cell = rows[i][c];
            const auto pad = std::string(width[c] - cell.size(), ' ');
            out << (c == 0 ? cell + pad : "  " + pad + cell);
        }
        out << '\n';
        if (i == 0) out << std::string(std::accumulate(width.begin(), width.end(), std::size_t{0}) + 2 * (width.size() - 1), '-') << '\n';
    }
    return out.str();
}

std::string EvalReport::records_jsonl() const {
    std::size_t lines = 10;
    for (auto k : ks) lines = std::max(lines, k);
    std::string out;
    for (const auto& s : systems)
        for (const auto& r : s.records) {
            auto j = r.to_json(lines);
            ordered_json row = {{"system", s.row.name}};
            row.update(j);
            out += row.dump() + "\n";
        }
    return out;
}

std::vector<std::size_t> parse_ks(const std::string& text) {
    std::vector<std::size_t> ks;
    std::stringstream in(text);
    for (std::string part; std::getline(in, part, ',');) {
        std::size_t used = 0;
        long v = 0;
        try {
            v = std::stol(part, &used);
        } catch (const std::exception&) {
            throw InvalidK("bad k value '" + part + "'");
        }
        if (used != part.size() || v < 1) throw InvalidK("bad k value '" + part + "'");
        ks.push_back(static_cast<std::size_t>(v));
    }
    if (ks.empty()) throw InvalidK("no k values given");
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    return ks;
}

} // namespace vloc::eval
