#include "vloc/datagen/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vloc/common/io.hpp"
#include "vloc/cpg/build.hpp"
#include "vloc/minic/parser.hpp"

namespace vloc::datagen {

using ojson = nlohmann::ordered_json;

void CorpusSpec::validate() const {
    if (count < 1) throw InvalidSpec("count must be at least 1");
    if (!(vulnerable_fraction >= 0.0 && vulnerable_fraction <= 1.0))
        throw InvalidSpec("vulnerable_fraction must be in [0, 1]");
    double sum = 0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw InvalidSpec("template weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidSpec("template weights must sum to 1");
    if (ts_step < 1) throw InvalidSpec("ts_step must be positive");
}

std::int64_t CorpusSpec::first_timestamp() const {
    if (ts_start >= 0) return ts_start;
    return difficulty == Difficulty::Easy ? 1'000'000 : 100'000'000;
}

ojson CorpusSpec::to_json() const {
    ojson w = ojson::object();
    for (std::size_t i = 0; i < kAllKinds.size(); ++i) w[std::string(to_string(kAllKinds[i]))] = weights[i];
    return {{"v", 1},
            {"count", count},
            {"vulnerable_fraction", vulnerable_fraction},
            {"difficulty", to_string(difficulty)},
            {"seed", seed},
            {"ts_start", first_timestamp()},
            {"ts_step", ts_step},
            {"templates", w}};
}

CorpusSpec CorpusSpec::from_json(const ojson& j) {
    CorpusSpec s;
    try {
        if (j.value("v", 1) != 1) throw InvalidSpec("unsupported spec version");
        s.count = j.value("count", s.count);
        s.vulnerable_fraction = j.value("vulnerable_fraction", s.vulnerable_fraction);
        if (j.contains("difficulty")) s.difficulty = difficulty_from_string(j.at("difficulty").get<std::string>());
        s.seed = j.value("seed", s.seed);
        s.ts_start = j.value("ts_start", s.ts_start);
        s.ts_step = j.value("ts_step", s.ts_step);
        if (j.contains("templates")) {
            s.weights.fill(0.0);
            for (const auto& [k, v] : j.at("templates").items())
                s.weights[static_cast<std::size_t>(vuln_kind_from_string(k))] = v.get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(e.what());
    }
    s.validate();
    return s;
}

std::vector<int> largest_remainder(std::span<const double> weights, int total) {
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<int> out(weights.size());
    std::vector<std::pair<double, std::size_t>> rem;
    int used = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double exact = sum > 0 ? weights[i] / sum * total : 0.0;
        out[i] = static_cast<int>(std::floor(exact + 1e-9));
        used += out[i];
        rem.emplace_back(exact - out[i], i);
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; used < total && k < rem.size(); ++k, ++used) ++out[rem[k].second];
    return out;
}

namespace {

bool fits_cap(const TemplateInstance& t) {
    for (bool vul : {true, false}) {
        try {
            cpg::build_cpg(minic::parse_source(t.source(vul)));
        } catch (const cpg::GraphTooLarge&) {
            return false;
        }
    }
    return true;
}

} // namespace

Corpus generate_corpus(const CorpusSpec& spec) {
    spec.validate();
    const int n_vul = static_cast<int>(std::llround(spec.vulnerable_fraction * spec.count));
    const int n_safe = spec.count - n_vul;
    const int n_pairs = std::min(n_vul, n_safe);

    // emission units: a twin pair, or a single vulnerable/safe function
    struct Unit {
        VulnKind kind;
        int members; // 2 = twin pair
        bool vulnerable;
    };
    std::vector<Unit> units;
    auto add_units = [&](int total, int members, bool vulnerable) {
        const auto per = largest_remainder(spec.weights, total);
        for (std::size_t k = 0; k < per.size(); ++k)
            for (int i = 0; i < per[k]; ++i) units.push_back({kAllKinds[k], members, vulnerable});
    };
    add_units(n_pairs, 2, true);
    add_units(n_vul - n_pairs, 1, true);
    add_units(n_safe - n_pairs, 1, false);

    nn::Prng order(spec.seed, "datagen.order");
    for (std::size_t i = units.size(); i > 1; --i) std::swap(units[i - 1], units[order.below(i)]);

    const std::string prefix = spec.difficulty == Difficulty::Easy ? "fe" : "fh";
    Corpus c;
    std::int64_t ts = spec.first_timestamp();
    for (std::size_t u = 0; u < units.size(); ++u) {
        char name[32];
        std::snprintf(name, sizeof name, "%s%05zu", prefix.c_str(), u);
        nn::Prng prng(spec.seed, "datagen.unit." + std::to_string(u));
        auto inst = instantiate(units[u].kind, spec.difficulty, name, prng);
        // redraw until both forms fit the default graph cap
        while (!fits_cap(inst)) inst = instantiate(units[u].kind, spec.difficulty, name, prng);
        std::vector<bool> forms;
        if (units[u].members == 2)
            forms = {true, false};
        else
            forms = {units[u].vulnerable};
        for (bool vul : forms) {
            auto src = inst.source(vul);
            const auto h = hex64(fnv1a(src));
            ManifestEntry e;
            e.path = "src/" + h.substr(0, 2) + "/" + h + ".c";
            e.vulnerable = vul;
            if (vul) e.line = inst.sink_line();
            e.kind = units[u].kind;
            e.commit_ts = ts;
            ts += spec.ts_step;
            c.manifest.push_back(std::move(e));
            c.sources.push_back(std::move(src));
        }
    }
    return c;
}

std::string manifest_to_jsonl(std::span<const ManifestEntry> entries) {
    std::string out;
    for (const auto& e : entries) {
        ojson j = {{"path", e.path},
                   {"vulnerable", e.vulnerable},
                   {"line", e.line ? ojson(*e.line) : ojson(nullptr)},
                   {"kind", to_string(e.kind)},
                   {"commit_ts", e.commit_ts}};
        out += j.dump() + "\n";
    }
    return out;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    for (std::size_t i = 0; i < corpus.manifest.size(); ++i) {
        const auto path = dir / corpus.manifest[i].path;
        std::filesystem::create_directories(path.parent_path());
        write_file_atomic(path, corpus.sources[i]);
    }
    write_file_atomic(dir / "manifest.jsonl", manifest_to_jsonl(corpus.manifest));
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::vector<ManifestEntry> out;
    int lineno = 0;
    for (const auto& line : read_lines(path)) {
        ++lineno;
        try {
            const auto j = ojson::parse(line);
            ManifestEntry e;
            e.path = j.at("path").get<std::string>();
            e.vulnerable = j.at("vulnerable").get<bool>();
            if (!j.at("line").is_null()) e.line = j.at("line").get<int>();
            e.kind = vuln_kind_from_string(j.at("kind").get<std::string>());
            e.commit_ts = j.at("commit_ts").get<std::int64_t>();
            if (e.vulnerable != e.line.has_value())
                throw cpg::MalformedRecord("vulnerable flag and line disagree");
            out.push_back(std::move(e));
        } catch (const nlohmann::json::exception& e) {
            throw cpg::MalformedRecord(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.kind(), path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

SampleSet manifest_to_samples(std::span<const ManifestEntry> entries, const std::filesystem::path& base_dir,
                              int max_nodes) {
    SampleSet out;
    for (const auto& e : entries) {
        try {
            const auto ast = minic::parse_source(read_file(base_dir / e.path));
            cpg::Sample s = cpg::annotate(cpg::build_cpg(ast, max_nodes), e.line);
            s.commit_ts = e.commit_ts;
            s.source_path = e.path;
            out.samples.push_back(std::move(s));
        } catch (const cpg::GraphTooLarge& err) {
            out.skipped.push_back(e.path + ": " + err.what());
        } catch (const Error& err) {
            throw Error(err.kind(), e.path + ": " + err.what());
        }
    }
    return out;
}

} // namespace vloc::datagen
