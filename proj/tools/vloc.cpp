// Command-line driver: corpus generation, graph building, embedding, training,
// evaluation and prediction.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "vloc/common/io.hpp"
#include "vloc/cpg/build.hpp"
#include "vloc/cpg/serialize.hpp"
#include "vloc/datagen/corpus.hpp"
#include "vloc/embed/vocab.hpp"
#include "vloc/ensemble/ensemble.hpp"
#include "vloc/eval/eval.hpp"
#include "vloc/minic/parser.hpp"
#include "vloc/pipeline/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace vloc;

namespace {

VLOC_DEFINE_ERROR(BadInput);

ordered_json read_json(const fs::path& path) {
    try {
        return ordered_json::parse(read_file(path));
    } catch (const ordered_json::parse_error& e) {
        throw BadInput(path.string() + ": " + e.what());
    }
}

std::string file_fingerprint(const fs::path& path) { return hex64(fnv1a(read_file(path))); }

std::vector<cpg::Sample> read_graphs(const fs::path& path) {
    try {
        return cpg::read_samples(path);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + std::string(e.what()).substr(e.kind().size() + 2));
    }
}

std::string with_suffix(const fs::path& p, const std::string& suffix) {
    auto s = p.string();
    if (p.has_extension()) s = s.substr(0, s.size() - p.extension().string().size());
    return s + suffix;
}

// ---- gen

struct GenArgs {
    std::string spec, out;
};

void run_gen(const GenArgs& a) {
    const auto spec = datagen::CorpusSpec::from_json(read_json(a.spec));
    const auto corpus = datagen::generate_corpus(spec);
    // build beside the target and swap in, so a failure leaves nothing behind
    const fs::path out(a.out);
    const fs::path tmp = out.string() + ".partial";
    fs::remove_all(tmp);
    try {
        fs::create_directories(tmp);
        datagen::write_corpus(corpus, tmp);
        write_file_atomic(tmp / "spec.json", spec.to_json().dump(2) + "\n");
    } catch (...) {
        fs::remove_all(tmp);
        throw;
    }
    fs::remove_all(out);
    fs::rename(tmp, out);
    std::cerr << "gen: " << corpus.manifest.size() << " functions -> " << out.string() << "\n";
}

// ---- graph

struct GraphArgs {
    std::string manifest, out;
    int max_nodes = cpg::kDefaultMaxNodes;
};

void run_graph(const GraphArgs& a) {
    const fs::path manifest(a.manifest);
    const auto entries = datagen::read_manifest(manifest);
    const auto set = datagen::manifest_to_samples(entries, manifest.parent_path(), a.max_nodes);
    for (const auto& s : set.skipped) std::cerr << "graph: skipped " << s << "\n";
    write_file_atomic(a.out, cpg::samples_to_jsonl(set.samples));
    std::cerr << "graph: " << set.samples.size() << " samples, " << set.skipped.size() << " skipped -> " << a.out
              << "\n";
}

// ---- split

struct SplitArgs {
    std::string graphs, config, out;
};

pipeline::SplitConfig split_config_from(const std::string& path) {
    if (path.empty()) return {};
    const auto j = read_json(path);
    return pipeline::SplitConfig::from_json(j.contains("split") ? j.at("split") : j);
}

void run_split(const SplitArgs& a) {
    const auto cfg = split_config_from(a.config);
    auto split = pipeline::split_dataset(read_graphs(a.graphs), cfg);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    write_file_atomic(dir / "train.jsonl", cpg::samples_to_jsonl(split.train));
    write_file_atomic(dir / "valid.jsonl", cpg::samples_to_jsonl(split.valid));
    write_file_atomic(dir / "test.jsonl", cpg::samples_to_jsonl(split.test));
    std::cerr << "split: " << split.train.size() << "/" << split.valid.size() << "/" << split.test.size() << " -> "
              << dir.string() << "\n";
}

// ---- vocab

struct VocabArgs {
    std::string graphs, out;
    embed::Word2VecConfig cfg;
};

void run_vocab(const VocabArgs& a) {
    const auto samples = read_graphs(a.graphs);
    const auto table = embed::train_word2vec(embed::token_sequences(samples), a.cfg);
    auto ck = table.to_checkpoint();
    ck.provenance["graphs"] = file_fingerprint(a.graphs);
    nn::save_checkpoint(a.out, ck);
    std::cerr << "vocab: " << table.vocab.size() << " tokens, dim " << table.dim() << " -> " << a.out << "\n";
}

// ---- train / finetune

struct TrainArgs {
    std::string model, graphs, valid, embed, config, out, from;
    bool vul_only = false;
};

// Train and validation sets: an explicit validation file, or the train and
// valid parts of the configured split (the test part is left untouched).
std::pair<std::vector<cpg::Sample>, std::vector<cpg::Sample>> training_sets(const TrainArgs& a,
                                                                             const ordered_json& run_cfg) {
    auto samples = read_graphs(a.graphs);
    if (!a.valid.empty()) return {std::move(samples), read_graphs(a.valid)};
    const auto split_cfg = run_cfg.contains("split") ? pipeline::SplitConfig::from_json(run_cfg.at("split"))
                                                     : pipeline::SplitConfig{};
    auto split = pipeline::split_dataset(std::move(samples), split_cfg);
    return {std::move(split.train), std::move(split.valid)};
}

void save_result(const pipeline::TrainResult& r, const TrainArgs& a, ordered_json provenance) {
    auto bundle = r.best;
    for (auto& [k, v] : provenance.items()) bundle.provenance[k] = v;
    nn::save_checkpoint(a.out, bundle.to_checkpoint());
    write_file_atomic(with_suffix(a.out, ".history.jsonl"), pipeline::history_to_jsonl(r.history));
    std::cerr << "train: best epoch " << r.best_epoch << " of " << r.history.size() << " -> " << a.out << "\n";
}

void run_train(const TrainArgs& a) {
    const auto run_cfg = a.config.empty() ? ordered_json::object() : read_json(a.config);
    auto tc = pipeline::TrainConfig::from_json(run_cfg, pipeline::TrainConfig::pretrain());
    tc.vul_only = tc.vul_only || a.vul_only;
    const auto embedding = embed::EmbeddingTable::from_checkpoint(nn::load_checkpoint(a.embed));

    ordered_json mj = run_cfg.contains("model") ? run_cfg.at("model") : ordered_json::object();
    mj["kind"] = a.model;
    if (!mj.contains("input_dim")) mj["input_dim"] = embedding.node_width();
    const auto cfg = models::ModelConfig::from_json(mj);

    const auto [train_set, valid_set] = training_sets(a, run_cfg);
    const auto r = pipeline::train(cfg, train_set, valid_set, tc, embedding);
    save_result(r, a, {{"graphs", file_fingerprint(a.graphs)}, {"run_config", run_cfg}});
}

void run_finetune(const TrainArgs& a) {
    const auto run_cfg = a.config.empty() ? ordered_json::object() : read_json(a.config);
    auto tc = pipeline::TrainConfig::from_json(run_cfg, pipeline::TrainConfig::finetune());
    tc.vul_only = tc.vul_only || a.vul_only;
    const auto base = models::Bundle::from_checkpoint(nn::load_checkpoint(a.from));
    std::string expected;
    if (!a.embed.empty()) expected = embed::EmbeddingTable::from_checkpoint(nn::load_checkpoint(a.embed)).fingerprint();
    const auto [train_set, valid_set] = training_sets(a, run_cfg);
    const auto r = pipeline::finetune(base, train_set, valid_set, tc, expected);
    save_result(r, a, {{"graphs", file_fingerprint(a.graphs)}, {"run_config", run_cfg}});
}

// ---- systems

struct LoadedSystem {
    std::string name;
    std::optional<ensemble::Ensemble> system;
};

// {"v": 1, "systems": [{"name", "checkpoint"} | {"name", "ensemble"} | {"name", "members", "weights"?}]}
std::vector<LoadedSystem> load_systems(const fs::path& path) {
    const auto j = read_json(path);
    const auto base = path.parent_path();
    const auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    std::vector<LoadedSystem> out;
    try {
        for (const auto& s : j.at("systems")) {
            LoadedSystem ls;
            ls.name = s.at("name").get<std::string>();
            if (s.contains("checkpoint")) {
                ls.system = ensemble::Ensemble::single(
                    models::Bundle::from_checkpoint(nn::load_checkpoint(resolve(s.at("checkpoint").get<std::string>()))));
            } else if (s.contains("ensemble")) {
                const auto spec_path = resolve(s.at("ensemble").get<std::string>());
                ls.system = ensemble::Ensemble::load(ensemble::read_ensemble_spec(spec_path), spec_path.parent_path());
            } else {
                ls.system = ensemble::Ensemble::load(ensemble::EnsembleSpec::from_json(s), base);
            }
            out.push_back(std::move(ls));
        }
    } catch (const ordered_json::exception& e) {
        throw BadInput(path.string() + ": " + e.what());
    }
    if (out.empty()) throw BadInput(path.string() + ": no systems listed");
    return out;
}

// ---- eval

struct EvalArgs {
    std::string systems, graphs, topk = "1,3,5", out;
};

void run_eval(const EvalArgs& a) {
    const auto ks = eval::parse_ks(a.topk);
    const auto systems = load_systems(a.systems);
    const auto samples = read_graphs(a.graphs);
    std::vector<eval::NamedSystem> named;
    for (const auto& s : systems) named.push_back({s.name, &*s.system});
    const auto rep = eval::compare_report(named, samples, ks);
    auto j = rep.to_json();
    j["graphs"] = file_fingerprint(a.graphs);
    write_file_atomic(a.out, j.dump(2) + "\n");
    write_file_atomic(with_suffix(a.out, ".txt"), rep.to_text());
    write_file_atomic(with_suffix(a.out, ".records.jsonl"), rep.records_jsonl());
    std::cout << rep.to_text();
}

// ---- predict

struct PredictArgs {
    std::string systems, src, system;
    std::size_t topk = 3;
};

void run_predict(const PredictArgs& a) {
    if (a.topk == 0) throw eval::InvalidK("k must be at least 1");
    const auto systems = load_systems(a.systems);
    const LoadedSystem* chosen = &systems.front();
    if (!a.system.empty()) {
        chosen = nullptr;
        for (const auto& s : systems)
            if (s.name == a.system) chosen = &s;
        if (!chosen) throw BadInput("no system named '" + a.system + "' in " + a.systems);
    }
    cpg::CodeGraph g;
    try {
        g = cpg::build_cpg(minic::parse_source(read_file(a.src)));
    } catch (const Error& e) {
        throw Error(e.kind(), a.src + ": " + std::string(e.what()).substr(e.kind().size() + 2));
    }
    const auto scores = chosen->system->score(g);
    const auto pred = models::predict(scores);
    const auto rec = eval::make_record(a.src, g, scores, 0, std::nullopt);

    std::cout << "system " << chosen->name << ", function " << g.function_name << "\n";
    std::vector<std::optional<int>> seen;
    for (const auto& r : rec.ranking) {
        if (seen.size() >= a.topk) break;
        if (std::find(seen.begin(), seen.end(), r.line) != seen.end()) continue;
        seen.push_back(r.line);
        char buf[96];
        std::snprintf(buf, sizeof buf, "  score %.4f  p %.4f", r.score, pred.probs[static_cast<std::size_t>(r.node)]);
        std::cout << seen.size() << ". " << (r.line ? "line " + std::to_string(*r.line) : "non-vulnerable (dummy)")
                  << buf << "\n";
    }
}

// ---- parse

struct ParseArgs {
    std::string src;
    bool dump_ast = false;
};

void run_parse(const ParseArgs& a) {
    minic::Ast ast;
    try {
        ast = minic::parse_source(read_file(a.src));
    } catch (const Error& e) {
        throw Error(e.kind(), a.src + ": " + std::string(e.what()).substr(e.kind().size() + 2));
    }
    std::cout << (a.dump_ast ? minic::dump(ast) : minic::pretty_print(ast));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Statement-level vulnerability localization toolkit"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* c_gen = app.add_subcommand("gen", "Generate a synthetic corpus and its manifest");
    c_gen->add_option("--spec", gen.spec, "Corpus spec JSON")->required()->check(CLI::ExistingFile);
    c_gen->add_option("--out", gen.out, "Output directory")->required();

    GraphArgs graph;
    auto* c_graph = app.add_subcommand("graph", "Build code property graphs for a manifest");
    c_graph->add_option("--manifest", graph.manifest, "manifest.jsonl")->required()->check(CLI::ExistingFile);
    c_graph->add_option("--out", graph.out, "Output graphs JSONL")->required();
    c_graph->add_option("--max-nodes", graph.max_nodes, "Skip functions with more nodes")->check(CLI::PositiveNumber);

    SplitArgs split;
    auto* c_split = app.add_subcommand("split", "Split graphs into train/valid/test files");
    c_split->add_option("--graphs", split.graphs, "Graphs JSONL")->required()->check(CLI::ExistingFile);
    c_split->add_option("--config", split.config, "Split config JSON (or a run config with a \"split\" key)")
        ->check(CLI::ExistingFile);
    c_split->add_option("--out", split.out, "Output directory")->required();

    VocabArgs vocab;
    auto* c_vocab = app.add_subcommand("vocab", "Train the token embedding table");
    c_vocab->add_option("--graphs", vocab.graphs, "Graphs JSONL")->required()->check(CLI::ExistingFile);
    c_vocab->add_option("--dim", vocab.cfg.dim, "Embedding width")->check(CLI::PositiveNumber);
    c_vocab->add_option("--window", vocab.cfg.window, "Context window")->check(CLI::PositiveNumber);
    c_vocab->add_option("--negatives", vocab.cfg.negatives, "Negative samples per pair")->check(CLI::PositiveNumber);
    c_vocab->add_option("--epochs", vocab.cfg.epochs, "Passes over the corpus")->check(CLI::PositiveNumber);
    c_vocab->add_option("--min-count", vocab.cfg.min_count, "Vocabulary threshold")->check(CLI::PositiveNumber);
    c_vocab->add_option("--t-max", vocab.cfg.t_max, "Token slots per node")->check(CLI::PositiveNumber);
    c_vocab->add_option("--seed", vocab.cfg.seed, "Seed");
    c_vocab->add_option("--out", vocab.out, "Embedding checkpoint")->required();

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Train a GGNN or Transformer model");
    c_train->add_option("--model", train.model, "ggnn | transformer")
        ->required()
        ->check(CLI::IsMember({"ggnn", "transformer"}));
    c_train->add_option("--graphs", train.graphs, "Graphs JSONL")->required()->check(CLI::ExistingFile);
    c_train->add_option("--valid", train.valid, "Validation graphs (default: split --graphs)")->check(CLI::ExistingFile);
    c_train->add_option("--embed", train.embed, "Embedding checkpoint")->required()->check(CLI::ExistingFile);
    c_train->add_option("--config", train.config, "Run config JSON")->check(CLI::ExistingFile);
    c_train->add_option("--out", train.out, "Model checkpoint")->required();
    c_train->add_flag("--vul-only", train.vul_only, "Train on vulnerable functions only");

    TrainArgs ft;
    auto* c_ft = app.add_subcommand("finetune", "Continue training a model on new data");
    c_ft->add_option("--from", ft.from, "Base model checkpoint")->required()->check(CLI::ExistingFile);
    c_ft->add_option("--graphs", ft.graphs, "Graphs JSONL")->required()->check(CLI::ExistingFile);
    c_ft->add_option("--valid", ft.valid, "Validation graphs (default: split --graphs)")->check(CLI::ExistingFile);
    c_ft->add_option("--embed", ft.embed, "Require this embedding table")->check(CLI::ExistingFile);
    c_ft->add_option("--config", ft.config, "Run config JSON")->check(CLI::ExistingFile);
    c_ft->add_option("--out", ft.out, "Model checkpoint")->required();
    c_ft->add_flag("--vul-only", ft.vul_only, "Train on vulnerable functions only");

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "Score systems on a test set and write a report");
    c_eval->add_option("--systems", ev.systems, "Systems JSON")->required()->check(CLI::ExistingFile);
    c_eval->add_option("--graphs", ev.graphs, "Test graphs JSONL")->required()->check(CLI::ExistingFile);
    c_eval->add_option("--topk", ev.topk, "Comma-separated k values");
    c_eval->add_option("--out", ev.out, "report.json (report.txt and records written beside it)")->required();

    PredictArgs pr;
    auto* c_pred = app.add_subcommand("predict", "Rank the lines of one function");
    c_pred->add_option("--systems", pr.systems, "Systems JSON")->required()->check(CLI::ExistingFile);
    c_pred->add_option("--src", pr.src, "MiniC source file")->required()->check(CLI::ExistingFile);
    c_pred->add_option("--system", pr.system, "System name (default: first listed)");
    c_pred->add_option("--topk", pr.topk, "Lines to show");

    ParseArgs pa;
    auto* c_parse = app.add_subcommand("parse", "Parse a MiniC file and print it back");
    c_parse->add_option("--src", pa.src, "MiniC source file")->required()->check(CLI::ExistingFile);
    c_parse->add_flag("--dump-ast", pa.dump_ast, "Print the AST as indented text");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*c_gen) run_gen(gen);
        if (*c_graph) run_graph(graph);
        if (*c_split) run_split(split);
        if (*c_vocab) run_vocab(vocab);
        if (*c_train) run_train(train);
        if (*c_ft) run_finetune(ft);
        if (*c_eval) run_eval(ev);
        if (*c_pred) run_predict(pr);
        if (*c_parse) run_parse(pa);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
