#pragma once
// Small corpora, embeddings and model configs shared by the training-level tests.

#include "vloc/cpg/build.hpp"
#include "vloc/datagen/corpus.hpp"
#include "vloc/embed/vocab.hpp"
#include "vloc/minic/parser.hpp"
#include "vloc/models/model.hpp"

namespace fixture {

using namespace vloc;

inline std::vector<cpg::Sample> samples_of(const datagen::Corpus& c) {
    std::vector<cpg::Sample> out;
    for (std::size_t i = 0; i < c.sources.size(); ++i) {
        auto s = cpg::annotate(cpg::build_cpg(minic::parse_source(c.sources[i])), c.manifest[i].line);
        s.commit_ts = c.manifest[i].commit_ts;
        s.source_path = c.manifest[i].path;
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<cpg::Sample> corpus(int count, datagen::Difficulty d, std::uint64_t seed, double vul = 0.5) {
    datagen::CorpusSpec spec;
    spec.count = count;
    spec.difficulty = d;
    spec.seed = seed;
    spec.vulnerable_fraction = vul;
    return samples_of(datagen::generate_corpus(spec));
}

inline embed::EmbeddingTable embedding(std::span<const cpg::Sample> samples, int dim = 4, int t_max = 3) {
    embed::Word2VecConfig cfg;
    cfg.dim = dim;
    cfg.t_max = t_max;
    cfg.epochs = 2;
    return embed::train_word2vec(embed::token_sequences(samples), cfg);
}

inline models::ModelConfig small_ggnn(int input) {
    models::ModelConfig c;
    c.kind = models::ModelKind::Ggnn;
    c.input_dim = input;
    c.ggnn = {16, 3};
    return c;
}

inline models::ModelConfig small_transformer(int input) {
    models::ModelConfig c;
    c.kind = models::ModelKind::Transformer;
    c.input_dim = input;
    c.transformer = {1, 2, 16, 32, 512, 0.0};
    return c;
}

inline models::Bundle untrained(const models::ModelConfig& cfg, const embed::EmbeddingTable& emb, std::uint64_t seed) {
    return {cfg, models::init_params(cfg, seed), emb, nlohmann::ordered_json::object()};
}

} // namespace fixture
