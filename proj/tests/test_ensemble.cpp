#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "fixture.hpp"
#include "vloc/common/io.hpp"
#include "vloc/ensemble/ensemble.hpp"

using namespace vloc;
using namespace vloc::ensemble;

namespace {

std::vector<float> random_scores(nn::Prng& prng, std::size_t n) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(prng.normal() * 3.0);
    return v;
}

} // namespace

TEST_CASE("averaging examples") {
    const std::vector<float> s{0.3f, -1.25f, 2.5f, 0.1f};
    const std::vector<std::vector<float>> same{s, s};
    const std::vector<double> half{0.5, 0.5};
    CHECK(ensemble_scores(same, half) == s);
    CHECK(models::argmax(ensemble_scores(same, half)) == models::argmax(s));

    const std::vector<std::vector<float>> opposite{{1.f, 0.f}, {0.f, 1.f}};
    const auto en = ensemble_scores(opposite, half);
    CHECK(en == std::vector<float>{0.5f, 0.5f});
    CHECK(models::argmax(en) == 0);

    const std::vector<std::vector<float>> two{{0.7f, -2.f, 9.f}, {5.f, 1.f, -3.f}};
    const std::vector<double> degenerate{1.0, 0.0};
    CHECK(ensemble_scores(two, degenerate) == two[0]);
}

TEST_CASE("errors") {
    const std::vector<std::vector<float>> none;
    const std::vector<double> no_weights;
    CHECK_THROWS_AS(ensemble_scores(none, no_weights), EmptyEnsemble);
    const std::vector<std::vector<float>> ragged{{1.f, 2.f}, {1.f}};
    const std::vector<double> half{0.5, 0.5};
    CHECK_THROWS_AS(ensemble_scores(ragged, half), LengthMismatch);
    const std::vector<std::vector<float>> ok{{1.f}, {2.f}};
    const std::vector<double> bad{0.7, 0.7};
    CHECK_THROWS_AS(ensemble_scores(ok, bad), InvalidWeights);
    const std::vector<double> negative{1.5, -0.5};
    CHECK_THROWS_AS(ensemble_scores(ok, negative), InvalidWeights);
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(ensemble_scores(ok, one), LengthMismatch);
}

TEST_CASE("identical members are preserved exactly for any k") {
    nn::Prng prng(3, "test");
    for (std::size_t k = 1; k <= 7; ++k) {
        const auto s = random_scores(prng, 40);
        const std::vector<std::vector<float>> members(k, s);
        const auto en = ensemble_scores(members, uniform_weights(k));
        CHECK(en == s);
        CHECK(models::predict(en).probs == models::predict(s).probs);
    }
}

TEST_CASE("shift invariance, linearity and reordering") {
    nn::Prng prng(4, "test");
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<float>> m{random_scores(prng, 25), random_scores(prng, 25), random_scores(prng, 25)};
        const auto w = uniform_weights(3);
        const auto base = ensemble_scores(m, w);

        // the same constant added to every member leaves the prediction alone
        auto shifted = m;
        const float c = static_cast<float>(prng.normal() * 10.0);
        for (auto& v : shifted)
            for (auto& x : v) x += c;
        CHECK(models::argmax(ensemble_scores(shifted, w)) == models::argmax(base));

        std::vector<std::vector<float>> reordered{m[2], m[0], m[1]};
        const auto r = ensemble_scores(reordered, w);
        for (std::size_t i = 0; i < base.size(); ++i) CHECK(r[i] == doctest::Approx(base[i]).epsilon(1e-6));

        // linear in one member: doubling it moves the output by w·S
        auto doubled = m;
        for (auto& x : doubled[1]) x *= 2.0f;
        const auto d = ensemble_scores(doubled, w);
        for (std::size_t i = 0; i < base.size(); ++i)
            CHECK(d[i] == doctest::Approx(base[i] + m[1][i] / 3.0).epsilon(1e-5));

        const std::vector<double> skew{0.2, 0.3, 0.5};
        const auto ws = ensemble_scores(m, skew);
        for (std::size_t i = 0; i < base.size(); ++i)
            CHECK(ws[i] == doctest::Approx(0.2 * m[0][i] + 0.3 * m[1][i] + 0.5 * m[2][i]).epsilon(1e-6));
    }
}

TEST_CASE("model ensembles") {
    const auto samples = fixture::corpus(8, datagen::Difficulty::Easy, 2);
    const auto emb = fixture::embedding(samples);
    const auto g1 = fixture::untrained(fixture::small_ggnn(emb.node_width()), emb, 1);
    const auto t1 = fixture::untrained(fixture::small_transformer(emb.node_width()), emb, 1);

    SUBCASE("single member equals the model") {
        const auto e = Ensemble::single(g1);
        for (const auto& s : samples) CHECK(e.score(s.graph) == g1.score(s.graph));
    }
    SUBCASE("two models average their scores") {
        const Ensemble e({g1, t1}, {0.5, 0.5});
        for (const auto& s : samples) {
            const std::vector<std::vector<float>> m{g1.score(s.graph), t1.score(s.graph)};
            CHECK(e.score(s.graph) == ensemble_scores(m, uniform_weights(2)));
        }
    }
    SUBCASE("k-ensemble construction") {
        int made = 0;
        const MemberFactory make = [&](models::ModelKind kind, std::uint64_t seed) {
            ++made;
            const auto cfg = kind == models::ModelKind::Ggnn ? fixture::small_ggnn(emb.node_width())
                                                             : fixture::small_transformer(emb.node_width());
            return fixture::untrained(cfg, emb, seed);
        };
        const std::vector<models::ModelKind> kinds{models::ModelKind::Ggnn, models::ModelKind::Ggnn,
                                                   models::ModelKind::Transformer, models::ModelKind::Transformer};
        const std::vector<std::uint64_t> seeds{1, 2, 1, 2};
        const auto four = build_k_ensemble(kinds, seeds, make);
        CHECK(made == 4);
        CHECK(four.members().size() == 4);
        CHECK(four.weights() == std::vector<double>(4, 0.25));

        // duplicates collapse onto the deduplicated uniform ensemble
        made = 0;
        const std::vector<models::ModelKind> dup_kinds{models::ModelKind::Ggnn, models::ModelKind::Ggnn};
        const std::vector<std::uint64_t> dup_seeds{5, 5};
        const auto dup = build_k_ensemble(dup_kinds, dup_seeds, make);
        CHECK(made == 1);
        const auto solo = Ensemble::single(make(models::ModelKind::Ggnn, 5));
        for (const auto& s : samples) CHECK(dup.score(s.graph) == solo.score(s.graph));

        const std::vector<std::uint64_t> short_seeds{1};
        CHECK_THROWS_AS(build_k_ensemble(kinds, short_seeds, make), LengthMismatch);
    }
    SUBCASE("members must share the embedding table") {
        auto other = emb;
        other.vectors(3, 0) += 1.0f;
        const auto g2 = fixture::untrained(fixture::small_ggnn(emb.node_width()), other, 1);
        CHECK_THROWS_AS(Ensemble({g1, g2}, {0.5, 0.5}), IncompatibleMembers);
    }
    SUBCASE("spec file round trip and loading") {
        const auto dir = std::filesystem::temp_directory_path() / ("vloc_ens_" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir);
        nn::save_checkpoint(dir / "g.ck", g1.to_checkpoint());
        nn::save_checkpoint(dir / "t.ck", t1.to_checkpoint());
        EnsembleSpec spec{{"g.ck", "t.ck"}, {0.5, 0.5}};
        write_file_atomic(dir / "ens.json", spec.to_json().dump());
        const auto back = read_ensemble_spec(dir / "ens.json");
        CHECK(back.members == spec.members);
        CHECK(back.weights == spec.weights);
        const auto loaded = Ensemble::load(back, dir);
        const Ensemble direct({g1, t1}, {0.5, 0.5});
        for (const auto& s : samples) CHECK(loaded.score(s.graph) == direct.score(s.graph));

        write_file_atomic(dir / "bad.json", R"({"members": ["g.ck"], "weights": [0.5]})");
        CHECK_THROWS_AS(read_ensemble_spec(dir / "bad.json"), InvalidWeights);
        std::filesystem::remove_all(dir);
    }
}
