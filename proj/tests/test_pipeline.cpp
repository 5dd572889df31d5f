#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "fixture.hpp"
#include "vloc/nn/checkpoint.hpp"
#include "vloc/pipeline/pipeline.hpp"

using namespace vloc;
using namespace vloc::pipeline;

namespace {

std::vector<cpg::Sample> stamped(std::vector<std::int64_t> ts) {
    std::vector<cpg::Sample> out;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        cpg::Sample s;
        s.commit_ts = ts[i];
        s.source_path = "s" + std::to_string(i);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<std::int64_t> times(const std::vector<cpg::Sample>& v) {
    std::vector<std::int64_t> out;
    for (const auto& s : v) out.push_back(s.commit_ts);
    return out;
}

std::string history_without_time(const std::vector<EpochRecord>& h) {
    std::string out;
    for (auto r : h) {
        r.wall_ms = 0;
        out += r.to_json().dump() + "\n";
    }
    return out;
}

} // namespace

TEST_CASE("split sizes") {
    const SplitConfig standard;
    auto s = split_sizes(100, standard);
    CHECK(s.train == 90);
    CHECK(s.valid == 5);
    CHECK(s.test == 5);

    SplitConfig quarter;
    quarter.ratios = {0.5, 0.25, 0.25};
    s = split_sizes(4, quarter);
    CHECK(s.train == 2);
    CHECK(s.valid == 1);
    CHECK(s.test == 1);

    s = split_sizes(3, standard);
    CHECK(s.train == 1);
    CHECK(s.valid == 1);
    CHECK(s.test == 1);

    CHECK_THROWS_AS(split_sizes(2, standard), TooFewSamples);
    SplitConfig bad;
    bad.ratios = {0.9, 0.1, 0.0};
    CHECK_THROWS_AS(split_sizes(10, bad), TooFewSamples);
    bad.ratios = {0.9, 0.2, 0.1};
    CHECK_THROWS_AS(split_sizes(10, bad), TooFewSamples);

    for (std::size_t n = 3; n < 400; ++n) {
        const auto z = split_sizes(n, standard);
        CHECK(z.train + z.valid + z.test == n);
        CHECK(z.test == std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(n) - 1e-9))));
        CHECK(z.valid >= 1);
        CHECK(z.train >= 1);
    }
}

TEST_CASE("temporal split") {
    std::vector<std::int64_t> ts;
    for (int i = 20; i >= 1; --i) ts.push_back(i);
    const auto split = split_dataset(stamped(ts), {});
    CHECK(times(split.test) == std::vector<std::int64_t>{20});
    CHECK(times(split.valid) == std::vector<std::int64_t>{19});
    CHECK(split.train.size() == 18);

    nn::Prng prng(12, "test");
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::int64_t> t(3 + prng.below(200));
        for (auto& x : t) x = static_cast<std::int64_t>(prng.below(50));
        for (auto order : {SplitOrder::Temporal, SplitOrder::Given}) {
            SplitConfig cfg;
            cfg.order = order;
            const auto in = stamped(t);
            const auto sp = split_dataset(in, cfg);
            std::multiset<std::string> ids;
            for (const auto* part : {&sp.train, &sp.valid, &sp.test})
                for (const auto& s : *part) ids.insert(s.source_path);
            std::multiset<std::string> expect;
            for (const auto& s : in) expect.insert(s.source_path);
            CHECK(ids == expect);
            CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == ids.size());
            if (order == SplitOrder::Temporal) {
                const auto tr = times(sp.train), te = times(sp.test);
                CHECK(*std::max_element(tr.begin(), tr.end()) <= *std::min_element(te.begin(), te.end()));
            } else {
                CHECK(sp.train.front().source_path == "s0");
                CHECK(sp.test.back().source_path == "s" + std::to_string(t.size() - 1));
            }
        }
    }
}

TEST_CASE("early stopping") {
    EarlyStopping es(3, 1e-6);
    const std::vector<double> losses{1.0, 0.9, 0.91, 0.92, 0.93, 0.5};
    int epochs = 0;
    for (double l : losses) {
        es.update(l);
        ++epochs;
        if (es.should_stop()) break;
    }
    CHECK(epochs == 5);
    CHECK(es.best_epoch() == 2);

    EarlyStopping tiny(1, 1e-6);
    tiny.update(1.0);
    tiny.update(1.0 - 1e-7);
    CHECK(tiny.should_stop());
    CHECK(tiny.best_epoch() == 1);
}

TEST_CASE("train config") {
    const auto pre = TrainConfig::pretrain();
    CHECK(pre.lr == 1e-4);
    CHECK(pre.max_epochs == 10);
    CHECK(pre.patience == 3);
    const auto ft = TrainConfig::finetune();
    CHECK(ft.lr == 1e-5);
    CHECK(ft.max_epochs == 50);

    TrainConfig c;
    c.lr = 3e-4;
    c.seed = 77;
    c.vul_only = true;
    CHECK(TrainConfig::from_json(c.to_json()).to_json() == c.to_json());
    const auto partial = TrainConfig::from_json(nlohmann::ordered_json{{"seed", 5}}, TrainConfig::finetune());
    CHECK(partial.lr == 1e-5);
    CHECK(partial.seed == 5);
    CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::ordered_json{{"lr", -1.0}}), InvalidTrainConfig);
    CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::ordered_json{{"patience", 0}}), InvalidTrainConfig);
    CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::ordered_json{{"bogus", 1}}), InvalidTrainConfig);

    SplitConfig s;
    s.order = SplitOrder::Given;
    s.ratios = {0.6, 0.2, 0.2};
    CHECK(SplitConfig::from_json(s.to_json()).to_json() == s.to_json());
}

TEST_CASE("training loop") {
    const auto samples = fixture::corpus(24, datagen::Difficulty::Easy, 4);
    const auto emb = fixture::embedding(samples);
    const auto cfg = fixture::small_ggnn(emb.node_width());
    const auto split = split_dataset(samples, {{0.5, 0.25, 0.25}, SplitOrder::Temporal});
    TrainConfig tc;
    tc.lr = 1e-3;
    tc.max_epochs = 4;

    SUBCASE("deterministic and best-of-history") {
        const auto a = train(cfg, split.train, split.valid, tc, emb);
        const auto b = train(cfg, split.train, split.valid, tc, emb);
        CHECK(nn::encode_checkpoint(a.best.to_checkpoint()) == nn::encode_checkpoint(b.best.to_checkpoint()));
        CHECK(history_without_time(a.history) == history_without_time(b.history));
        REQUIRE_FALSE(a.history.empty());
        auto best = std::min_element(a.history.begin(), a.history.end(),
                                     [](const auto& x, const auto& y) { return x.valid_loss < y.valid_loss; });
        CHECK(a.best_epoch == best->epoch);
        CHECK(mean_loss(a.best, split.valid) == doctest::Approx(best->valid_loss).epsilon(1e-9));
        for (std::size_t i = 1; i < a.history.size(); ++i) CHECK(a.history[i].steps > a.history[i - 1].steps);
        CHECK(a.history.front().steps == static_cast<long>(split.train.size()));

        tc.seed = 2;
        const auto c = train(cfg, split.train, split.valid, tc, emb);
        CHECK(nn::encode_checkpoint(a.best.to_checkpoint()) != nn::encode_checkpoint(c.best.to_checkpoint()));
    }
    SUBCASE("batches and vul-only") {
        tc.batch_size = 4;
        const auto r = train(cfg, split.train, split.valid, tc, emb);
        CHECK(r.history.front().steps == static_cast<long>((split.train.size() + 3) / 4));

        tc.batch_size = 1;
        tc.vul_only = true;
        const auto v = train(cfg, split.train, split.valid, tc, emb);
        const auto vul = std::count_if(split.train.begin(), split.train.end(), [](auto& s) { return s.vulnerable(); });
        CHECK(v.history.front().steps == vul);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(train(cfg, {}, split.valid, tc, emb), EmptyTrainSet);
        std::vector<cpg::Sample> safe;
        for (const auto& s : split.train)
            if (!s.vulnerable()) safe.push_back(s);
        tc.vul_only = true;
        CHECK_THROWS_AS(train(cfg, safe, split.valid, tc, emb), EmptyTrainSet);
        tc.vul_only = false;
        auto wrong = cfg;
        wrong.input_dim += 1;
        CHECK_THROWS_AS(train(wrong, split.train, split.valid, tc, emb), models::InvalidConfig);
        tc.lr = 1e30;
        CHECK_THROWS_AS(train(cfg, split.train, split.valid, tc, emb), NonFiniteLoss);
    }
    SUBCASE("finetune") {
        const auto base = train(cfg, split.train, split.valid, tc, emb).best;

        auto none = TrainConfig::finetune();
        none.max_epochs = 0;
        const auto same = finetune(base, split.train, split.valid, none);
        CHECK(nn::encode_checkpoint(same.best.to_checkpoint()) == nn::encode_checkpoint(base.to_checkpoint()));

        const double before = mean_loss(base, split.valid);
        auto ft = TrainConfig::finetune();
        ft.max_epochs = 5;
        const auto tuned = finetune(base, split.train, split.valid, ft, emb.fingerprint());
        CHECK(mean_loss(tuned.best, split.valid) <= before * 1.05);

        CHECK_THROWS_AS(finetune(base, split.train, split.valid, ft, "0000000000000000"), VocabMismatch);
    }
}

TEST_CASE("overfit a micro-corpus") {
    auto samples = fixture::corpus(40, datagen::Difficulty::Easy, 9, 1.0);
    samples.resize(8);
    const auto emb = fixture::embedding(samples, 32, 8);
    for (auto kind : {models::ModelKind::Ggnn, models::ModelKind::Transformer}) {
        models::ModelConfig cfg;
        cfg.kind = kind;
        TrainConfig tc;
        tc.lr = 1e-3;
        tc.max_epochs = 1000;
        tc.max_steps = 500;
        tc.patience = 1000;
        const auto r = train(cfg, samples, {}, tc, emb);
        CHECK(r.history.back().steps <= 500);
        CHECK(mean_loss(r.best, samples) < 0.01);
    }
}
