#include "mlsync/errors.hpp"
#include "mlsync/pipeline.hpp"
#include "mlsync/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace mlsync;

namespace {

std::string config_error(const json& doc) {
    try {
        run_config_from_json(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(RunConfig, DefaultsDescribeReferenceSystem) {
    auto c = run_config_from_json(json::object());
    EXPECT_EQ(c.system, SystemConfig{});
    ASSERT_EQ(c.models.size(), 1u);
    EXPECT_EQ(c.models[0].variant, net::Variant::Prop);
    ASSERT_EQ(c.eval.channels.size(), 1u);
    EXPECT_EQ(c.eval.channels[0].label(), "EXP-L23");
}

TEST(RunConfig, UnknownKeysNamedByPath) {
    EXPECT_EQ(config_error({{"trian", json::object()}}), "config.trian: unknown key");
    EXPECT_EQ(config_error({{"train", {{"alpah", 0.1}}}}), "train.alpah: unknown key");
    EXPECT_EQ(config_error({{"eval", {{"channels", {{{"kind", "tdl"}, {"name", "TDL-A"}, {"spread", 1}}}}}}}),
              "eval.channels[0].spread: unknown key");
    EXPECT_EQ(config_error({{"models", {{{"name", "X"}, {"varient", "Prop"}}}}}), "models[0].varient: unknown key");
    EXPECT_NE(config_error({{"train", {{"alpha", "fast"}}}}).find("train.alpha"), std::string::npos);
}

TEST(RunConfig, ChannelListsExpandInOrder) {
    json doc = json::parse(R"({"eval": {"channels": [
        {"kind": "exponential", "num_taps": [23, 25, 28]},
        {"kind": "tdl", "name": ["TDL-A", "TDL-B"], "max_delay": 27},
        {"kind": "tdl", "name": "TDL-C", "delay_spread": 1e-7}]}})");
    auto c = run_config_from_json(doc);
    ASSERT_EQ(c.eval.channels.size(), 6u);
    EXPECT_EQ(c.eval.channels[2].num_taps, 28);
    for (int i : {3, 4}) EXPECT_EQ(c.eval.channels[i].build(c.system).max_delay(), 27);
    EXPECT_EQ(c.eval.channels[5].delay_spread, 1e-7);
}

TEST(RunConfig, ChannelValidation) {
    EXPECT_NE(config_error(json::parse(R"({"eval": {"channels": [{"kind": "tdl", "name": "TDL-A"}]}})")), "");
    EXPECT_NE(config_error(json::parse(R"({"eval": {"channels": [{"kind": "ray"}]}})")), "");
    EXPECT_THROW(run_config_from_json(json::parse(R"({"eval": {"channels": [{"num_taps": 33}]}})")), DomainError);
}

TEST(RunConfig, ModelNamesMustBeUsable) {
    EXPECT_NE(config_error(json::parse(R"({"models": [{"name": "A"}, {"name": "A"}]})")), "");
    EXPECT_NE(config_error(json::parse(R"({"models": [{"name": "ClassicArgmax"}]})")), "");
    EXPECT_NE(config_error(json::parse(R"({"models": []})")), "");
    EXPECT_NE(config_error(json::parse(R"({"models": [{"name": "F", "fixed_tau_hat": 32}]})")), "");
}

TEST(RunConfig, MasterSeedDerivesSectionSeeds) {
    auto c = run_config_from_json({{"seed", 5}});
    EXPECT_EQ(c.dataset.master_seed, derive_seed(5, {1}));
    EXPECT_EQ(c.train.seed, derive_seed(5, {2}));
    EXPECT_EQ(c.eval.master_seed, derive_seed(5, {3}));
    EXPECT_NE(config_error({{"seed", 5}, {"train", {{"seed", 1}}}}), "");
}

TEST(RunConfig, ResolvedDocumentReparsesToSameRun) {
    json doc = json::parse(R"({"system": {"N": 64, "Ng": 16}, "seed": 9,
        "models": [{"name": "F", "variant": "Prop", "fixed_tau_hat": 10}],
        "eval": {"snr_db": [0, "inf"], "channels": [{"kind": "tdl", "name": "TDL-B", "max_delay": 12}]}})");
    auto a = run_config_from_json(doc);
    auto b = run_config_from_json(to_json(a));
    EXPECT_EQ(a.digest(), b.digest());
    EXPECT_TRUE(std::isinf(b.eval.snr_points_db[1]));
}

TEST(Overrides, DottedPaths) {
    json doc = json::parse(R"({"train": {"alpha": 0.1}, "models": [{"name": "A"}]})");
    apply_override(doc, "train.alpha=0.5");
    apply_override(doc, "models.0.name=B");
    apply_override(doc, "eval.snr_db=[10]");
    apply_override(doc, "dataset.snr_max_db=inf");
    EXPECT_EQ(doc["train"]["alpha"], 0.5);
    EXPECT_EQ(doc["models"][0]["name"], "B");
    EXPECT_EQ(doc["eval"]["snr_db"], json::parse("[10]"));
    EXPECT_EQ(doc["dataset"]["snr_max_db"], "inf");
    EXPECT_THROW(apply_override(doc, "train.alpha"), ConfigError);
    EXPECT_THROW(apply_override(doc, "models.3.name=x"), ConfigError);
    EXPECT_THROW(apply_override(doc, "train.alpha.x=1"), ConfigError);
    EXPECT_NO_THROW(run_config_from_json(doc));
}

TEST(Pipeline, TrainAndEvaluateSmallRun) {
    json doc = json::parse(R"({"system": {"N": 16, "Ng": 4}, "dataset": {"n_samples": 120},
        "train": {"alpha": 0.01, "max_epochs": 2},
        "models": [{"name": "P"}, {"name": "D", "variant": "DnnBaseline"}],
        "eval": {"snr_db": [10], "trials_per_point": 50, "channels": [{"num_taps": [2, 3]}]}})");
    auto run = run_config_from_json(doc);
    auto data = generate_dataset(dataset_for_model(run, run.models[0]), run.system);
    std::vector<ModelCheckpoint> models;
    for (const auto& m : run.models) models.push_back(train_model(run, m, data));
    EXPECT_EQ(models[0].method, "P");
    EXPECT_EQ(models[0].config_digest.size(), 16u);
    EXPECT_NE(models[0].config_digest, models[1].config_digest);

    auto r = evaluate_models(run, models, 2);
    ASSERT_EQ(r.rows.size(), 6u); // 2 channels x 3 methods
    EXPECT_EQ(r.rows[0].channel, "EXP-L2");
    EXPECT_EQ(r.rows[5].method, "ClassicArgmax");
    EXPECT_EQ(r.at("P", 10.0, "EXP-L3").trials, 50);

    auto raw = run.models[0];
    raw.variant = net::Variant::RawSignalProp;
    EXPECT_THROW(train_model(run, raw, data), ConfigError);
}
