#pragma once

#include "mlsync/evaluator.hpp"
#include "mlsync/serialization.hpp"
#include "mlsync/trainer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mlsync {

/// A network to train: the dataset variant plus an optional fixed tau_hat.
struct ModelSpec {
    std::string name;
    net::Variant variant = net::Variant::Prop;
    std::optional<int> fixed_tau_hat;
};

/// Evaluation settings shared by every channel of a sweep.
struct EvalSettings {
    std::vector<double> snr_points_db{0, 5, 10, 15, 20};
    int trials_per_point = 5000;
    double epsilon = 0.0;
    int zc_root = 1;
    std::uint64_t master_seed = 2024;
    bool classic = true; // include the correlation-argmax baseline
    std::vector<ChannelSpec> channels{ChannelSpec::exponential(23)};
    bool keep_outcomes = false; // in memory only; not part of the document

    EvalConfig for_channel(const ChannelSpec& channel) const;
};

/// One document describing a whole run.
struct RunConfig {
    SystemConfig system;
    DatasetGenConfig dataset;
    TrainConfig train;
    std::vector<ModelSpec> models{{"Prop", net::Variant::Prop, std::nullopt}};
    EvalSettings eval;
    std::string output_dir; // empty: $MLSYNC_OUT/<subcommand>
    std::optional<std::uint64_t> seed;

    void validate() const;
    std::string digest() const;
};

/// Parses a run document; unknown keys anywhere raise ConfigError with the
/// dotted path. Channel entries may list several tap counts or TDL names and
/// are expanded in order. A top-level "seed" replaces the dataset, training
/// and evaluation seeds with values derived from it.
RunConfig run_config_from_json(const json& j);
json to_json(const RunConfig& c);

/// Applies `a.b.c=value` to the document. The value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_override(json& doc, const std::string& assignment);

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Dataset generator settings for one model of the run. Models that read
/// the same input representation get identical settings.
DatasetGenConfig dataset_for_model(const RunConfig& run, const ModelSpec& model);

/// Trains `model` on `data` and packages the best parameters.
ModelCheckpoint train_model(const RunConfig& run, const ModelSpec& model, const Dataset& data,
                            TrainReport* report = nullptr);

/// Evaluates the checkpoints (plus the classic baseline if enabled) on every
/// configured channel; rows are grouped by channel in configuration order.
EvalResult evaluate_models(const RunConfig& run, const std::vector<ModelCheckpoint>& models, int workers = 1);

} // namespace mlsync
