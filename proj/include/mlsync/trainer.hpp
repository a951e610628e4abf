#pragma once

#include "mlsync/config.hpp"
#include "mlsync/lightnet.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mlsync {

/// How the true channel of a training sample is drawn.
enum class TrainChannel {
    // Exponential PDP whose largest delay equals the sample's tau_hat.
    ExponentialTied,
    // Single unit-power Rayleigh tap (toy and debugging runs).
    SinglePath,
};

struct DatasetGenConfig {
    int n_samples = 50000;
    double val_fraction = 0.25;
    double snr_min_db = 0.0;
    double snr_max_db = 20.0;
    double eta_min = 0.01;
    double eta_max = 0.2;
    int theta_min = 0;
    int theta_max = -1; // -1 means N-1
    net::Variant variant = net::Variant::Prop;
    // Empty: tau_hat ~ U{floor(N_g/2), ..., N_g-1}. Set: every sample uses it.
    std::optional<int> fixed_tau_hat;
    TrainChannel channel = TrainChannel::ExponentialTied;
    double epsilon = 0.0;
    int zc_root = 1;
    std::uint64_t master_seed = 1;

    void validate(const SystemConfig& config) const;
    std::string digest() const;
};

struct SampleMeta {
    int theta = 0;
    int tau_true = 0;
    int tau_hat = 0;
    double eta = 0.0;
    double snr_db = 0.0;
    std::uint64_t trial_seed = 0;
};

/// Row-major network inputs and binary labels. Rows [0, n_train) form the
/// training split, the remaining rows the validation split.
struct Dataset {
    int input_len = 0;
    int label_len = 0;
    int n_train = 0;
    std::vector<float> inputs;
    std::vector<std::uint8_t> labels;
    std::vector<SampleMeta> meta;
    SystemConfig system;
    DatasetGenConfig gen;

    int size() const { return static_cast<int>(meta.size()); }
    int n_val() const { return size() - n_train; }
    std::span<const float> input_row(int i) const;
    std::span<const std::uint8_t> label_row(int i) const;
};

inline constexpr int kDatasetVersion = 1;

/// Builds the dataset sample by sample; sample i uses a random stream derived
/// from (master_seed, i), so the result does not depend on `workers`.
Dataset generate_dataset(const DatasetGenConfig& gen, const SystemConfig& config, int workers = 1);

/// Writes meta.json, inputs.f32 (little-endian float32) and labels.u8.
void save_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

struct TrainConfig {
    double alpha = 0.002;
    int batch_size = 1;
    int max_epochs = 100;
    long max_steps = 0; // 0: bounded by max_epochs only
    int patience = 10;
    std::uint64_t seed = 7;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
};

struct TrainReport {
    // Epoch 0 holds the losses of the initial parameters.
    std::vector<EpochRecord> epochs;
    long steps = 0;
    int best_epoch = 0;
    double best_val_mse = 0.0;
    std::string stop_reason;
    double wall_seconds = 0.0;
};

struct TrainResult {
    net::NetworkParams params;
    TrainReport report;
};

/// Mini-batch SGD on the summed squared error, averaged over each batch.
/// Stops after max_epochs / max_steps or when the validation loss has not
/// improved for `patience` epochs; returns the best-validation parameters.
TrainResult train(const Dataset& data, const TrainConfig& tcfg, const net::NetworkArch& arch);

/// Mean per-sample squared error over rows [begin, end).
double dataset_mse(const net::NetworkParams& params, const Dataset& data, int begin, int end);

inline constexpr int kCheckpointVersion = 1;

struct ModelCheckpoint {
    std::string method; // evaluation role, e.g. "Prop" or "PropFixedTau"
    net::NetworkParams params;
    SystemConfig system;
    std::string config_digest; // digest of the generating configuration
    int format_version = kCheckpointVersion;
};

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Throws ConfigError unless the checkpoint was produced for `config`.
void require_compatible(const ModelCheckpoint& ckpt, const SystemConfig& config);

} // namespace mlsync
