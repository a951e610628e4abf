#include "mlsync/trainer.hpp"

#include "mlsync/channel.hpp"
#include "mlsync/errors.hpp"
#include "mlsync/labels.hpp"
#include "mlsync/ofdm.hpp"
#include "mlsync/parallel.hpp"
#include "mlsync/random.hpp"
#include "mlsync/serialization.hpp"
#include "mlsync/timing_metric.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace mlsync {

// ---------------------------------------------------------------------------
// Dataset generation

void DatasetGenConfig::validate(const SystemConfig& config) const {
    if (n_samples < 1) throw ConfigError("dataset.n_samples must be >= 1");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw ConfigError("dataset.val_fraction must lie in (0, 1)");
    if (!(snr_min_db <= snr_max_db)) throw ConfigError("dataset: snr_min_db > snr_max_db");
    if (!(eta_min >= 0.0 && eta_min <= eta_max)) throw ConfigError("dataset: invalid eta range");
    const int hi = theta_max < 0 ? config.n_subcarriers - 1 : theta_max;
    if (theta_min < 0 || theta_min > hi || hi > config.n_subcarriers - 1)
        throw ConfigError("dataset: theta range must lie inside [0, N-1]");
    if (fixed_tau_hat && (*fixed_tau_hat < 0 || *fixed_tau_hat > config.cp_len - 1))
        throw ConfigError("dataset.fixed_tau_hat must lie in [0, N_g-1]");
}

std::string DatasetGenConfig::digest() const { return to_hex64(fnv1a64(to_json(*this).dump())); }

std::span<const float> Dataset::input_row(int i) const {
    return {inputs.data() + static_cast<std::size_t>(i) * input_len, static_cast<std::size_t>(input_len)};
}

std::span<const std::uint8_t> Dataset::label_row(int i) const {
    return {labels.data() + static_cast<std::size_t>(i) * label_len, static_cast<std::size_t>(label_len)};
}

Dataset generate_dataset(const DatasetGenConfig& gen, const SystemConfig& config, int workers) {
    config.validate();
    gen.validate(config);
    const net::NetworkArch arch = net::NetworkArch::for_system(gen.variant, config);
    const TrainingSymbol symbol = generate_training_symbol(config, gen.zc_root);
    const int theta_hi = gen.theta_max < 0 ? config.n_subcarriers - 1 : gen.theta_max;

    Dataset data;
    data.system = config;
    data.gen = gen;
    data.input_len = arch.input_len;
    data.label_len = config.search_len;
    const auto n = static_cast<std::size_t>(gen.n_samples);
    data.n_train = gen.n_samples - static_cast<int>(std::lround(gen.n_samples * gen.val_fraction));
    data.inputs.resize(n * static_cast<std::size_t>(data.input_len));
    data.labels.resize(n * static_cast<std::size_t>(data.label_len));
    data.meta.resize(n);

    parallel_for(n, workers, [&](std::size_t i) {
        SampleMeta meta;
        meta.trial_seed = derive_seed(gen.master_seed, {i});
        RandomStream rng(meta.trial_seed);

        meta.tau_hat = gen.fixed_tau_hat ? *gen.fixed_tau_hat : sample_tau_hat(config, rng);
        meta.eta = rng.uniform(gen.eta_min, gen.eta_max);
        meta.theta = rng.uniform_int(gen.theta_min, theta_hi);
        meta.snr_db = gen.snr_min_db == gen.snr_max_db ? gen.snr_min_db
                                                       : rng.uniform(gen.snr_min_db, gen.snr_max_db);

        const PdpProfile pdp = gen.channel == TrainChannel::SinglePath
                                   ? exponential_pdp(1, 0.0, config.cp_len)
                                   : exponential_pdp(meta.tau_hat + 1, meta.eta, config.cp_len);
        meta.tau_true = pdp.max_delay();

        const ChannelRealization ch = sample_channel(pdp, rng);
        const TxFrame frame = assemble_frame(symbol, meta.theta, config, rng);
        const auto params = make_observation_params(meta.theta, meta.snr_db, gen.epsilon, config);
        const Observation obs = propagate(frame, ch, params, config, rng);

        std::vector<double> features = gen.variant == net::Variant::RawSignalProp
                                           ? received_power(obs.y)
                                           : compute_metric(obs, symbol, config, true).m;
        float* row = data.inputs.data() + i * static_cast<std::size_t>(data.input_len);
        std::transform(features.begin(), features.end(), row, [](double v) { return static_cast<float>(v); });

        const LabelVec label = make_label(meta.theta, meta.tau_hat, config);
        std::copy(label.gamma.begin(), label.gamma.end(),
                  data.labels.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(data.label_len)));
        data.meta[i] = meta;
    });
    return data;
}

// ---------------------------------------------------------------------------
// Dataset persistence

namespace {

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(const unsigned char* p) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("write failed for " + path.string());
}


} // namespace

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    std::ostringstream inputs;
    for (float v : data.inputs) write_le(inputs, v);
    const std::string input_bytes = inputs.str();
    const std::string label_bytes(data.labels.begin(), data.labels.end());

    json meta_rows = json::object();
    json theta = json::array(), tau_true = json::array(), tau_hat = json::array(), eta = json::array(),
         snr = json::array(), seed = json::array();
    for (const auto& m : data.meta) {
        theta.push_back(m.theta);
        tau_true.push_back(m.tau_true);
        tau_hat.push_back(m.tau_hat);
        eta.push_back(m.eta);
        snr.push_back(std::isinf(m.snr_db) ? json("inf") : json(m.snr_db));
        seed.push_back(m.trial_seed);
    }
    meta_rows = {{"theta", theta}, {"tau_true", tau_true}, {"tau_hat", tau_hat},
                 {"eta", eta},     {"snr_db", snr},        {"trial_seed", seed}};

    json meta{{"format_version", kDatasetVersion},
              {"n_samples", data.size()},
              {"n_train", data.n_train},
              {"input_len", data.input_len},
              {"label_len", data.label_len},
              {"system", to_json(data.system)},
              {"system_digest", data.system.digest()},
              {"generator", to_json(data.gen)},
              {"generator_digest", data.gen.digest()},
              {"inputs_fnv1a64", to_hex64(fnv1a64(input_bytes))},
              {"labels_fnv1a64", to_hex64(fnv1a64(label_bytes))},
              {"samples", meta_rows}};

    write_file(dir / "inputs.f32", input_bytes);
    write_file(dir / "labels.u8", label_bytes);
    write_file(dir / "meta.json", meta.dump(1) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
    json meta;
    try {
        meta = json::parse(read_file(dir / "meta.json"));
    } catch (const json::parse_error& e) {
        throw FormatError("meta.json: " + std::string(e.what()));
    }
    try {
        if (meta.at("format_version").get<int>() != kDatasetVersion)
            throw FormatError("dataset format version mismatch");
        Dataset data;
        data.system = system_config_from_json(meta.at("system"));
        data.gen = dataset_config_from_json(meta.at("generator"));
        data.input_len = meta.at("input_len").get<int>();
        data.label_len = meta.at("label_len").get<int>();
        data.n_train = meta.at("n_train").get<int>();
        const int n = meta.at("n_samples").get<int>();

        const std::string input_bytes = read_file(dir / "inputs.f32");
        const std::string label_bytes = read_file(dir / "labels.u8");
        const auto n_inputs = static_cast<std::size_t>(n) * data.input_len;
        const auto n_labels = static_cast<std::size_t>(n) * data.label_len;
        if (input_bytes.size() != n_inputs * sizeof(float) || label_bytes.size() != n_labels)
            throw FormatError("dataset payload size mismatch in " + dir.string());
        if (to_hex64(fnv1a64(input_bytes)) != meta.at("inputs_fnv1a64").get<std::string>() ||
            to_hex64(fnv1a64(label_bytes)) != meta.at("labels_fnv1a64").get<std::string>())
            throw FormatError("dataset payload digest mismatch in " + dir.string());

        data.inputs.resize(n_inputs);
        const auto* p = reinterpret_cast<const unsigned char*>(input_bytes.data());
        for (std::size_t i = 0; i < n_inputs; ++i) data.inputs[i] = read_le<float>(p + i * sizeof(float));
        data.labels.assign(label_bytes.begin(), label_bytes.end());

        const json& rows = meta.at("samples");
        data.meta.resize(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < data.meta.size(); ++i) {
            auto& m = data.meta[i];
            m.theta = rows.at("theta").at(i).get<int>();
            m.tau_true = rows.at("tau_true").at(i).get<int>();
            m.tau_hat = rows.at("tau_hat").at(i).get<int>();
            m.eta = rows.at("eta").at(i).get<double>();
            const json& s = rows.at("snr_db").at(i);
            m.snr_db = s.is_string() ? std::numeric_limits<double>::infinity() : s.get<double>();
            m.trial_seed = rows.at("trial_seed").at(i).get<std::uint64_t>();
        }
        return data;
    } catch (const json::exception& e) {
        throw FormatError("meta.json: " + std::string(e.what()));
    }
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
    if (patience < 1) throw ConfigError("patience must be >= 1");
}

double dataset_mse(const net::NetworkParams& params, const Dataset& data, int begin, int end) {
    if (end <= begin) return 0.0;
    std::vector<double> x(static_cast<std::size_t>(data.input_len));
    std::vector<double> label(static_cast<std::size_t>(data.label_len));
    net::ForwardCache cache;
    double total = 0.0;
    for (int i = begin; i < end; ++i) {
        auto row = data.input_row(i);
        std::copy(row.begin(), row.end(), x.begin());
        auto lrow = data.label_row(i);
        std::copy(lrow.begin(), lrow.end(), label.begin());
        total += net::mse_loss(net::forward(params, x, cache), label);
    }
    return total / (end - begin);
}

TrainResult train(const Dataset& data, const TrainConfig& tcfg, const net::NetworkArch& arch) {
    tcfg.validate();
    arch.validate();
    if (data.input_len != arch.input_len || data.label_len != arch.output_len)
        throw ConfigError("dataset dimensions do not match the network architecture");
    if (data.n_train < 1 || data.n_val() < 1)
        throw ConfigError("training needs at least one training and one validation row");

    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result;
    net::NetworkParams params = net::init_network(arch, tcfg.seed);
    TrainReport& report = result.report;

    auto record = [&](int epoch) {
        EpochRecord rec{epoch, dataset_mse(params, data, 0, data.n_train),
                        dataset_mse(params, data, data.n_train, data.size())};
        if (!std::isfinite(rec.train_mse) || !std::isfinite(rec.val_mse))
            throw TrainingError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
        report.epochs.push_back(rec);
        return rec;
    };

    EpochRecord init = record(0);
    report.best_epoch = 0;
    report.best_val_mse = init.val_mse;
    result.params = params;

    std::vector<int> order(static_cast<std::size_t>(data.n_train));
    std::vector<double> x(static_cast<std::size_t>(data.input_len));
    std::vector<double> label(static_cast<std::size_t>(data.label_len));
    net::ForwardCache cache;
    net::Gradients grads = net::zero_params(arch);

    int stale_epochs = 0;
    report.stop_reason = "max_epochs";
    for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        RandomStream shuffle_rng(derive_seed(tcfg.seed, {0x5348, static_cast<std::uint64_t>(epoch)}));
        std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

        bool step_limit = false;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tcfg.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(tcfg.batch_size));
            for (auto t : grads.tensors()) std::fill(t.begin(), t.end(), 0.0);
            for (std::size_t b = start; b < stop; ++b) {
                const int row = order[b];
                auto in = data.input_row(row);
                std::copy(in.begin(), in.end(), x.begin());
                auto lr = data.label_row(row);
                std::copy(lr.begin(), lr.end(), label.begin());
                net::forward(params, x, cache);
                net::accumulate_backward(params, cache, label, grads);
            }
            net::sgd_step(params, grads, tcfg.alpha, static_cast<int>(stop - start));
            ++report.steps;
            if (tcfg.max_steps > 0 && report.steps >= tcfg.max_steps) {
                step_limit = true;
                break;
            }
        }

        const EpochRecord rec = record(epoch);
        if (rec.val_mse < report.best_val_mse) {
            report.best_val_mse = rec.val_mse;
            report.best_epoch = epoch;
            result.params = params;
            stale_epochs = 0;
        } else if (++stale_epochs >= tcfg.patience) {
            report.stop_reason = "early_stop";
            break;
        }
        if (step_limit) {
            report.stop_reason = "max_steps";
            break;
        }
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// Layout: "MLSYNC-CKPT <version>\n", one line of JSON header, then the
// parameter tensors as little-endian float64 in NetworkParams::tensors()
// order. The header carries the payload length and its FNV-1a digest.

namespace {
constexpr std::string_view kCheckpointMagic = "MLSYNC-CKPT";
}

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path) {
    std::ostringstream payload;
    for (auto t : ckpt.params.tensors())
        for (double v : t) write_le(payload, v);
    const std::string bytes = payload.str();

    json header{{"method", ckpt.method},
                {"arch", to_json(ckpt.params.arch)},
                {"system", to_json(ckpt.system)},
                {"system_digest", ckpt.system.digest()},
                {"config_digest", ckpt.config_digest},
                {"param_count", ckpt.params.size()},
                {"payload_bytes", bytes.size()},
                {"payload_fnv1a64", to_hex64(fnv1a64(bytes))}};

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::string file = std::string(kCheckpointMagic) + " " + std::to_string(kCheckpointVersion) + "\n";
    file += header.dump() + "\n";
    file += bytes;
    write_file(path, file);
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string file = read_file(path);
    const auto nl1 = file.find('\n');
    if (nl1 == std::string::npos) throw FormatError(path.string() + ": missing checkpoint header");
    const std::string first = file.substr(0, nl1);
    const std::string magic = std::string(kCheckpointMagic) + " ";
    if (first.rfind(magic, 0) != 0) throw FormatError(path.string() + ": not a checkpoint file");
    int version = 0;
    try {
        version = std::stoi(first.substr(magic.size()));
    } catch (const std::exception&) {
        throw FormatError(path.string() + ": bad checkpoint version field");
    }
    if (version != kCheckpointVersion)
        throw FormatError(path.string() + ": checkpoint version " + std::to_string(version) +
                          " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");

    const auto nl2 = file.find('\n', nl1 + 1);
    if (nl2 == std::string::npos) throw FormatError(path.string() + ": truncated checkpoint header");
    ModelCheckpoint ckpt;
    ckpt.format_version = version;
    std::size_t payload_bytes = 0;
    std::string payload_digest;
    try {
        const json header = json::parse(file.substr(nl1 + 1, nl2 - nl1 - 1));
        ckpt.method = header.at("method").get<std::string>();
        ckpt.params = net::zero_params(arch_from_json(header.at("arch")));
        ckpt.system = system_config_from_json(header.at("system"));
        ckpt.config_digest = header.at("config_digest").get<std::string>();
        if (header.at("system_digest").get<std::string>() != ckpt.system.digest())
            throw FormatError(path.string() + ": system digest does not match stored system config");
        payload_bytes = header.at("payload_bytes").get<std::size_t>();
        payload_digest = header.at("payload_fnv1a64").get<std::string>();
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": bad checkpoint header: " + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(path.string() + ": bad checkpoint header: " + e.what());
    }

    const std::string_view payload = std::string_view(file).substr(nl2 + 1);
    if (payload.size() != payload_bytes || payload_bytes != ckpt.params.size() * sizeof(double))
        throw FormatError(path.string() + ": checkpoint payload is truncated or oversized");
    if (to_hex64(fnv1a64(payload)) != payload_digest)
        throw FormatError(path.string() + ": checkpoint payload digest mismatch");

    const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
    for (auto t : ckpt.params.tensors())
        for (double& v : t) {
            v = read_le<double>(p);
            p += sizeof(double);
        }
    return ckpt;
}

void require_compatible(const ModelCheckpoint& ckpt, const SystemConfig& config) {
    if (ckpt.system.digest() != config.digest())
        throw ConfigError("checkpoint '" + ckpt.method + "' was trained for system digest " +
                          ckpt.system.digest() + " but evaluation uses " + config.digest());
    const auto expected = net::NetworkArch::for_system(ckpt.params.arch.variant, config);
    if (!(expected == ckpt.params.arch))
        throw ConfigError("checkpoint '" + ckpt.method + "' architecture does not fit the system config");
}

} // namespace mlsync
