#include "mlsync/serialization.hpp"

#include "mlsync/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mlsync {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                         const std::string& path) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& item : obj.items()) {
        const bool ok = std::any_of(known.begin(), known.end(),
                                    [&](const char* k) { return item.key() == k; });
        if (!ok) throw ConfigError(path + "." + item.key() + ": unknown key");
    }
}

namespace {

template <typename T>
void read_opt(const json& j, const char* key, const std::string& path, T& out) {
    if (j.contains(key)) out = get_as<T>(j, key, path);
}

double read_snr(const json& j, const char* key, const std::string& path, double fallback) {
    if (!j.contains(key)) return fallback;
    return snr_from_json(j.at(key), path + "." + key);
}

} // namespace

double snr_from_json(const json& v, const std::string& path) {
    if (v.is_string() && (v == "inf" || v == "+inf")) return std::numeric_limits<double>::infinity();
    if (!v.is_number()) throw ConfigError(path + ": expected a number or \"inf\"");
    return v.get<double>();
}

json snr_to_json(double v) {
    if (std::isinf(v) && v > 0) return "inf";
    return v;
}

json to_json(const SystemConfig& c) {
    return json{{"N", c.n_subcarriers}, {"Ng", c.cp_len},       {"Nw", c.obs_len},
                {"Ns", c.search_len},   {"Pt", c.tx_power}, {"T", c.sample_period}};
}

SystemConfig system_config_from_json(const json& j, const std::string& path) {
    reject_unknown_keys(j, {"N", "Ng", "Nw", "Ns", "Pt", "T"}, path);
    SystemConfig def;
    int n = def.n_subcarriers, ng = def.cp_len;
    double pt = def.tx_power, t = def.sample_period;
    read_opt(j, "N", path, n);
    read_opt(j, "Ng", path, ng);
    read_opt(j, "Pt", path, pt);
    read_opt(j, "T", path, t);
    SystemConfig c;
    c.n_subcarriers = n;
    c.cp_len = ng;
    c.obs_len = 2 * n + ng;
    c.search_len = n + ng;
    c.tx_power = pt;
    c.sample_period = t;
    // Derived lengths may be given explicitly but must then agree.
    read_opt(j, "Nw", path, c.obs_len);
    read_opt(j, "Ns", path, c.search_len);
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return c;
}

json to_json(const DatasetGenConfig& c) {
    json j{{"n_samples", c.n_samples},
           {"val_fraction", c.val_fraction},
           {"snr_min_db", snr_to_json(c.snr_min_db)},
           {"snr_max_db", snr_to_json(c.snr_max_db)},
           {"eta_min", c.eta_min},
           {"eta_max", c.eta_max},
           {"theta_min", c.theta_min},
           {"theta_max", c.theta_max},
           {"variant", net::to_string(c.variant)},
           {"channel", c.channel == TrainChannel::SinglePath ? "single_path" : "exponential_tied"},
           {"epsilon", c.epsilon},
           {"zc_root", c.zc_root},
           {"master_seed", c.master_seed}};
    j["fixed_tau_hat"] = c.fixed_tau_hat ? json(*c.fixed_tau_hat) : json(nullptr);
    return j;
}

DatasetGenConfig dataset_config_from_json(const json& j, const std::string& path) {
    reject_unknown_keys(j,
                        {"n_samples", "val_fraction", "snr_min_db", "snr_max_db", "eta_min",
                         "eta_max", "theta_min", "theta_max", "variant", "fixed_tau_hat",
                         "channel", "epsilon", "zc_root", "master_seed"},
                        path);
    DatasetGenConfig c;
    read_opt(j, "n_samples", path, c.n_samples);
    read_opt(j, "val_fraction", path, c.val_fraction);
    c.snr_min_db = read_snr(j, "snr_min_db", path, c.snr_min_db);
    c.snr_max_db = read_snr(j, "snr_max_db", path, c.snr_max_db);
    read_opt(j, "eta_min", path, c.eta_min);
    read_opt(j, "eta_max", path, c.eta_max);
    read_opt(j, "theta_min", path, c.theta_min);
    read_opt(j, "theta_max", path, c.theta_max);
    if (j.contains("variant")) c.variant = net::variant_from_string(get_as<std::string>(j, "variant", path));
    if (j.contains("fixed_tau_hat") && !j.at("fixed_tau_hat").is_null())
        c.fixed_tau_hat = get_as<int>(j, "fixed_tau_hat", path);
    if (j.contains("channel")) {
        const auto ch = get_as<std::string>(j, "channel", path);
        if (ch == "single_path")
            c.channel = TrainChannel::SinglePath;
        else if (ch == "exponential_tied")
            c.channel = TrainChannel::ExponentialTied;
        else
            throw ConfigError(path + ".channel: unknown value '" + ch + "'");
    }
    read_opt(j, "epsilon", path, c.epsilon);
    read_opt(j, "zc_root", path, c.zc_root);
    read_opt(j, "master_seed", path, c.master_seed);
    return c;
}

json to_json(const TrainConfig& c) {
    return json{{"alpha", c.alpha},         {"batch_size", c.batch_size}, {"max_epochs", c.max_epochs},
                {"max_steps", c.max_steps}, {"patience", c.patience},     {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j, const std::string& path) {
    reject_unknown_keys(j, {"alpha", "batch_size", "max_epochs", "max_steps", "patience", "seed"}, path);
    TrainConfig c;
    read_opt(j, "alpha", path, c.alpha);
    read_opt(j, "batch_size", path, c.batch_size);
    read_opt(j, "max_epochs", path, c.max_epochs);
    read_opt(j, "max_steps", path, c.max_steps);
    read_opt(j, "patience", path, c.patience);
    read_opt(j, "seed", path, c.seed);
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return c;
}

json to_json(const net::NetworkArch& a) {
    return json{{"variant", net::to_string(a.variant)},
                {"input_len", a.input_len},
                {"kernel_len", a.kernel_len},
                {"filters", a.filters},
                {"output_len", a.output_len}};
}

net::NetworkArch arch_from_json(const json& j, const std::string& path) {
    reject_unknown_keys(j, {"variant", "input_len", "kernel_len", "filters", "output_len"}, path);
    net::NetworkArch a;
    a.variant = net::variant_from_string(get_as<std::string>(j, "variant", path));
    a.input_len = get_as<int>(j, "input_len", path);
    a.kernel_len = get_as<int>(j, "kernel_len", path);
    a.filters = get_as<int>(j, "filters", path);
    a.output_len = get_as<int>(j, "output_len", path);
    a.validate();
    return a;
}

json to_json(const TrainReport& r) {
    json epochs = json::array();
    for (const auto& e : r.epochs)
        epochs.push_back({{"epoch", e.epoch}, {"train_mse", e.train_mse}, {"val_mse", e.val_mse}});
    return json{{"epochs", epochs},
                {"steps", r.steps},
                {"best_epoch", r.best_epoch},
                {"best_val_mse", r.best_val_mse},
                {"stop_reason", r.stop_reason},
                {"wall_seconds", r.wall_seconds}};
}

} // namespace mlsync
