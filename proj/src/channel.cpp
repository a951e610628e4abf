#include "mlsync/channel.hpp"

#include "mlsync/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#ifndef MLSYNC_DEFAULT_DATA_DIR
#define MLSYNC_DEFAULT_DATA_DIR "data"
#endif

namespace mlsync {

void PdpProfile::validate(int cp_len) const {
    if (tap_delays.empty() || tap_delays.size() != tap_powers.size())
        throw DomainError("PDP must have matching, non-empty delay and power vectors");
    if (tap_delays.front() != 0) throw DomainError("PDP first tap delay must be 0");
    for (std::size_t i = 1; i < tap_delays.size(); ++i)
        if (tap_delays[i] <= tap_delays[i - 1])
            throw DomainError("PDP tap delays must be strictly increasing");
    if (tap_delays.back() >= cp_len)
        throw DomainError("PDP max delay " + std::to_string(tap_delays.back()) +
                          " must be < N_g=" + std::to_string(cp_len));
    double total = 0.0;
    for (double p : tap_powers) {
        if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("PDP tap powers must be positive");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DomainError("PDP tap powers must sum to 1");
}

PdpProfile exponential_pdp(int num_taps, double eta, int cp_len) {
    if (num_taps < 1 || num_taps > cp_len)
        throw DomainError("exponential PDP needs 1 <= L <= N_g, got L=" + std::to_string(num_taps));
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw DomainError("decay exponent must be >= 0");

    PdpProfile pdp;
    pdp.kind = PdpKind::Exponential;
    pdp.eta = eta;
    pdp.name = "EXP";
    pdp.tap_delays.resize(static_cast<std::size_t>(num_taps));
    pdp.tap_powers.resize(static_cast<std::size_t>(num_taps));
    double total = 0.0;
    for (int l = 0; l < num_taps; ++l) {
        pdp.tap_delays[static_cast<std::size_t>(l)] = l;
        pdp.tap_powers[static_cast<std::size_t>(l)] = std::exp(-eta * l);
        total += pdp.tap_powers[static_cast<std::size_t>(l)];
    }
    for (double& p : pdp.tap_powers) p /= total;
    return pdp;
}

double exponential_eta_for_decay(int num_taps, double total_decay_db) {
    if (num_taps <= 1) return 0.0;
    return -std::log(std::pow(10.0, -total_decay_db / 10.0)) / (num_taps - 1);
}

TdlTable load_tdl_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open TDL table " + path.string());
    TdlTable table;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        std::stringstream ss(line);
        std::string name, delay, power;
        if (!std::getline(ss, name, ',') || !std::getline(ss, delay, ',') ||
            !std::getline(ss, power, ','))
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
        name.erase(0, name.find_first_not_of(" \t"));
        name.erase(name.find_last_not_of(" \t\r") + 1);
        try {
            table[name].push_back({std::stod(delay), std::stod(power)});
        } catch (const std::exception&) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad number");
        }
    }
    return table;
}

std::filesystem::path default_tdl_table_path() {
    std::filesystem::path dir = MLSYNC_DEFAULT_DATA_DIR;
    if (const char* env = std::getenv("MLSYNC_DATA_DIR"); env && *env) dir = env;
    return dir / "tdl" / "tdl_profiles.csv";
}

PdpProfile tdl_profile(const TdlTable& table, const std::string& name, double delay_spread,
                       double sample_period, int cp_len) {
    auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown TDL profile '" + name + "'");
    if (!(delay_spread >= 0.0) || !(sample_period > 0.0))
        throw DomainError("TDL needs delay_spread >= 0 and sample_period > 0");

    const double scale = delay_spread / sample_period;
    std::map<int, double> merged;
    for (const auto& tap : it->second) {
        const long delay = std::lround(tap.normalized_delay * scale);
        if (delay >= cp_len)
            throw DomainError(name + " tap delay " + std::to_string(delay) +
                              " samples is not below N_g=" + std::to_string(cp_len));
        merged[static_cast<int>(delay)] += std::pow(10.0, tap.power_db / 10.0);
    }

    PdpProfile pdp;
    pdp.kind = PdpKind::Tdl;
    pdp.name = name;
    double total = 0.0;
    for (const auto& [d, p] : merged) total += p;
    for (const auto& [d, p] : merged) {
        pdp.tap_delays.push_back(d);
        pdp.tap_powers.push_back(p / total);
    }
    // Every standard table starts at delay 0, but guard user-supplied tables.
    if (pdp.tap_delays.front() != 0)
        throw DomainError(name + " has no tap at delay 0");
    return pdp;
}

const TdlTable& bundled_tdl_table() {
    static const TdlTable table = load_tdl_table(default_tdl_table_path());
    return table;
}

double tdl_delay_spread_for_max_delay(const std::string& name, int max_delay, double sample_period) {
    const auto& table = bundled_tdl_table();
    auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown TDL profile '" + name + "'");
    if (max_delay < 0) throw DomainError("max_delay must be non-negative");
    double longest = 0.0;
    for (const auto& tap : it->second) longest = std::max(longest, tap.normalized_delay);
    if (longest <= 0.0) return 0.0;
    return max_delay * sample_period / longest;
}

PdpProfile tdl_profile(const std::string& name, double delay_spread, double sample_period,
                       int cp_len) {
    return tdl_profile(bundled_tdl_table(), name, delay_spread, sample_period, cp_len);
}

ChannelRealization sample_channel(const PdpProfile& profile, RandomStream& rng) {
    ChannelRealization ch;
    ch.profile = profile;
    ch.taps.reserve(profile.tap_powers.size());
    for (double p : profile.tap_powers) ch.taps.push_back(std::sqrt(p) * rng.complex_normal(1.0));
    return ch;
}

ChannelRealization deterministic_channel(const PdpProfile& profile) {
    ChannelRealization ch;
    ch.profile = profile;
    for (double p : profile.tap_powers) ch.taps.emplace_back(std::sqrt(p), 0.0);
    return ch;
}

double snr_to_noise_variance(double snr_db, double tx_power) {
    if (!(tx_power > 0.0)) throw DomainError("P_t must be positive");
    if (std::isinf(snr_db) && snr_db > 0) return 0.0;
    return tx_power * std::pow(10.0, -snr_db / 10.0);
}

ObservationParams make_observation_params(int theta, double snr_db, double epsilon,
                                          const SystemConfig& config) {
    ObservationParams p;
    p.theta = theta;
    p.snr_db = snr_db;
    p.epsilon = epsilon;
    p.noise_variance = snr_to_noise_variance(snr_db, config.tx_power);
    return p;
}

Observation propagate(const TxFrame& frame, const ChannelRealization& channel,
                      const ObservationParams& params, const SystemConfig& config,
                      RandomStream& rng) {
    const auto& delays = channel.profile.tap_delays;
    if (frame.samples.size() != static_cast<std::size_t>(config.obs_len))
        throw DomainError("frame length " + std::to_string(frame.samples.size()) + " != N_w");
    if (channel.taps.size() != delays.size())
        throw DomainError("channel taps and delays differ in length");
    if (params.theta != frame.theta) throw DomainError("observation theta differs from frame theta");
    if (!(params.noise_variance >= 0.0)) throw DomainError("noise variance must be >= 0");

    // history[k] holds the transmit sample at index -(k+1).
    const int max_delay = delays.empty() ? 0 : delays.back();
    CVector history(static_cast<std::size_t>(max_delay));
    for (auto& v : history) v = rng.complex_normal(config.tx_power);

    const int nw = config.obs_len;
    Observation obs;
    obs.params = params;
    obs.channel = channel;
    obs.y.assign(static_cast<std::size_t>(nw), cdouble{});

    const double cfo_step = 2.0 * std::numbers::pi * params.epsilon / config.n_subcarriers;
    for (int n = 0; n < nw; ++n) {
        cdouble acc{};
        for (std::size_t l = 0; l < delays.size(); ++l) {
            const int m = n - delays[l];
            const cdouble s = m >= 0 ? frame.samples[static_cast<std::size_t>(m)]
                                     : history[static_cast<std::size_t>(-m - 1)];
            acc += channel.taps[l] * s;
        }
        if (params.epsilon != 0.0) acc *= std::polar(1.0, cfo_step * n);
        obs.y[static_cast<std::size_t>(n)] = acc;
    }
    if (params.noise_variance > 0.0)
        for (auto& v : obs.y) v += rng.complex_normal(params.noise_variance);
    return obs;
}

} // namespace mlsync
