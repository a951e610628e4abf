#pragma once

#include "mlsync/config.hpp"
#include "mlsync/ofdm.hpp"
#include "mlsync/random.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mlsync {

enum class PdpKind { Exponential, Tdl };

/// Average power delay profile on the sample grid.
struct PdpProfile {
    PdpKind kind = PdpKind::Exponential;
    std::vector<int> tap_delays;    // samples, strictly increasing, starts at 0
    std::vector<double> tap_powers; // linear, sums to 1
    double eta = 0.0;               // decay exponent (Exponential only)
    std::string name;               // "EXP" or TDL-A/B/C

    int max_delay() const { return tap_delays.empty() ? 0 : tap_delays.back(); }

    /// Throws DomainError unless delays/powers are consistent and the
    /// largest delay is below `cp_len`.
    void validate(int cp_len) const;
};

struct ChannelRealization {
    std::vector<cdouble> taps; // h_l, aligned with profile.tap_delays
    PdpProfile profile;
};

/// Per-observation impairments. An infinite SNR means a noiseless channel.
struct ObservationParams {
    int theta = 0;
    double epsilon = 0.0;     // CFO normalized to subcarrier spacing
    double snr_db = 0.0;
    double noise_variance = 0.0;
};

struct Observation {
    CVector y;
    ObservationParams params;
    ChannelRealization channel;
};

/// Taps at delays 0..L-1 with powers proportional to exp(-eta * l).
/// `cp_len` bounds the delay spread: L must not exceed N_g.
PdpProfile exponential_pdp(int num_taps, double eta, int cp_len);

/// Decay exponent giving `total_decay_db` of attenuation across L taps,
/// i.e. eta = ln(10^{total_decay_db/10}) / (L - 1).
double exponential_eta_for_decay(int num_taps, double total_decay_db);

/// One tap of a standard tapped-delay-line table.
struct TdlTap {
    double normalized_delay;
    double power_db;
};

using TdlTable = std::map<std::string, std::vector<TdlTap>>;

/// Parses `name,normalized_delay,power_db` rows; '#' starts a comment.
TdlTable load_tdl_table(const std::filesystem::path& path);

/// Location of the bundled profile table. Honors $MLSYNC_DATA_DIR.
std::filesystem::path default_tdl_table_path();

/// The table at default_tdl_table_path(), loaded once.
const TdlTable& bundled_tdl_table();

/// Delay spread that puts the last tap of `name` exactly at `max_delay`
/// samples after quantization.
double tdl_delay_spread_for_max_delay(const std::string& name, int max_delay, double sample_period);

/// Quantizes a TDL profile onto the sample grid: every tap delay becomes
/// round(normalized_delay * delay_spread / sample_period), colliding taps
/// have their powers summed, and the result is renormalized to unit energy.
/// Throws DomainError if a delay lands at or beyond `cp_len`.
PdpProfile tdl_profile(const TdlTable& table, const std::string& name, double delay_spread,
                       double sample_period, int cp_len);
PdpProfile tdl_profile(const std::string& name, double delay_spread, double sample_period,
                       int cp_len);

/// Rayleigh realization: h_l = sqrt(p_l) g_l with g_l ~ CN(0, 1).
ChannelRealization sample_channel(const PdpProfile& profile, RandomStream& rng);

/// Realization with every g_l = 1, i.e. h_l = sqrt(p_l).
ChannelRealization deterministic_channel(const PdpProfile& profile);

/// sigma_n^2 = P_t 10^{-snr_db/10}; returns 0 for +inf.
double snr_to_noise_variance(double snr_db, double tx_power);

/// Passes the frame through the channel, rotates by the CFO and adds AWGN:
///   y(n) = e^{j 2 pi eps n / N} sum_l h_l s(n - tau_l) + w(n).
/// Samples before the window start are fresh filler of power P_t.
Observation propagate(const TxFrame& frame, const ChannelRealization& channel,
                      const ObservationParams& params, const SystemConfig& config,
                      RandomStream& rng);

/// Fills `noise_variance` from snr_db and P_t.
ObservationParams make_observation_params(int theta, double snr_db, double epsilon,
                                          const SystemConfig& config);

} // namespace mlsync
