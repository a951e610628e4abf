#pragma once

#include <cstdint>
#include <string>

namespace mlsync {

/// OFDM dimensions shared by every stage of the pipeline.
///
/// The observation window holds one CP-extended training symbol plus
/// N samples of slack, so `obs_len = 2*N + cp_len` and the search length
/// is `search_len = obs_len - N = N + cp_len`.
struct SystemConfig {
    int n_subcarriers = 128;   // N
    int cp_len = 32;           // N_g
    int obs_len = 288;         // N_w
    int search_len = 160;      // N_s
    double tx_power = 1.0;     // P_t (linear)
    double sample_period = 1.0 / (128 * 15e3); // T in seconds, metadata only

    /// Builds a config with derived window lengths and validates it.
    static SystemConfig make(int n_subcarriers, int cp_len, double tx_power = 1.0,
                             double sample_period = 1.0 / (128 * 15e3));

    /// Throws ConfigError if any invariant is violated.
    void validate() const;

    /// Stable 16-hex-digit digest of the fields that affect signal shapes.
    std::string digest() const;

    bool operator==(const SystemConfig&) const = default;
};

/// 64-bit FNV-1a over a byte string.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string to_hex64(std::uint64_t v);

} // namespace mlsync
