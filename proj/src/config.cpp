#include "mlsync/config.hpp"

#include "mlsync/errors.hpp"

#include <cmath>
#include <cstdio>
#include <string_view>

namespace mlsync {

SystemConfig SystemConfig::make(int n_subcarriers, int cp_len, double tx_power,
                                double sample_period) {
    SystemConfig c;
    c.n_subcarriers = n_subcarriers;
    c.cp_len = cp_len;
    c.obs_len = 2 * n_subcarriers + cp_len;
    c.search_len = c.obs_len - n_subcarriers;
    c.tx_power = tx_power;
    c.sample_period = sample_period;
    c.validate();
    return c;
}

void SystemConfig::validate() const {
    const int n = n_subcarriers;
    if (n < 8 || (n & (n - 1)) != 0)
        throw ConfigError("N must be a power of two >= 8, got " + std::to_string(n));
    // 0 < N_g <= N/4; the reference setup uses N_g = N/4 exactly.
    if (cp_len <= 0 || 4 * cp_len > n)
        throw ConfigError("N_g must satisfy 0 < N_g <= N/4, got N_g=" + std::to_string(cp_len) +
                          " N=" + std::to_string(n));
    if (obs_len != 2 * n + cp_len)
        throw ConfigError("N_w must equal 2N + N_g, got " + std::to_string(obs_len));
    if (search_len != obs_len - n)
        throw ConfigError("N_s must equal N_w - N, got " + std::to_string(search_len));
    if (!(tx_power > 0.0) || !std::isfinite(tx_power))
        throw ConfigError("P_t must be positive and finite");
    if (!(sample_period > 0.0) || !std::isfinite(sample_period))
        throw ConfigError("sample period must be positive and finite");
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string SystemConfig::digest() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "N=%d;Ng=%d;Nw=%d;Ns=%d;Pt=%.17g", n_subcarriers, cp_len,
                  obs_len, search_len, tx_power);
    return to_hex64(fnv1a64(buf));
}

} // namespace mlsync
