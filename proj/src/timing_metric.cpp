#include "mlsync/timing_metric.hpp"

#include "mlsync/errors.hpp"
#include "mlsync/fft.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace mlsync {

void normalize_by_max(std::span<double> v) {
    if (v.empty()) return;
    const double peak = *std::max_element(v.begin(), v.end());
    if (!(peak > 0.0)) return;
    for (double& x : v) x /= peak;
}

TimingMetricVec compute_metric(std::span<const cdouble> y, std::span<const cdouble> replica,
                               int search_len, bool normalize) {
    const std::size_t n = replica.size();
    if (n == 0 || search_len <= 0 || y.size() < n + static_cast<std::size_t>(search_len) - 1)
        throw DomainError("compute_metric: observation of length " + std::to_string(y.size()) +
                          " cannot hold " + std::to_string(search_len) + " windows of length " +
                          std::to_string(n));

    // Circular correlation of length >= |y| has no wrap-around for lags 0..|y|-n.
    const std::size_t fft_len = std::bit_ceil(y.size());
    CVector ybuf(fft_len), xbuf(fft_len), yf(fft_len), xf(fft_len);
    std::copy(y.begin(), y.end(), ybuf.begin());
    std::copy(replica.begin(), replica.end(), xbuf.begin());
    dsp::dft(ybuf, yf, dsp::FftDirection::Forward);
    dsp::dft(xbuf, xf, dsp::FftDirection::Forward);
    for (std::size_t i = 0; i < fft_len; ++i) yf[i] *= std::conj(xf[i]);
    dsp::dft(yf, ybuf, dsp::FftDirection::Backward);

    // Window energies from a running prefix sum.
    std::vector<double> prefix(y.size() + 1, 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) prefix[i + 1] = prefix[i] + std::norm(y[i]);

    TimingMetricVec out;
    out.m.resize(static_cast<std::size_t>(search_len));
    const double inv_len = 1.0 / static_cast<double>(fft_len);
    for (std::size_t d = 0; d < out.m.size(); ++d) {
        const double energy = prefix[d + n] - prefix[d];
        if (energy > 0.0) {
            const double num = std::norm(ybuf[d] * inv_len);
            out.m[d] = num / energy;
        } else {
            out.m[d] = 0.0;
        }
    }
    if (normalize) normalize_by_max(out.m);
    out.normalized = normalize;
    return out;
}

TimingMetricVec compute_metric(const Observation& obs, const TrainingSymbol& symbol,
                               const SystemConfig& config, bool normalize) {
    if (obs.y.size() != static_cast<std::size_t>(config.obs_len))
        throw DomainError("observation length != N_w");
    if (symbol.replica.size() != static_cast<std::size_t>(config.n_subcarriers))
        throw DomainError("replica length != N");
    return compute_metric(obs.y, symbol.replica, config.search_len, normalize);
}

TimingMetricVec ideal_metric(const ChannelRealization& channel, int theta, double snr_db,
                             const SystemConfig& config) {
    const double noise = snr_to_noise_variance(snr_db, config.tx_power);
    const double factor = noise == 0.0 ? 1.0 : [&] {
        const double rho = config.tx_power / noise;
        return rho / (1.0 + rho);
    }();

    TimingMetricVec out;
    out.m.assign(static_cast<std::size_t>(config.search_len), 0.0);
    const int symbol_start = theta + config.cp_len;
    const auto& delays = channel.profile.tap_delays;
    for (std::size_t l = 0; l < channel.taps.size() && l < delays.size(); ++l) {
        const int d = symbol_start + delays[l];
        if (d < 0 || d >= config.search_len) continue;
        out.m[static_cast<std::size_t>(d)] += factor * std::norm(channel.taps[l]);
    }
    return out;
}

int classic_estimate(std::span<const double> metric) {
    if (metric.empty()) throw DomainError("classic_estimate: empty metric");
    // max_element returns the first maximum.
    return static_cast<int>(std::max_element(metric.begin(), metric.end()) - metric.begin());
}

std::vector<double> received_power(std::span<const cdouble> y) {
    std::vector<double> p(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) p[i] = std::norm(y[i]);
    normalize_by_max(p);
    return p;
}

} // namespace mlsync
