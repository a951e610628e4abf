#pragma once

#include "mlsync/channel.hpp"
#include "mlsync/config.hpp"
#include "mlsync/ofdm.hpp"

#include <span>
#include <vector>

namespace mlsync {

/// Real, non-negative metric over the N_s candidate offsets.
struct TimingMetricVec {
    std::vector<double> m;
    bool normalized = false;
};

/// Cross-correlation timing metric
///   M(d) = |sum_k x*(k) y(d+k)|^2 / sum_k |y(d+k)|^2,   d = 0 .. N_s-1,
/// evaluated with a transform-domain correlation. Windows with zero energy
/// yield M(d) = 0. With `normalize`, the vector is divided by its maximum.
TimingMetricVec compute_metric(std::span<const cdouble> y, std::span<const cdouble> replica,
                               int search_len, bool normalize);
TimingMetricVec compute_metric(const Observation& obs, const TrainingSymbol& symbol,
                               const SystemConfig& config, bool normalize);

/// Noise-free approximation of the metric:
///   m(d) = rho/(1+rho) * sum_l |h_l|^2 delta(d - (theta + N_g) - tau_l),
/// with rho = P_t / sigma_n^2 (rho -> inf for infinite SNR). Spikes past N_s-1
/// are dropped.
TimingMetricVec ideal_metric(const ChannelRealization& channel, int theta, double snr_db,
                             const SystemConfig& config);

/// Smallest index attaining the maximum; the classic correlator decision.
int classic_estimate(std::span<const double> metric);

/// Divides by the maximum in place; leaves an all-zero vector untouched.
void normalize_by_max(std::span<double> v);

/// |y(n)|^2 over the whole window, max-normalized. Input to the
/// raw-signal ablation network.
std::vector<double> received_power(std::span<const cdouble> y);

} // namespace mlsync
