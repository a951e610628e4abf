#pragma once

#include "mlsync/config.hpp"
#include "mlsync/random.hpp"

#include <cstdint>
#include <vector>

namespace mlsync {

/// Binary training target over the N_s candidate offsets. Ones mark the
/// window starts {theta + tau_hat + 1, ..., theta + N_g} that are free of
/// inter-symbol interference when the channel's largest delay is tau_hat.
struct LabelVec {
    std::vector<std::uint8_t> gamma;
    int tau_hat = 0;
    int theta = 0;

    int first_one() const { return theta + tau_hat + 1; }
};

/// Disagreement between the label built for `tau_hat` and the one the true
/// largest delay `tau_true` implies (element-wise XOR).
struct LabelMismatch {
    std::vector<std::uint8_t> gamma_err;
    int tau_true = 0;
    int tau_hat = 0;
};

/// Draws tau_hat uniformly from {floor(N_g/2), ..., N_g-1}.
int sample_tau_hat(const SystemConfig& config, RandomStream& rng);

LabelVec make_label(int theta, int tau_hat, const SystemConfig& config);

LabelMismatch label_mismatch(int theta, int tau_true, int tau_hat, const SystemConfig& config);

} // namespace mlsync
