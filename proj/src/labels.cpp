#include "mlsync/labels.hpp"

#include "mlsync/errors.hpp"

#include <algorithm>
#include <string>

namespace mlsync {
namespace {

void check_theta(int theta, const SystemConfig& config) {
    if (theta < 0 || theta > config.n_subcarriers - 1)
        throw DomainError("theta=" + std::to_string(theta) + " outside [0, N-1]");
}

void check_delay(int tau, const SystemConfig& config, const char* what) {
    if (tau < 0 || tau > config.cp_len - 1)
        throw DomainError(std::string(what) + "=" + std::to_string(tau) + " outside [0, N_g-1]");
}

} // namespace

int sample_tau_hat(const SystemConfig& config, RandomStream& rng) {
    return rng.uniform_int(config.cp_len / 2, config.cp_len - 1);
}

LabelVec make_label(int theta, int tau_hat, const SystemConfig& config) {
    check_theta(theta, config);
    check_delay(tau_hat, config, "tau_hat");
    LabelVec label;
    label.theta = theta;
    label.tau_hat = tau_hat;
    label.gamma.assign(static_cast<std::size_t>(config.search_len), 0);
    for (int d = theta + tau_hat + 1; d <= theta + config.cp_len; ++d)
        label.gamma[static_cast<std::size_t>(d)] = 1;
    return label;
}

LabelMismatch label_mismatch(int theta, int tau_true, int tau_hat, const SystemConfig& config) {
    check_theta(theta, config);
    check_delay(tau_true, config, "tau_true");
    check_delay(tau_hat, config, "tau_hat");
    LabelMismatch out;
    out.tau_true = tau_true;
    out.tau_hat = tau_hat;
    out.gamma_err.assign(static_cast<std::size_t>(config.search_len), 0);
    const int lo = std::min(tau_true, tau_hat);
    const int hi = std::max(tau_true, tau_hat);
    for (int d = theta + lo + 1; d <= theta + hi; ++d) out.gamma_err[static_cast<std::size_t>(d)] = 1;
    return out;
}

} // namespace mlsync
