#pragma once

#include "mlsync/channel.hpp"
#include "mlsync/config.hpp"
#include "mlsync/labels.hpp"
#include "mlsync/lightnet.hpp"
#include "mlsync/ofdm.hpp"
#include "mlsync/timing_metric.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mlsync {

// ---------------------------------------------------------------------------
// Online decision and scoring

/// Smallest index of the maximum network output.
int estimate_offset(std::span<const double> output);

/// True iff theta + tau_true + 1 <= theta_hat <= theta + N_g, i.e. the DFT
/// window starts inside the ISI-free part of the cyclic prefix.
bool is_correct(int theta_hat, int theta, int tau_true, const SystemConfig& config);

// ---------------------------------------------------------------------------
// Channel descriptors

/// Evaluation channel: an exponential PDP (by tap count and decay) or a
/// quantized TDL profile.
struct ChannelSpec {
    enum class Kind { Exponential, Tdl };
    Kind kind = Kind::Exponential;
    int num_taps = 23;          // Exponential: L, so tau_L = L - 1
    std::optional<double> eta;  // Exponential: unset -> 10 dB total decay over L taps
    std::string tdl_name;       // Tdl
    double delay_spread = 0.0;  // Tdl, seconds
    std::optional<int> max_delay; // Tdl: delay_spread was derived from this target

    static ChannelSpec exponential(int num_taps, std::optional<double> eta = std::nullopt);
    static ChannelSpec tdl(std::string name, double delay_spread);

    PdpProfile build(const SystemConfig& config) const;
    /// Short label used in CSV output, e.g. "EXP-L23" or "TDL-A-ds1.5e-06".
    std::string label() const;
};

// ---------------------------------------------------------------------------
// Monte-Carlo sweep

/// Everything a timing estimator may look at for one trial. The truth fields
/// are for scoring and oracle stubs only.
struct TrialContext {
    const Observation& obs;
    const TimingMetricVec& metric;        // max-normalized correlation metric
    const std::vector<double>& power;     // max-normalized |y|^2
    int theta = 0;
    int tau_true = 0;
    const SystemConfig& config;
};

/// A named timing estimator.
struct Method {
    std::string name;
    std::function<int(const TrialContext&)> estimate;
};

/// argmax of the correlation metric.
Method classic_method();

/// Network estimator; the input (metric or received power) follows the
/// architecture variant.
Method network_method(std::string name, std::shared_ptr<const net::NetworkParams> params);

struct EvalConfig {
    std::vector<double> snr_points_db{0, 5, 10, 15, 20};
    ChannelSpec channel;
    int trials_per_point = 5000;
    double epsilon = 0.0;
    int zc_root = 1;
    std::uint64_t master_seed = 2024;
    bool keep_outcomes = false; // retain per-trial error flags for paired tests
};

struct EvalRow {
    std::string method;
    std::string channel;
    double snr_db = 0.0;
    long trials = 0;
    long errors = 0;
    double error_probability = 0.0;
    double ci95 = 0.0;
    std::vector<std::uint8_t> outcomes; // 1 = timing error, per trial
};

struct EvalResult {
    std::vector<EvalRow> rows; // ordered by snr point, then method

    const EvalRow& at(const std::string& method, double snr_db) const;
    const EvalRow& at(const std::string& method, double snr_db, const std::string& channel) const;
};

/// Trial t at SNR index s draws theta, the channel and all noise from a
/// stream derived from (master_seed, s, t); every method sees the same trial.
EvalResult run_monte_carlo(const EvalConfig& ecfg, const std::vector<Method>& methods,
                           const SystemConfig& config, int workers = 1);

/// Normal-approximation 95% half-width of a binomial proportion.
double binomial_ci95(long errors, long trials);

/// Paired difference p_a - p_b over the same trials with its 95% half-width.
struct PairedDifference {
    double diff = 0.0;
    double ci95 = 0.0;
    long only_a = 0; // trials where only a erred
    long only_b = 0;
};
PairedDifference paired_difference(const EvalRow& a, const EvalRow& b);

void write_eval_csv(std::ostream& out, const EvalResult& result, bool header = true);

// ---------------------------------------------------------------------------
// Complexity in complex multiplications

enum class CmMethod { JointTsCe, ElmLabel, Dnn, Proposed, NnOnly, Correlator };

struct ComplexityDims {
    long N = 128;
    long Ns = 160;
    long Ng = 32;
    long L = 23;
};

std::string to_string(CmMethod m);
CmMethod cm_method_from_string(const std::string& s);

/// Exact evaluation of the closed-form cost; half-integers round up.
long long complexity_cm(CmMethod method, const ComplexityDims& dims);

void write_complexity_csv(std::ostream& out, const ComplexityDims& dims,
                          const std::vector<CmMethod>& methods);

} // namespace mlsync
