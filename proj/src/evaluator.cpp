#include "mlsync/evaluator.hpp"

#include "mlsync/errors.hpp"
#include "mlsync/parallel.hpp"
#include "mlsync/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace mlsync {

int estimate_offset(std::span<const double> output) {
    if (output.empty()) throw DomainError("estimate_offset: empty output");
    return static_cast<int>(std::max_element(output.begin(), output.end()) - output.begin());
}

bool is_correct(int theta_hat, int theta, int tau_true, const SystemConfig& config) {
    return theta_hat >= theta + tau_true + 1 && theta_hat <= theta + config.cp_len;
}

// ---------------------------------------------------------------------------

ChannelSpec ChannelSpec::exponential(int num_taps, std::optional<double> eta) {
    ChannelSpec s;
    s.kind = Kind::Exponential;
    s.num_taps = num_taps;
    s.eta = eta;
    return s;
}

ChannelSpec ChannelSpec::tdl(std::string name, double delay_spread) {
    ChannelSpec s;
    s.kind = Kind::Tdl;
    s.tdl_name = std::move(name);
    s.delay_spread = delay_spread;
    return s;
}

PdpProfile ChannelSpec::build(const SystemConfig& config) const {
    if (kind == Kind::Exponential) {
        const double e = eta ? *eta : exponential_eta_for_decay(num_taps, 10.0);
        return exponential_pdp(num_taps, e, config.cp_len);
    }
    return tdl_profile(tdl_name, delay_spread, config.sample_period, config.cp_len);
}

std::string ChannelSpec::label() const {
    char buf[96];
    if (kind == Kind::Exponential) {
        if (eta)
            std::snprintf(buf, sizeof buf, "EXP-L%d-eta%.6g", num_taps, *eta);
        else
            std::snprintf(buf, sizeof buf, "EXP-L%d", num_taps);
    } else {
        std::snprintf(buf, sizeof buf, "%s-ds%.6g", tdl_name.c_str(), delay_spread);
    }
    return buf;
}

// ---------------------------------------------------------------------------

Method classic_method() {
    return {"ClassicArgmax", [](const TrialContext& ctx) { return classic_estimate(ctx.metric.m); }};
}

Method network_method(std::string name, std::shared_ptr<const net::NetworkParams> params) {
    if (!params) throw ConfigError("network_method: null parameters");
    return {std::move(name), [params](const TrialContext& ctx) {
                const bool raw = params->arch.variant == net::Variant::RawSignalProp;
                const std::vector<double>& input = raw ? ctx.power : ctx.metric.m;
                return estimate_offset(net::forward(*params, input));
            }};
}

double binomial_ci95(long errors, long trials) {
    if (trials <= 0) return 0.0;
    const double p = static_cast<double>(errors) / trials;
    return 1.96 * std::sqrt(p * (1.0 - p) / trials);
}

const EvalRow& EvalResult::at(const std::string& method, double snr_db) const {
    for (const auto& r : rows)
        if (r.method == method && r.snr_db == snr_db) return r;
    throw DomainError("no result for method '" + method + "' at this SNR");
}

const EvalRow& EvalResult::at(const std::string& method, double snr_db, const std::string& channel) const {
    for (const auto& r : rows)
        if (r.method == method && r.snr_db == snr_db && r.channel == channel) return r;
    throw DomainError("no result for method '" + method + "' on " + channel + " at this SNR");
}

EvalResult run_monte_carlo(const EvalConfig& ecfg, const std::vector<Method>& methods,
                           const SystemConfig& config, int workers) {
    config.validate();
    if (ecfg.trials_per_point < 1) throw ConfigError("eval.trials_per_point must be >= 1");
    if (methods.empty()) throw ConfigError("eval needs at least one method");
    const PdpProfile pdp = ecfg.channel.build(config);
    pdp.validate(config.cp_len);
    const TrainingSymbol symbol = generate_training_symbol(config, ecfg.zc_root);
    const std::string channel_label = ecfg.channel.label();
    const int tau_true = pdp.max_delay();

    EvalResult result;
    const auto n_trials = static_cast<std::size_t>(ecfg.trials_per_point);
    for (std::size_t s = 0; s < ecfg.snr_points_db.size(); ++s) {
        const double snr = ecfg.snr_points_db[s];
        // errors[t * M + m]: written by index, so any worker count gives the same counts.
        std::vector<std::uint8_t> errors(n_trials * methods.size(), 0);
        parallel_for(n_trials, workers, [&](std::size_t t) {
            RandomStream rng(derive_seed(ecfg.master_seed, {s, t}));
            const int theta = rng.uniform_int(0, config.n_subcarriers - 1);
            const ChannelRealization ch = sample_channel(pdp, rng);
            const TxFrame frame = assemble_frame(symbol, theta, config, rng);
            const Observation obs =
                propagate(frame, ch, make_observation_params(theta, snr, ecfg.epsilon, config), config, rng);
            const TimingMetricVec metric = compute_metric(obs, symbol, config, true);
            const std::vector<double> power = received_power(obs.y);
            const TrialContext ctx{obs, metric, power, theta, tau_true, config};
            for (std::size_t m = 0; m < methods.size(); ++m) {
                const int theta_hat = methods[m].estimate(ctx);
                errors[t * methods.size() + m] = is_correct(theta_hat, theta, tau_true, config) ? 0 : 1;
            }
        });

        for (std::size_t m = 0; m < methods.size(); ++m) {
            EvalRow row;
            row.method = methods[m].name;
            row.channel = channel_label;
            row.snr_db = snr;
            row.trials = static_cast<long>(n_trials);
            if (ecfg.keep_outcomes) row.outcomes.resize(n_trials);
            for (std::size_t t = 0; t < n_trials; ++t) {
                const std::uint8_t e = errors[t * methods.size() + m];
                row.errors += e;
                if (ecfg.keep_outcomes) row.outcomes[t] = e;
            }
            row.error_probability = static_cast<double>(row.errors) / row.trials;
            row.ci95 = binomial_ci95(row.errors, row.trials);
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

PairedDifference paired_difference(const EvalRow& a, const EvalRow& b) {
    if (a.outcomes.size() != b.outcomes.size() || a.outcomes.empty())
        throw DomainError("paired_difference needs per-trial outcomes over the same trials");
    PairedDifference d;
    for (std::size_t i = 0; i < a.outcomes.size(); ++i) {
        if (a.outcomes[i] && !b.outcomes[i]) ++d.only_a;
        if (b.outcomes[i] && !a.outcomes[i]) ++d.only_b;
    }
    const double n = static_cast<double>(a.outcomes.size());
    d.diff = (d.only_a - d.only_b) / n;
    // Variance of the mean of per-trial differences in {-1, 0, 1}.
    const double second = (d.only_a + d.only_b) / n;
    const double var = std::max(0.0, second - d.diff * d.diff) / n;
    d.ci95 = 1.96 * std::sqrt(var);
    return d;
}

void write_eval_csv(std::ostream& out, const EvalResult& result, bool header) {
    if (header) out << "method,channel,snr_db,trials,errors,error_prob,ci95\n";
    char buf[256];
    for (const auto& r : result.rows) {
        char snr[32];
        if (std::isinf(r.snr_db))
            std::snprintf(snr, sizeof snr, "inf");
        else
            std::snprintf(snr, sizeof snr, "%.2f", r.snr_db);
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%ld,%ld,%.6f,%.6f\n", r.method.c_str(),
                      r.channel.c_str(), snr, r.trials, r.errors, r.error_probability, r.ci95);
        out << buf;
    }
}

// ---------------------------------------------------------------------------

std::string to_string(CmMethod m) {
    switch (m) {
    case CmMethod::JointTsCe: return "Ref-JSandCE";
    case CmMethod::ElmLabel: return "Ref-ELM";
    case CmMethod::Dnn: return "DNN";
    case CmMethod::Proposed: return "Proposed";
    case CmMethod::NnOnly: return "NN-only";
    case CmMethod::Correlator: return "Correlator";
    }
    return "?";
}

CmMethod cm_method_from_string(const std::string& s) {
    for (CmMethod m : {CmMethod::JointTsCe, CmMethod::ElmLabel, CmMethod::Dnn, CmMethod::Proposed,
                       CmMethod::NnOnly, CmMethod::Correlator})
        if (to_string(m) == s) return m;
    throw ConfigError("unknown complexity method '" + s + "'");
}

long long complexity_cm(CmMethod method, const ComplexityDims& dims) {
    const long long n = dims.N, ns = dims.Ns, ng = dims.Ng, l_max = dims.L;
    if (n <= 0 || ns <= 0 || ng <= 0 || l_max <= 0)
        throw DomainError("complexity dimensions must be positive");

    // Formulas are evaluated as exact multiples of 1/4.
    long long quarter = 0;
    switch (method) {
    case CmMethod::JointTsCe: {
        long long total = l_max * n * ns;
        for (long long l = 1; l <= l_max; ++l) total += 3 * l * ns + l * l * l + l * l * ns;
        return total;
    }
    case CmMethod::ElmLabel: quarter = 64 * ns * ns + 16 * ns + 6 * n - 16; break;
    case CmMethod::Dnn: quarter = 3 * ns * ns + 4 * n * ns + 8 * ns + 4 * n - 8; break;
    case CmMethod::Proposed: quarter = 6 * ns * ns + 12 * ns + 4 * n - 8; break;
    case CmMethod::NnOnly: quarter = 2 * ns * ns + 4 * ns * ng; break;
    case CmMethod::Correlator: return ns * n;
    }
    // Round half up (all quantities here are positive).
    return (quarter + 2) / 4;
}

void write_complexity_csv(std::ostream& out, const ComplexityDims& dims,
                          const std::vector<CmMethod>& methods) {
    out << "method,N,N_s,N_g,L,cm\n";
    for (CmMethod m : methods)
        out << to_string(m) << ',' << dims.N << ',' << dims.Ns << ',' << dims.Ng << ',' << dims.L << ','
            << complexity_cm(m, dims) << '\n';
}

} // namespace mlsync
