#include "mlsync/lightnet.hpp"

#include "mlsync/errors.hpp"
#include "mlsync/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mlsync::net {
namespace {

constexpr int kFilters = 4;

double sigmoid(double z) {
    // Branches keep exp() from overflowing for large |z|.
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

DenseLayer make_dense(int in, int out) {
    DenseLayer d;
    d.in = in;
    d.out = out;
    d.weights.assign(static_cast<std::size_t>(in) * out, 0.0);
    d.bias.assign(static_cast<std::size_t>(out), 0.0);
    return d;
}

// y = W x + b
void dense_apply(const DenseLayer& layer, std::span<const double> x, std::vector<double>& y) {
    y.assign(layer.bias.begin(), layer.bias.end());
    for (int o = 0; o < layer.out; ++o) {
        const double* row = layer.weights.data() + static_cast<std::size_t>(o) * layer.in;
        double acc = 0.0;
        for (int i = 0; i < layer.in; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
        y[static_cast<std::size_t>(o)] += acc;
    }
}

int left_pad(int kernel) { return (kernel - 1) / 2; }

} // namespace

std::string to_string(Variant v) {
    switch (v) {
    case Variant::Prop: return "Prop";
    case Variant::DnnBaseline: return "DnnBaseline";
    case Variant::RawSignalProp: return "RawSignalProp";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    if (s == "Prop") return Variant::Prop;
    if (s == "DnnBaseline") return Variant::DnnBaseline;
    if (s == "RawSignalProp") return Variant::RawSignalProp;
    throw ConfigError("unknown network variant '" + s + "'");
}

NetworkArch NetworkArch::for_system(Variant variant, const SystemConfig& config) {
    config.validate();
    NetworkArch a;
    a.variant = variant;
    a.output_len = config.search_len;
    a.input_len = variant == Variant::RawSignalProp ? config.obs_len : config.search_len;
    if (variant != Variant::DnnBaseline) {
        a.kernel_len = config.cp_len + 1;
        a.filters = kFilters;
    }
    return a;
}

void NetworkArch::validate() const {
    if (input_len <= 0 || output_len <= 0) throw ConfigError("network lengths must be positive");
    if (has_conv() && (kernel_len <= 0 || filters <= 0))
        throw ConfigError("conv network needs positive kernel_len and filters");
    if (!has_conv() && (kernel_len != 0 || filters != 0))
        throw ConfigError("DnnBaseline has no conv layer");
}

std::vector<std::span<double>> NetworkParams::tensors() {
    std::vector<std::span<double>> t;
    if (arch.has_conv()) {
        t.emplace_back(conv.weights);
        t.emplace_back(conv.bias);
    }
    for (auto& d : dense) {
        t.emplace_back(d.weights);
        t.emplace_back(d.bias);
    }
    return t;
}

std::vector<std::span<const double>> NetworkParams::tensors() const {
    std::vector<std::span<const double>> t;
    for (auto s : const_cast<NetworkParams*>(this)->tensors()) t.emplace_back(s);
    return t;
}

std::size_t NetworkParams::size() const {
    std::size_t n = 0;
    for (auto s : tensors()) n += s.size();
    return n;
}

bool NetworkParams::same_values(const NetworkParams& other) const {
    if (!(arch == other.arch)) return false;
    auto a = tensors();
    auto b = other.tensors();
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!std::equal(a[i].begin(), a[i].end(), b[i].begin(), b[i].end())) return false;
    return true;
}

NetworkParams zero_params(const NetworkArch& arch) {
    arch.validate();
    NetworkParams p;
    p.arch = arch;
    if (arch.has_conv()) {
        p.conv.filters = arch.filters;
        p.conv.kernel = arch.kernel_len;
        p.conv.weights.assign(static_cast<std::size_t>(arch.filters) * arch.kernel_len, 0.0);
        p.conv.bias.assign(static_cast<std::size_t>(arch.filters), 0.0);
        p.dense.push_back(make_dense(arch.input_len, arch.output_len));
    } else {
        p.dense.push_back(make_dense(arch.input_len, arch.output_len));
        p.dense.push_back(make_dense(arch.output_len, arch.output_len));
        p.dense.push_back(make_dense(arch.output_len, arch.output_len));
    }
    return p;
}

NetworkParams init_network(const NetworkArch& arch, std::uint64_t seed) {
    NetworkParams p = zero_params(arch);
    RandomStream rng(derive_seed(seed, {0x1417}));
    auto fill = [&](std::vector<double>& w, int fan_in, int fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& v : w) v = rng.uniform(-limit, limit);
    };
    if (arch.has_conv()) fill(p.conv.weights, arch.kernel_len, arch.filters * arch.kernel_len);
    for (auto& d : p.dense) fill(d.weights, d.in, d.out);
    return p;
}

std::vector<double> forward(const NetworkParams& params, std::span<const double> input,
                            ForwardCache& cache) {
    const NetworkArch& arch = params.arch;
    if (input.size() != static_cast<std::size_t>(arch.input_len))
        throw DomainError("forward: input length " + std::to_string(input.size()) + " != " +
                          std::to_string(arch.input_len));

    cache.params = &params;
    cache.revision = params.revision;
    cache.input.assign(input.begin(), input.end());
    cache.acts.clear();
    cache.pre.clear();

    const int len = arch.input_len;
    if (arch.has_conv()) {
        const int k_len = params.conv.kernel;
        const int pad = left_pad(k_len);
        const int filters = params.conv.filters;
        cache.conv_pre.assign(static_cast<std::size_t>(filters) * len, 0.0);
        std::vector<double> pooled(static_cast<std::size_t>(len), 0.0);
        for (int c = 0; c < filters; ++c) {
            const double* w = params.conv.weights.data() + static_cast<std::size_t>(c) * k_len;
            double* pre = cache.conv_pre.data() + static_cast<std::size_t>(c) * len;
            for (int i = 0; i < len; ++i) {
                // Zero padding: only taps landing inside the input contribute.
                const int k_lo = std::max(0, pad - i);
                const int k_hi = std::min(k_len, len + pad - i);
                double acc = params.conv.bias[static_cast<std::size_t>(c)];
                for (int k = k_lo; k < k_hi; ++k) acc += w[k] * input[static_cast<std::size_t>(i + k - pad)];
                pre[i] = acc;
                pooled[static_cast<std::size_t>(i)] += std::max(acc, 0.0);
            }
        }
        for (double& v : pooled) v /= filters;
        cache.acts.push_back(std::move(pooled));
    } else {
        cache.conv_pre.clear();
        cache.acts.emplace_back(input.begin(), input.end());
    }

    for (std::size_t li = 0; li < params.dense.size(); ++li) {
        std::vector<double> z;
        dense_apply(params.dense[li], cache.acts.back(), z);
        const bool last = li + 1 == params.dense.size();
        std::vector<double> a(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) a[i] = last ? sigmoid(z[i]) : std::max(z[i], 0.0);
        cache.pre.push_back(std::move(z));
        if (last)
            cache.output = std::move(a);
        else
            cache.acts.push_back(std::move(a));
    }
    return cache.output;
}

std::vector<double> forward(const NetworkParams& params, std::span<const double> input) {
    ForwardCache cache;
    return forward(params, input, cache);
}

double mse_loss(std::span<const double> output, std::span<const double> label) {
    if (output.size() != label.size())
        throw DomainError("mse_loss: output and label lengths differ");
    double s = 0.0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double e = label[i] - output[i];
        s += e * e;
    }
    return s;
}

double mse_loss(std::span<const double> output, std::span<const std::uint8_t> label) {
    std::vector<double> l(label.begin(), label.end());
    return mse_loss(output, l);
}

void accumulate_backward(const NetworkParams& params, const ForwardCache& cache,
                         std::span<const double> label, Gradients& grads) {
    if (cache.params != &params || cache.revision != params.revision)
        throw std::logic_error("backward: forward cache does not belong to these parameters");
    if (label.size() != cache.output.size())
        throw DomainError("backward: label length differs from output length");
    if (!(grads.arch == params.arch)) throw std::logic_error("backward: gradient shape mismatch");

    // dL/dz at the sigmoid head.
    std::vector<double> delta(cache.output.size());
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const double o = cache.output[i];
        delta[i] = 2.0 * (o - label[i]) * o * (1.0 - o);
    }

    std::vector<double> upstream;
    for (std::size_t li = params.dense.size(); li-- > 0;) {
        const DenseLayer& layer = params.dense[li];
        DenseLayer& g = grads.dense[li];
        const std::vector<double>& x = cache.acts[li];
        upstream.assign(static_cast<std::size_t>(layer.in), 0.0);
        for (int o = 0; o < layer.out; ++o) {
            const double d = delta[static_cast<std::size_t>(o)];
            g.bias[static_cast<std::size_t>(o)] += d;
            if (d == 0.0) continue;
            const std::size_t row = static_cast<std::size_t>(o) * layer.in;
            for (int i = 0; i < layer.in; ++i) {
                g.weights[row + i] += d * x[static_cast<std::size_t>(i)];
                upstream[static_cast<std::size_t>(i)] += layer.weights[row + i] * d;
            }
        }
        if (li > 0) {
            // Through the ReLU of the previous dense layer.
            const std::vector<double>& z = cache.pre[li - 1];
            for (std::size_t i = 0; i < upstream.size(); ++i)
                if (z[i] <= 0.0) upstream[i] = 0.0;
            delta = upstream;
        }
    }

    if (!params.arch.has_conv()) return;

    // `upstream` is now dL/d(pooled). Average pooling spreads it evenly over
    // the filters, then the ReLU gates it.
    const int len = params.arch.input_len;
    const int k_len = params.conv.kernel;
    const int pad = left_pad(k_len);
    const int filters = params.conv.filters;
    const double inv_filters = 1.0 / filters;
    for (int c = 0; c < filters; ++c) {
        const double* pre = cache.conv_pre.data() + static_cast<std::size_t>(c) * len;
        double* gw = grads.conv.weights.data() + static_cast<std::size_t>(c) * k_len;
        double gb = 0.0;
        for (int i = 0; i < len; ++i) {
            if (pre[i] <= 0.0) continue;
            const double d = upstream[static_cast<std::size_t>(i)] * inv_filters;
            gb += d;
            const int k_lo = std::max(0, pad - i);
            const int k_hi = std::min(k_len, len + pad - i);
            for (int k = k_lo; k < k_hi; ++k) gw[k] += d * cache.input[static_cast<std::size_t>(i + k - pad)];
        }
        grads.conv.bias[static_cast<std::size_t>(c)] += gb;
    }
}

Gradients backward(const NetworkParams& params, const ForwardCache& cache,
                   std::span<const double> label) {
    Gradients g = zero_params(params.arch);
    accumulate_backward(params, cache, label, g);
    return g;
}

void sgd_step(NetworkParams& params, const Gradients& grads, double alpha, int batch_size) {
    if (!(alpha >= 0.0) || batch_size < 1)
        throw ConfigError("sgd_step: need alpha >= 0 and batch_size >= 1");
    if (!(grads.arch == params.arch)) throw std::logic_error("sgd_step: gradient shape mismatch");
    auto p = params.tensors();
    auto g = grads.tensors();
    for (std::size_t t = 0; t < g.size(); ++t)
        for (std::size_t i = 0; i < g[t].size(); ++i)
            if (!std::isfinite(g[t][i]))
                throw TrainingError("non-finite gradient in tensor " + std::to_string(t) +
                                    " at index " + std::to_string(i));
    const double scale = alpha / batch_size;
    for (std::size_t t = 0; t < p.size(); ++t)
        for (std::size_t i = 0; i < p[t].size(); ++i) p[t][i] -= scale * g[t][i];
    ++params.revision;
}

GradCheckReport grad_check(const NetworkArch& arch, std::uint64_t seed, int trials,
                           const GradCheckOptions& options) {
    if (trials < 1) throw ConfigError("grad_check needs trials >= 1");
    GradCheckReport report;
    report.variant = arch.variant;
    report.trials = trials;

    for (int t = 0; t < trials; ++t) {
        NetworkParams params = init_network(arch, derive_seed(seed, {static_cast<std::uint64_t>(t), 1}));
        RandomStream rng(derive_seed(seed, {static_cast<std::uint64_t>(t), 2}));
        // Non-zero biases so bias paths carry gradient.
        for (double& b : params.conv.bias) b = rng.uniform(-0.1, 0.1);
        for (auto& d : params.dense)
            for (double& b : d.bias) b = rng.uniform(-0.1, 0.1);

        std::vector<double> input(static_cast<std::size_t>(arch.input_len));
        for (double& v : input) v = rng.uniform();
        std::vector<double> label(static_cast<std::size_t>(arch.output_len));
        for (double& v : label) v = rng.uniform() < 0.3 ? 1.0 : 0.0;

        ForwardCache cache;
        forward(params, input, cache);
        Gradients analytic = backward(params, cache, label);
        if (options.tamper) options.tamper(analytic);

        auto p = params.tensors();
        auto g = analytic.tensors();
        for (std::size_t ti = 0; ti < p.size(); ++ti) {
            for (std::size_t i = 0; i < p[ti].size(); ++i) {
                const double saved = p[ti][i];
                p[ti][i] = saved + options.step;
                const double up = mse_loss(forward(params, input), label);
                p[ti][i] = saved - options.step;
                const double down = mse_loss(forward(params, input), label);
                p[ti][i] = saved;
                const double numeric = (up - down) / (2.0 * options.step);
                const double a = g[ti][i];
                const double denom = std::max({std::abs(a), std::abs(numeric), options.abs_floor});
                const double rel = std::abs(a - numeric) / denom;
                report.max_rel_error = std::isfinite(rel) ? std::max(report.max_rel_error, rel)
                                                          : std::numeric_limits<double>::infinity();
                ++report.params_checked;
            }
        }
    }
    report.passed = report.max_rel_error < options.tolerance;
    return report;
}

} // namespace mlsync::net
