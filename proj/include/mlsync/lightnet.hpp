#pragma once

#include "mlsync/config.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mlsync::net {

/// Network families. Prop is the conv -> ReLU -> channel-average -> dense ->
/// sigmoid timing network; RawSignalProp is the same network fed with the
/// received power |y|^2 instead of the correlation metric; DnnBaseline is a
/// plain three-layer perceptron with two hidden layers of width N_s.
enum class Variant { Prop, DnnBaseline, RawSignalProp };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct NetworkArch {
    Variant variant = Variant::Prop;
    int input_len = 0;
    int kernel_len = 0; // conv receptive field, N_g + 1
    int filters = 0;
    int output_len = 0;

    /// Standard architecture for a system configuration.
    static NetworkArch for_system(Variant variant, const SystemConfig& config);

    bool has_conv() const { return variant != Variant::DnnBaseline; }
    void validate() const;
    bool operator==(const NetworkArch&) const = default;
};

/// 1-D convolution with `filters` output channels over a single input channel.
/// Weights are row-major [filters x kernel].
struct ConvLayer {
    int filters = 0;
    int kernel = 0;
    std::vector<double> weights;
    std::vector<double> bias;
};

/// Affine map, weights row-major [out x in].
struct DenseLayer {
    int in = 0;
    int out = 0;
    std::vector<double> weights;
    std::vector<double> bias;
};

/// Trainable parameters. Prop-style variants use `conv` and one dense layer;
/// DnnBaseline leaves `conv` empty and uses three dense layers.
struct NetworkParams {
    NetworkArch arch;
    ConvLayer conv;
    std::vector<DenseLayer> dense;
    // Bumped by every in-place update so stale forward caches are detected.
    std::uint64_t revision = 0;

    /// Parameter tensors in a fixed order: conv weights, conv bias, then
    /// weights/bias of every dense layer.
    std::vector<std::span<double>> tensors();
    std::vector<std::span<const double>> tensors() const;
    std::size_t size() const;

    bool same_values(const NetworkParams& other) const;
};

using Gradients = NetworkParams;

/// Zero-valued parameters with the shapes of `arch`.
NetworkParams zero_params(const NetworkArch& arch);

/// Glorot-uniform weights (half-width sqrt(6 / (fan_in + fan_out))), zero biases.
NetworkParams init_network(const NetworkArch& arch, std::uint64_t seed);

/// Intermediate values kept for backpropagation.
struct ForwardCache {
    const NetworkParams* params = nullptr;
    std::uint64_t revision = 0;
    std::vector<double> input;
    std::vector<double> conv_pre;              // [filters x input_len], before ReLU
    std::vector<std::vector<double>> acts;     // input of every dense layer
    std::vector<std::vector<double>> pre;      // pre-activation of every dense layer
    std::vector<double> output;
};

std::vector<double> forward(const NetworkParams& params, std::span<const double> input,
                            ForwardCache& cache);
std::vector<double> forward(const NetworkParams& params, std::span<const double> input);

/// Squared error sum_d (label(d) - output(d))^2.
double mse_loss(std::span<const double> output, std::span<const std::uint8_t> label);
double mse_loss(std::span<const double> output, std::span<const double> label);

/// Adds d(mse_loss)/d(params) for the cached sample into `grads`.
void accumulate_backward(const NetworkParams& params, const ForwardCache& cache,
                         std::span<const double> label, Gradients& grads);
Gradients backward(const NetworkParams& params, const ForwardCache& cache,
                   std::span<const double> label);

/// p <- p - alpha * grad / batch_size for every parameter. Throws
/// TrainingError (naming the tensor) if any gradient is non-finite.
void sgd_step(NetworkParams& params, const Gradients& grads, double alpha, int batch_size);

struct GradCheckReport {
    Variant variant = Variant::Prop;
    int trials = 0;
    std::size_t params_checked = 0;
    double max_rel_error = 0.0;
    bool passed = false;
};

struct GradCheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    // Gradients smaller than this are compared on an absolute scale.
    double abs_floor = 1e-5;
    // Test hook: applied to the analytic gradient before comparison.
    std::function<void(Gradients&)> tamper;
};

/// Compares analytic gradients with central differences on random
/// parameters, inputs and binary labels.
GradCheckReport grad_check(const NetworkArch& arch, std::uint64_t seed, int trials,
                           const GradCheckOptions& options = {});

} // namespace mlsync::net
