#include "mlsync/errors.hpp"
#include "mlsync/lightnet.hpp"
#include "mlsync/random.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mlsync;
using namespace mlsync::net;

namespace {

const SystemConfig kToy = SystemConfig::make(16, 4); // N_s = 20, N_w = 36

std::vector<double> random_vector(std::size_t n, RandomStream& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform();
    return v;
}

} // namespace

TEST(Arch, ShapesPerVariant) {
    auto c = SystemConfig::make(128, 32);
    auto prop = NetworkArch::for_system(Variant::Prop, c);
    EXPECT_EQ(prop.input_len, 160);
    EXPECT_EQ(prop.kernel_len, 33);
    EXPECT_EQ(prop.filters, 4);
    auto raw = NetworkArch::for_system(Variant::RawSignalProp, c);
    EXPECT_EQ(raw.input_len, 288);
    EXPECT_EQ(raw.output_len, 160);
    auto dnn = NetworkArch::for_system(Variant::DnnBaseline, c);
    auto p = zero_params(dnn);
    ASSERT_EQ(p.dense.size(), 3u);
    for (auto& d : p.dense) EXPECT_EQ(d.out, 160);
    EXPECT_EQ(variant_from_string("RawSignalProp"), Variant::RawSignalProp);
    EXPECT_THROW(variant_from_string("Cnn"), ConfigError);
}

TEST(Init, DeterministicShapesAndZeroBias) {
    auto c = SystemConfig::make(128, 32);
    auto arch = NetworkArch::for_system(Variant::Prop, c);
    auto a = init_network(arch, 3);
    auto b = init_network(arch, 3);
    EXPECT_TRUE(a.same_values(b));
    EXPECT_FALSE(a.same_values(init_network(arch, 4)));
    EXPECT_EQ(a.conv.weights.size(), 4u * 33u);
    for (double v : a.conv.bias) EXPECT_EQ(v, 0.0);
    for (double v : a.dense[0].bias) EXPECT_EQ(v, 0.0);
    const double limit = std::sqrt(6.0 / (160 + 160));
    for (double v : a.dense[0].weights) EXPECT_LE(std::abs(v), limit);
}

TEST(Forward, ZeroNetworkOutputsHalf) {
    auto p = zero_params(NetworkArch::for_system(Variant::Prop, kToy));
    RandomStream rng(1);
    for (double v : forward(p, random_vector(20, rng))) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Forward, DeltaKernelAndIdentityDense) {
    auto p = zero_params(NetworkArch::for_system(Variant::Prop, kToy));
    p.conv.weights[2] = 1.0; // filter 0, center tap of a length-5 kernel
    for (int i = 0; i < 20; ++i) p.dense[0].weights[i * 20 + i] = 1.0;
    std::vector<double> in(20);
    for (int i = 0; i < 20; ++i) in[i] = (i % 3 == 0 ? -1.0 : 1.0) * 0.1 * i;
    auto out = forward(p, in);
    for (int i = 0; i < 20; ++i) EXPECT_NEAR(out[i], oracle::sigmoid(std::max(in[i], 0.0) / 4.0), 1e-15);
}

TEST(Forward, MatchesStraightLineOracle) {
    auto c = SystemConfig::make(16, 2); // N_s = 18, kernel 3
    auto p = init_network(NetworkArch::for_system(Variant::Prop, c), 17);
    RandomStream rng(2);
    for (double& b : p.conv.bias) b = rng.uniform(-0.2, 0.2);
    for (double& b : p.dense[0].bias) b = rng.uniform(-0.2, 0.2);
    auto in = random_vector(18, rng);
    for (double& v : in) v -= 0.3;

    std::vector<std::vector<double>> cw(4, std::vector<double>(3)), dw(18, std::vector<double>(18));
    for (int f = 0; f < 4; ++f)
        for (int k = 0; k < 3; ++k) cw[f][k] = p.conv.weights[f * 3 + k];
    for (int o = 0; o < 18; ++o)
        for (int i = 0; i < 18; ++i) dw[o][i] = p.dense[0].weights[o * 18 + i];
    auto ref = oracle::prop_forward(in, cw, p.conv.bias, dw, p.dense[0].bias);
    auto out = forward(p, in);
    for (int i = 0; i < 18; ++i) EXPECT_NEAR(out[i], ref[i], 1e-12);
}

TEST(Forward, ConvPaddingPreservesLengthAndPoolingAverages) {
    auto p = init_network(NetworkArch::for_system(Variant::Prop, kToy), 5);
    RandomStream rng(3);
    auto in = random_vector(20, rng);
    ForwardCache cache;
    forward(p, in, cache);
    ASSERT_EQ(cache.conv_pre.size(), 4u * 20u);
    ASSERT_EQ(cache.acts[0].size(), 20u);
    for (int i = 0; i < 20; ++i) {
        double mean = 0.0;
        for (int f = 0; f < 4; ++f) mean += std::max(cache.conv_pre[f * 20 + i], 0.0);
        EXPECT_NEAR(cache.acts[0][i], mean / 4.0, 1e-15);
    }
}

TEST(Forward, OutputsStrictlyInsideUnitInterval) {
    for (auto v : {Variant::Prop, Variant::DnnBaseline, Variant::RawSignalProp}) {
        auto arch = NetworkArch::for_system(v, kToy);
        for (int s = 0; s < 10; ++s) {
            auto p = init_network(arch, s);
            RandomStream rng(s);
            for (auto& b : p.dense.back().bias) b = rng.uniform(-30, 30);
            for (double o : forward(p, random_vector(arch.input_len, rng))) {
                EXPECT_GT(o, 0.0);
                EXPECT_LT(o, 1.0);
            }
        }
    }
}

TEST(Forward, RejectsWrongInputLength) {
    auto p = zero_params(NetworkArch::for_system(Variant::Prop, kToy));
    EXPECT_THROW(forward(p, std::vector<double>(19)), DomainError);
}

TEST(Loss, Examples) {
    std::vector<double> out(160, 0.5);
    std::vector<std::uint8_t> label(160, 0);
    for (int i = 17; i <= 32; ++i) label[i] = 1;
    EXPECT_DOUBLE_EQ(mse_loss(out, label), 40.0);
    std::vector<double> exact(label.begin(), label.end());
    EXPECT_EQ(mse_loss(exact, label), 0.0);

    RandomStream rng(4);
    auto a = random_vector(50, rng), b = random_vector(50, rng);
    double ref = 0.0;
    for (int i = 49; i >= 0; --i) ref += (a[i] - b[i]) * (a[i] - b[i]);
    EXPECT_NEAR(mse_loss(a, b), ref, 1e-12);
    EXPECT_THROW(mse_loss(a, std::vector<double>(3)), DomainError);
}

TEST(Backward, ZeroAtPerfectFit) {
    auto p = init_network(NetworkArch::for_system(Variant::Prop, kToy), 9);
    RandomStream rng(5);
    ForwardCache cache;
    auto out = forward(p, random_vector(20, rng), cache);
    auto g = backward(p, cache, out);
    for (auto t : g.tensors())
        for (double v : t) EXPECT_EQ(v, 0.0);
}

TEST(Backward, ZeroInputCarriesNoConvWeightGradient) {
    auto p = init_network(NetworkArch::for_system(Variant::Prop, kToy), 9);
    ForwardCache cache;
    forward(p, std::vector<double>(20, 0.0), cache);
    std::vector<double> label(20, 0.0);
    label[3] = 1.0;
    auto g = backward(p, cache, label);
    for (double v : g.conv.weights) EXPECT_EQ(v, 0.0);
    double bias_norm = 0.0;
    for (double v : g.dense[0].bias) bias_norm += std::abs(v);
    EXPECT_GT(bias_norm, 0.0);
}

TEST(Backward, StaleCacheIsAContractViolation) {
    auto p = init_network(NetworkArch::for_system(Variant::Prop, kToy), 9);
    ForwardCache cache;
    forward(p, std::vector<double>(20, 0.5), cache);
    std::vector<double> label(20, 0.0);
    auto g = backward(p, cache, label);
    sgd_step(p, g, 0.1, 1);
    EXPECT_THROW(backward(p, cache, label), std::logic_error);
    auto other = p;
    EXPECT_THROW(backward(other, cache, label), std::logic_error);
}

TEST(Sgd, Arithmetic) {
    auto arch = NetworkArch::for_system(Variant::Prop, kToy);
    auto p = zero_params(arch);
    auto g = zero_params(arch);
    p.dense[0].bias[0] = 1.0;
    g.dense[0].bias[0] = 0.5;
    sgd_step(p, g, 0.002, 1);
    EXPECT_DOUBLE_EQ(p.dense[0].bias[0], 0.999);
    EXPECT_EQ(p.revision, 1u);

    auto before = p;
    sgd_step(p, zero_params(arch), 0.002, 1);
    EXPECT_TRUE(p.same_values(before));
}

TEST(Sgd, BatchMeanIdentity) {
    auto arch = NetworkArch::for_system(Variant::Prop, kToy);
    auto base = init_network(arch, 2);
    RandomStream rng(6);
    ForwardCache cache;
    forward(base, random_vector(20, rng), cache);
    std::vector<double> label(20, 0.0);
    label[10] = 1.0;
    auto single = backward(base, cache, label);
    auto four = zero_params(arch);
    for (int i = 0; i < 4; ++i) accumulate_backward(base, cache, label, four);

    auto a = base, b = base;
    sgd_step(a, single, 0.01, 1);
    sgd_step(b, four, 0.01, 4);
    auto ta = a.tensors(), tb = b.tensors();
    for (std::size_t t = 0; t < ta.size(); ++t)
        for (std::size_t i = 0; i < ta[t].size(); ++i) EXPECT_NEAR(ta[t][i], tb[t][i], 1e-15);
}

TEST(Sgd, NonFiniteGradientRejected) {
    auto arch = NetworkArch::for_system(Variant::Prop, kToy);
    auto p = zero_params(arch);
    auto g = zero_params(arch);
    g.dense[0].weights[7] = std::nan("");
    EXPECT_THROW(sgd_step(p, g, 0.1, 1), TrainingError);
}

TEST(Sgd, SmallStepDecreasesSampleLoss) {
    for (auto v : {Variant::Prop, Variant::DnnBaseline, Variant::RawSignalProp}) {
        auto arch = NetworkArch::for_system(v, kToy);
        for (int s = 0; s < 5; ++s) {
            auto p = init_network(arch, 100 + s);
            RandomStream rng(s);
            auto in = random_vector(arch.input_len, rng);
            std::vector<double> label(arch.output_len, 0.0);
            label[s + 3] = 1.0;
            ForwardCache cache;
            const double before = mse_loss(forward(p, in, cache), label);
            sgd_step(p, backward(p, cache, label), 1e-3, 1);
            EXPECT_LT(mse_loss(forward(p, in), label), before) << to_string(v);
        }
    }
}

TEST(GradCheck, AllVariantsPassAtToyDims) {
    for (auto v : {Variant::Prop, Variant::DnnBaseline, Variant::RawSignalProp}) {
        auto report = grad_check(NetworkArch::for_system(v, kToy), 1234, 3);
        EXPECT_TRUE(report.passed) << to_string(v) << " max rel error " << report.max_rel_error;
        EXPECT_GT(report.params_checked, 0u);
    }
}

TEST(GradCheck, CorruptedGradientIsReported) {
    GradCheckOptions opt;
    opt.tamper = [](Gradients& g) { g.dense[0].weights[5] += 0.05; };
    auto report = grad_check(NetworkArch::for_system(Variant::Prop, kToy), 1234, 1, opt);
    EXPECT_FALSE(report.passed);
    EXPECT_GT(report.max_rel_error, 1e-2);
}
