#include "mlsync/ofdm.hpp"

#include "mlsync/errors.hpp"
#include "mlsync/fft.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace mlsync {

TrainingSymbol training_symbol_from_spectrum(const SystemConfig& config,
                                             std::span<const cdouble> spectrum) {
    config.validate();
    const auto n = static_cast<std::size_t>(config.n_subcarriers);
    if (spectrum.size() != n)
        throw DomainError("spectrum length " + std::to_string(spectrum.size()) + " != N");

    TrainingSymbol sym;
    sym.freq.assign(spectrum.begin(), spectrum.end());
    sym.time.resize(n);
    dsp::dft(sym.freq, sym.time, dsp::FftDirection::Backward);

    double energy = 0.0;
    for (const auto& v : sym.time) energy += std::norm(v);
    const double mean_power = energy / static_cast<double>(n);
    if (!(mean_power > 0.0)) throw DomainError("training spectrum is all zero");

    const double scale = std::sqrt(config.tx_power / mean_power);
    for (auto& v : sym.freq) v *= scale;
    for (auto& v : sym.time) v *= scale;
    sym.replica = sym.time;
    return sym;
}

TrainingSymbol generate_training_symbol(const SystemConfig& config, int root) {
    config.validate();
    const int n = config.n_subcarriers;
    if (root <= 0 || root >= n || std::gcd(root, n) != 1)
        throw DomainError("Zadoff-Chu root " + std::to_string(root) + " must be coprime with N");

    // Even-length Zadoff-Chu: z(k) = exp(-j pi u k^2 / N). k^2 is reduced mod 2N
    // to keep the phase argument small and exact.
    CVector zc(static_cast<std::size_t>(n));
    const long long two_n = 2LL * n;
    for (int k = 0; k < n; ++k) {
        const long long q = (static_cast<long long>(root) * k % two_n) * k % two_n;
        const double phase = -std::numbers::pi * static_cast<double>(q) / n;
        zc[static_cast<std::size_t>(k)] = std::polar(1.0, phase);
    }
    return training_symbol_from_spectrum(config, zc);
}

TxFrame assemble_frame(const TrainingSymbol& symbol, int theta, const SystemConfig& config,
                       RandomStream& rng) {
    config.validate();
    const int n = config.n_subcarriers;
    const int ng = config.cp_len;
    if (theta < 0 || theta > n - 1)
        throw DomainError("theta=" + std::to_string(theta) + " outside [0, N-1]");
    if (symbol.time.size() != static_cast<std::size_t>(n))
        throw DomainError("training symbol length does not match N");

    TxFrame frame;
    frame.theta = theta;
    frame.cp_start = theta;
    frame.symbol_start = theta + ng;
    frame.samples.resize(static_cast<std::size_t>(config.obs_len));

    // Filler is drawn for every position in index order so the stream usage
    // does not depend on theta.
    for (auto& v : frame.samples) v = rng.complex_normal(config.tx_power);

    for (int i = 0; i < ng; ++i)
        frame.samples[static_cast<std::size_t>(theta + i)] = symbol.time[static_cast<std::size_t>(n - ng + i)];
    for (int i = 0; i < n; ++i)
        frame.samples[static_cast<std::size_t>(theta + ng + i)] = symbol.time[static_cast<std::size_t>(i)];
    return frame;
}

} // namespace mlsync
