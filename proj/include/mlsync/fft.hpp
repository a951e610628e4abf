#pragma once

#include <complex>
#include <span>

namespace mlsync::dsp {

enum class FftDirection { Forward, Backward };

/// Unnormalized DFT of length in.size() (any length; radix-2 is fastest).
///   Forward:  X[k] = sum_n x[n] e^{-j 2 pi k n / L}
///   Backward: x[n] = sum_k X[k] e^{+j 2 pi k n / L}
/// Thread-safe: plans are cached under a lock and executed on caller buffers.
void dft(std::span<const std::complex<double>> in, std::span<std::complex<double>> out,
         FftDirection dir);

} // namespace mlsync::dsp
