#pragma once

#include "mlsync/config.hpp"
#include "mlsync/random.hpp"

#include <complex>
#include <span>
#include <vector>

namespace mlsync {

using cdouble = std::complex<double>;
using CVector = std::vector<cdouble>;

/// Frequency- and time-domain forms of the known training symbol.
struct TrainingSymbol {
    CVector freq;    // S(k)
    CVector time;    // s(n) = sum_k S(k) e^{j 2 pi k n / N}
    CVector replica; // x(k), the correlator reference; equal to `time`
};

/// Builds the training symbol from a Zadoff-Chu sequence with root `root`
/// placed on the subcarriers. The root must be coprime with N (odd, since N
/// is a power of two). Power is scaled so that mean |s(n)|^2 == P_t.
TrainingSymbol generate_training_symbol(const SystemConfig& config, int root = 1);

/// Same as above for an arbitrary spectrum; S is rescaled to meet P_t.
TrainingSymbol training_symbol_from_spectrum(const SystemConfig& config, std::span<const cdouble> spectrum);

/// Transmit stream covering the observation window before the channel.
///
/// Offset convention: `theta` is the first sample of the cyclic prefix and
/// the symbol proper starts at `theta + N_g`.
struct TxFrame {
    CVector samples;
    int theta = 0;
    int cp_start = 0;
    int symbol_start = 0;
};

/// Embeds CP + symbol at `theta` (0 <= theta <= N-1) and fills the rest of the
/// window with complex Gaussian data of power P_t.
TxFrame assemble_frame(const TrainingSymbol& symbol, int theta, const SystemConfig& config,
                       RandomStream& rng);

} // namespace mlsync
