#include "mlsync/fft.hpp"

#include "mlsync/errors.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace mlsync::dsp {
namespace {

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(int n, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::vector<std::complex<double>> a(n), b(n);
        fftw_plan plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(a.data()),
                                          reinterpret_cast<fftw_complex*>(b.data()), sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

} // namespace

void dft(std::span<const std::complex<double>> in, std::span<std::complex<double>> out,
         FftDirection dir) {
    if (in.size() != out.size() || in.empty())
        throw DomainError("dft: input and output must be non-empty and equal length");
    const int sign = dir == FftDirection::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
    fftw_plan plan = cache().get(static_cast<int>(in.size()), sign);
    // fftw_execute_dft never writes to its input for out-of-place complex plans.
    auto* src = const_cast<std::complex<double>*>(in.data());
    if (in.data() == out.data()) {
        std::vector<std::complex<double>> tmp(in.begin(), in.end());
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(tmp.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
        return;
    }
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(src),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

} // namespace mlsync::dsp
