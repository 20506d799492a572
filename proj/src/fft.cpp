#include "stcs/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace stcs {
namespace {

/// Process-wide FFTW plan cache. Plan creation is not thread-safe in FFTW,
/// so lookups and creation happen under a mutex; execution uses the
/// new-array interface, which is safe to run concurrently. Plans are created
/// with FFTW_UNALIGNED so they accept any heap buffer the caller owns.
class PlanCache {
  public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<fftw_complex> scratch(n);
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), scratch.data(), scratch.data(),
                                          sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (plan == nullptr) throw std::runtime_error("fft: plan creation failed for n=" + std::to_string(n));
        plans_.emplace(key, plan);
        return plan;
    }

  private:
    PlanCache() = default;
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

}  // namespace

void dft_inplace(cplx* data, std::size_t n, FftDirection dir) {
    if (n == 0) throw std::invalid_argument("fft: zero-length transform");
    const int sign = (dir == FftDirection::Forward) ? FFTW_FORWARD : FFTW_BACKWARD;
    fftw_plan plan = PlanCache::instance().get(n, sign);
    auto* raw = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan, raw, raw);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) data[i] *= scale;
}

CVec dft(const CVec& v, FftDirection dir) {
    CVec out = v;
    dft_inplace(out.data(), out.size(), dir);
    return out;
}

}  // namespace stcs
