#include "pbr/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace pbr::fft {
namespace {

// FFTW's planner is not reentrant; execution of an existing plan is. Plans are
// created out-of-place with FFTW_UNALIGNED so they can later run on any buffer
// through the new-array interface. FFTW_ESTIMATE keeps plan selection
// deterministic run to run.
class PlanCache {
 public:
  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<std::complex<double>> a(n), b(n);
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n),
                                   reinterpret_cast<fftw_complex*>(a.data()),
                                   reinterpret_cast<fftw_complex*>(b.data()),
                                   sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw std::runtime_error("fftw planning failed");
    plans_.emplace(key, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

void transform(std::span<const std::complex<double>> in,
               std::span<std::complex<double>> out, Direction dir) {
  if (in.size() != out.size()) throw std::invalid_argument("fft: size mismatch");
  if (in.empty()) throw std::invalid_argument("fft: empty input");
  int sign = dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  fftw_plan p = cache().get(in.size(), sign);

  if (in.data() == out.data()) {
    // Plan is out-of-place; stage through a scratch copy.
    std::vector<std::complex<double>> tmp(in.begin(), in.end());
    auto* src = reinterpret_cast<fftw_complex*>(tmp.data());
    auto* dst = reinterpret_cast<fftw_complex*>(out.data());
    fftw_execute_dft(p, src, dst);
    return;
  }
  // std::complex<double> is layout-compatible with fftw_complex.
  auto* src = reinterpret_cast<fftw_complex*>(
      const_cast<std::complex<double>*>(in.data()));
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(p, src, dst);
}

std::vector<std::complex<double>> transform(
    const std::vector<std::complex<double>>& in, Direction dir) {
  std::vector<std::complex<double>> out(in.size());
  transform(std::span<const std::complex<double>>(in),
            std::span<std::complex<double>>(out), dir);
  return out;
}

std::size_t good_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t cand = n;; ++cand) {
    std::size_t rem = cand;
    for (std::size_t f : {2, 3, 5}) {
      while (rem % f == 0) rem /= f;
    }
    if (rem == 1) return cand;
  }
}

}  // namespace pbr::fft
