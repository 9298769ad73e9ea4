#include "pbr/sync.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "pbr/errors.hpp"
#include "pbr/fft.hpp"

namespace pbr {

namespace {

using cd = std::complex<double>;

long index_on_grid(double t_s, const ComplexBaseband& stream) {
  return std::llround((t_s - stream.epoch_s) * stream.sample_rate_hz);
}

}  // namespace

SyncSolution coarse_align(const ComplexBaseband& surv,
                          const ComplexBaseband& ref,
                          std::pair<double, double> event_window_s,
                          double search_span_s) {
  surv.validate();
  ref.validate();
  if (surv.sample_rate_hz != ref.sample_rate_hz)
    throw ValidationError("coarse_align: sample rates differ");
  if (!(event_window_s.second > event_window_s.first))
    throw ValidationError("coarse_align: empty event window");
  if (!(search_span_s > 0.0))
    throw ValidationError("coarse_align: search span must be positive");

  const double fs = surv.sample_rate_hz;
  const long i0 = index_on_grid(event_window_s.first, surv);
  const long count =
      std::llround((event_window_s.second - event_window_s.first) * fs);
  if (i0 < 0 || count < 2 ||
      i0 + count > static_cast<long>(surv.size()))
    throw ValidationError("coarse_align: event window outside surveillance");

  const long j0 = index_on_grid(event_window_s.first, ref);
  const long max_lag = static_cast<long>(std::floor(search_span_s * fs));
  if (j0 < 0 || j0 + max_lag + count > static_cast<long>(ref.size()))
    throw ValidationError("coarse_align: search span outside reference");

  // One full-resolution correlation pass; the coarse/fine split below only
  // decides which lags are allowed to win.
  const std::size_t seg_len = static_cast<std::size_t>(max_lag + count);
  const std::size_t p = fft::good_size(seg_len);
  std::vector<cd> a(p, cd{}), b(p, cd{});
  for (long u = 0; u < count; ++u) a[u] = surv.samples[i0 + u];
  for (std::size_t n = 0; n < seg_len; ++n) b[n] = ref.samples[j0 + n];
  auto fa = fft::transform(a, fft::Direction::forward);
  auto fb = fft::transform(b, fft::Direction::forward);
  for (std::size_t k = 0; k < p; ++k) fb[k] *= std::conj(fa[k]);
  auto corr = fft::transform(fb, fft::Direction::inverse);

  double snip_energy = 0.0;
  for (long u = 0; u < count; ++u) snip_energy += std::norm(a[u]);
  std::vector<double> ref_prefix(seg_len + 1, 0.0);
  for (std::size_t n = 0; n < seg_len; ++n)
    ref_prefix[n + 1] = ref_prefix[n] + std::norm(b[n]);

  std::vector<double> nc(max_lag + 1);
  for (long l = 0; l <= max_lag; ++l) {
    double seg_energy = ref_prefix[l + count] - ref_prefix[l];
    double denom = std::sqrt(snip_energy * seg_energy);
    nc[l] = denom > 0.0 ? std::abs(corr[l]) / (denom * p) : 0.0;
  }

  const long step =
      std::max<long>(1, std::llround(kCoarseStepS * fs));
  const long n_blocks = (max_lag + step) / step;
  std::vector<double> profile(n_blocks, 0.0);
  for (long l = 0; l <= max_lag; ++l)
    profile[l / step] = std::max(profile[l / step], nc[l]);

  std::vector<double> sorted = profile;
  std::nth_element(sorted.begin(), sorted.begin() + n_blocks / 2, sorted.end());
  const double median = sorted[n_blocks / 2];
  const long best_block = static_cast<long>(
      std::max_element(profile.begin(), profile.end()) - profile.begin());
  if (!(profile[best_block] >= kCoarseThreshold * median))
    throw NoDetectionError("coarse_align: no lag clears the threshold");

  const long lo = std::max<long>(0, (best_block - 2) * step);
  const long hi = std::min<long>(max_lag, (best_block + 3) * step - 1);
  long best = lo;
  for (long l = lo; l <= hi; ++l)
    if (nc[l] > nc[best]) best = l;

  SyncSolution sol;
  sol.time_offset_s = (ref.epoch_s - surv.epoch_s) +
                      static_cast<double>(j0 - i0 + best) / fs;
  sol.stage = SyncStage::coarse;
  return sol;
}

SyncSolution fine_align(const Detection& measured, double predicted_delay_s,
                        double predicted_doppler_hz, double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0))
    throw ValidationError("fine_align: sample rate must be positive");
  if (!(measured.cpi_s > 0.0))
    throw ValidationError("fine_align: detection carries no CPI");

  SyncSolution sol;
  sol.time_offset_s = predicted_delay_s - measured.delay_s;
  sol.freq_offset_hz = predicted_doppler_hz - measured.doppler_hz;
  sol.residual_delay_bins = sol.time_offset_s * sample_rate_hz;
  sol.residual_doppler_bins = sol.freq_offset_hz * measured.cpi_s;
  sol.stage = SyncStage::fine;
  return sol;
}

ComplexBaseband apply_correction(const ComplexBaseband& in,
                                 const SyncSolution& sol) {
  in.validate();
  if (!std::isfinite(sol.time_offset_s) || !std::isfinite(sol.freq_offset_hz))
    throw ValidationError("apply_correction: offsets must be finite");
  if (std::abs(sol.time_offset_s) >= in.duration_s())
    throw ValidationError("apply_correction: time offset exceeds the stream");

  const double fs = in.sample_rate_hz;
  const double shift = sol.time_offset_s * fs;
  const long nearest = std::llround(shift);
  const bool integral = std::abs(shift - static_cast<double>(nearest)) < 1e-9;

  ComplexBaseband out = in;
  const long n_total = static_cast<long>(in.size());
  if (integral) {
    for (long n = 0; n < n_total; ++n) {
      long src = n + nearest;
      out.samples[n] =
          (src >= 0 && src < n_total) ? in.samples[src] : cd{0.0, 0.0};
    }
  } else {
    for (long n = 0; n < n_total; ++n)
      out.samples[n] = detail::interp_windowed_sinc(
          in.samples.data(), in.size(), static_cast<double>(n) + shift,
          detail::kSyncShiftKernelHalfLen);
  }

  if (sol.freq_offset_hz != 0.0) {
    for (long n = 0; n < n_total; ++n) {
      double t = in.epoch_s + static_cast<double>(n) / fs;
      out.samples[n] *=
          std::polar(1.0, -2.0 * std::numbers::pi * sol.freq_offset_hz * t);
    }
  }
  return out;
}

}  // namespace pbr
