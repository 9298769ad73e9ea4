#include "pbr/pulse_stack.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pbr/errors.hpp"
#include "pbr/fft.hpp"
#include "pbr/parallel.hpp"

namespace pbr {
namespace {

using cd = std::complex<double>;

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

unsigned worker_count(int n_threads) {
  return n_threads <= 0 ? 0u : static_cast<unsigned>(n_threads);
}

// Delay-bin counts above this use per-batch FFT correlation.
constexpr std::size_t kFftRouteThreshold = 64;

void compress_batch_direct(const cd* ref, const cd* surv,
                           std::size_t batch_len, std::size_t n_delay,
                           std::size_t m, PulseStack& out) {
  const std::size_t base = m * batch_len;
  const bool guarded = base < n_delay;  // window reaches before the start
  for (std::size_t d = 0; d < n_delay; ++d) {
    cd acc{0.0, 0.0};
    if (!guarded) {
      const cd* r = ref + (base - d);
      const cd* s = surv + base;
      for (std::size_t l = 0; l < batch_len; ++l) acc += s[l] * std::conj(r[l]);
    } else {
      for (std::size_t l = 0; l < batch_len; ++l) {
        long idx = static_cast<long>(base + l) - static_cast<long>(d);
        if (idx < 0) continue;
        acc += surv[base + l] * std::conj(ref[static_cast<std::size_t>(idx)]);
      }
    }
    out.at(d, m) = acc;
  }
}

// Linear correlation of one batch against the reference window that the delay
// span can reach, computed circularly at a padded size so no lag aliases.
void compress_batch_fft(const cd* ref, const cd* surv, std::size_t n,
                        std::size_t batch_len, std::size_t n_delay,
                        std::size_t m, PulseStack& out) {
  const std::size_t span = batch_len + n_delay;
  const std::size_t padded = fft::good_size(span);
  std::vector<cd> a(padded, cd{}), b(padded, cd{}), prod(padded);

  const long base = static_cast<long>(m * batch_len);
  for (std::size_t l = 0; l < batch_len; ++l) a[l] = surv[base + l];
  const long ref_start = base - static_cast<long>(n_delay);
  for (std::size_t j = 0; j < span; ++j) {
    long idx = ref_start + static_cast<long>(j);
    if (idx < 0 || idx >= static_cast<long>(n)) continue;
    b[j] = ref[idx];
  }

  fft::transform(a, a, fft::Direction::forward);
  fft::transform(b, b, fft::Direction::forward);
  for (std::size_t k = 0; k < padded; ++k) a[k] *= std::conj(b[k]);
  fft::transform(a, prod, fft::Direction::inverse);

  const double scale = 1.0 / static_cast<double>(padded);
  for (std::size_t d = 0; d < n_delay; ++d)
    out.at(d, m) = prod[padded - n_delay + d] * scale;
}

}  // namespace

double PulseStack::delay_spacing_s() const {
  return delay_axis_s.size() >= 2 ? delay_axis_s[1] - delay_axis_s[0] : 0.0;
}

void PulseStack::validate() const {
  require(!delay_axis_s.empty(), "stack has no delay bins");
  require(n_batches >= 2, "stack needs at least 2 batches");
  require(data.size() == delay_axis_s.size() * n_batches,
          "stack data size does not match its axes");
  require(batch_duration_s > 0.0, "batch duration must be positive");
  require(carrier_hz >= 0.0, "carrier frequency must not be negative");
  const double spacing = delay_spacing_s();
  for (std::size_t d = 1; d < delay_axis_s.size(); ++d)
    require(std::abs(delay_axis_s[d] - delay_axis_s[d - 1] - spacing) <=
                1e-12 * std::max(1e-12, std::abs(spacing)),
            "delay axis must be uniform");
}

void AmbiguitySurface::validate() const {
  require(!delay_axis_s.empty() && !doppler_axis_hz.empty(),
          "surface has empty axes");
  require(power.size() == n_delay() * n_doppler(),
          "surface power size does not match its axes");
  require(cpi_s > 0.0, "surface CPI must be positive");
  for (double p : power)
    require(p >= 0.0 && std::isfinite(p), "surface power must be finite and non-negative");
  for (std::size_t k = 1; k < doppler_axis_hz.size(); ++k)
    require(doppler_axis_hz[k] > doppler_axis_hz[k - 1],
            "doppler axis must increase");
}

PulseStack compress(const ComplexBaseband& reference,
                    const ComplexBaseband& surveillance, double max_delay_s,
                    std::size_t batch_len_samples, CompressMethod method,
                    int n_threads) {
  reference.validate();
  surveillance.validate();
  require(reference.sample_rate_hz == surveillance.sample_rate_hz,
          "reference and surveillance sample rates differ");
  require(reference.carrier_hz == surveillance.carrier_hz,
          "reference and surveillance carriers differ");
  require(reference.size() == surveillance.size(),
          "reference and surveillance lengths differ");
  require(batch_len_samples >= 1, "batch length must be at least 1 sample");
  require(surveillance.size() >= 2 * batch_len_samples,
          "stream shorter than two batches");
  require(max_delay_s >= 0.0, "max delay must not be negative");

  const double fs = surveillance.sample_rate_hz;
  const std::size_t n = surveillance.size();
  const auto n_delay =
      static_cast<std::size_t>(std::floor(max_delay_s * fs + 1e-9)) + 1;
  require(n_delay <= n, "delay span exceeds the stream");

  PulseStack st;
  st.delay_axis_s.resize(n_delay);
  for (std::size_t d = 0; d < n_delay; ++d)
    st.delay_axis_s[d] = static_cast<double>(d) / fs;
  st.n_batches = n / batch_len_samples;
  st.data.assign(n_delay * st.n_batches, cd{});
  st.batch_duration_s = static_cast<double>(batch_len_samples) / fs;
  st.epoch_s = surveillance.epoch_s;
  st.carrier_hz = surveillance.carrier_hz;
  st.first_batch_zero_filled = n_delay > 1;

  const bool use_fft = method == CompressMethod::fft ||
                       (method == CompressMethod::automatic &&
                        n_delay > kFftRouteThreshold);
  const cd* ref = reference.samples.data();
  const cd* surv = surveillance.samples.data();
  parallel_for(st.n_batches, worker_count(n_threads), [&](std::size_t m) {
    if (use_fft)
      compress_batch_fft(ref, surv, n, batch_len_samples, n_delay, m, st);
    else
      compress_batch_direct(ref, surv, batch_len_samples, n_delay, m, st);
  });
  return st;
}

AmbiguitySurface doppler_transform(const PulseStack& stack, Taper window,
                                   int n_threads) {
  stack.validate();
  const std::size_t m_count = stack.n_batches;

  std::vector<double> w(m_count, 1.0);
  if (window == Taper::hann) {
    for (std::size_t m = 0; m < m_count; ++m)
      w[m] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi *
                                   static_cast<double>(m) /
                                   static_cast<double>(m_count)));
  }

  AmbiguitySurface surf;
  surf.delay_axis_s = stack.delay_axis_s;
  surf.cpi_s = stack.cpi_s();
  surf.epoch_s = stack.epoch_s;
  surf.doppler_axis_hz.resize(m_count);
  const auto shift = static_cast<long>(m_count / 2);
  for (std::size_t i = 0; i < m_count; ++i)
    surf.doppler_axis_hz[i] =
        static_cast<double>(static_cast<long>(i) - shift) / surf.cpi_s;
  surf.power.resize(stack.n_delay() * m_count);

  parallel_for(stack.n_delay(), worker_count(n_threads), [&](std::size_t d) {
    std::vector<cd> row(m_count), spec(m_count);
    for (std::size_t m = 0; m < m_count; ++m)
      row[m] = stack.at(d, m) * w[m];
    fft::transform(row, spec, fft::Direction::forward);
    for (std::size_t i = 0; i < m_count; ++i) {
      std::size_t k = (i + m_count - static_cast<std::size_t>(shift)) % m_count;
      surf.at(d, i) = std::norm(spec[k]);
    }
  });
  return surf;
}

double unambiguous_doppler(const PulseStack& stack) {
  require(stack.batch_duration_s > 0.0, "batch duration must be positive");
  return 1.0 / (2.0 * stack.batch_duration_s);
}

}  // namespace pbr
