#include "pbr/migration.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pbr/errors.hpp"
#include "pbr/fft.hpp"
#include "pbr/parallel.hpp"
#include "pbr/signal_core.hpp"

namespace pbr {
namespace {

using cd = std::complex<double>;

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

unsigned worker_count(int n_threads) {
  return n_threads <= 0 ? 0u : static_cast<unsigned>(n_threads);
}

constexpr int kKeystoneKernelHalfLen = 8;

PulseStack phase_multiply(const PulseStack& stack, double chirp, double jerk) {
  stack.validate();
  PulseStack out = stack;
  const std::size_t m_count = stack.n_batches;
  const double centre = 0.5 * (static_cast<double>(m_count) - 1.0);
  std::vector<cd> factor(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    double t = (static_cast<double>(m) - centre) * stack.batch_duration_s;
    double cycles = 0.5 * chirp * t * t + jerk * t * t * t / 6.0;
    factor[m] = std::polar(1.0, -2.0 * std::numbers::pi * cycles);
  }
  for (std::size_t d = 0; d < stack.n_delay(); ++d)
    for (std::size_t m = 0; m < m_count; ++m) out.at(d, m) *= factor[m];
  return out;
}

}  // namespace

PulseStack keystone(const PulseStack& stack, int n_threads) {
  stack.validate();
  require(stack.n_batches >= 8, "keystone needs at least 8 batches");
  const std::size_t n_delay = stack.n_delay();
  const std::size_t m_count = stack.n_batches;
  if (n_delay == 1) return stack;

  const double fs = 1.0 / stack.delay_spacing_s();
  require(stack.carrier_hz > 0.5 * fs,
          "keystone needs the carrier above half the delay-axis bandwidth");

  // Delay axis -> fast frequency, one DFT per batch column.
  std::vector<cd> fast(stack.data.size());
  {
    std::vector<cd> col(n_delay), spec(n_delay);
    for (std::size_t m = 0; m < m_count; ++m) {
      for (std::size_t d = 0; d < n_delay; ++d) col[d] = stack.at(d, m);
      fft::transform(col, spec, fft::Direction::forward);
      for (std::size_t d = 0; d < n_delay; ++d)
        fast[d * m_count + m] = spec[d];
    }
  }

  // Slow-time resampling, one row per fast-frequency bin.
  const double bin_hz = fs / static_cast<double>(n_delay);
  const double centre = 0.5 * (static_cast<double>(m_count) - 1.0);
  std::vector<cd> warped(stack.data.size());
  parallel_for(n_delay, worker_count(n_threads), [&](std::size_t j) {
    double f = static_cast<double>(j) * bin_hz;
    if (j >= (n_delay + 1) / 2) f -= fs;
    const double scale = stack.carrier_hz / (stack.carrier_hz + f);
    const cd* row = fast.data() + j * m_count;
    cd* out = warped.data() + j * m_count;
    for (std::size_t m = 0; m < m_count; ++m) {
      double pos = centre + (static_cast<double>(m) - centre) * scale;
      out[m] = detail::interp_windowed_sinc(row, m_count, pos,
                                            kKeystoneKernelHalfLen);
    }
  });

  // Fast frequency -> delay axis.
  PulseStack result = stack;
  {
    std::vector<cd> col(n_delay), spec(n_delay);
    const double scale = 1.0 / static_cast<double>(n_delay);
    for (std::size_t m = 0; m < m_count; ++m) {
      for (std::size_t j = 0; j < n_delay; ++j)
        col[j] = warped[j * m_count + m];
      fft::transform(col, spec, fft::Direction::inverse);
      for (std::size_t d = 0; d < n_delay; ++d)
        result.at(d, m) = spec[d] * scale;
    }
  }
  return result;
}

PulseStack dechirp(const PulseStack& stack, const DopplerHypothesis& hyp) {
  require(hyp.jerk_hz_per_s2 == 0.0,
          "dechirp takes no jerk term; use dejerk");
  return phase_multiply(stack, hyp.chirp_hz_per_s, 0.0);
}

PulseStack dejerk(const PulseStack& stack, const DopplerHypothesis& hyp) {
  return phase_multiply(stack, hyp.chirp_hz_per_s, hyp.jerk_hz_per_s2);
}

std::vector<AmbiguitySurface> hypothesis_sweep(
    const PulseStack& stack, const std::vector<double>& chirp_grid,
    const std::vector<double>& jerk_grid, Taper window,
    std::size_t surface_cap, int n_threads) {
  stack.validate();
  require(!chirp_grid.empty() && !jerk_grid.empty(),
          "hypothesis grids must not be empty");
  const std::size_t count = chirp_grid.size() * jerk_grid.size();
  if (count > surface_cap)
    throw ResourceLimitError("hypothesis sweep would build " +
                             std::to_string(count) + " surfaces, cap is " +
                             std::to_string(surface_cap));

  std::vector<AmbiguitySurface> surfaces(count);
  parallel_for(count, worker_count(n_threads), [&](std::size_t i) {
    DopplerHypothesis hyp{chirp_grid[i / jerk_grid.size()],
                          jerk_grid[i % jerk_grid.size()]};
    surfaces[i] = doppler_transform(dejerk(stack, hyp), window, 1);
    surfaces[i].hypothesis = hyp;
  });
  return surfaces;
}

std::vector<double> make_axis(double start, double stop, std::size_t count) {
  require(count >= 1, "axis needs at least one point");
  require(std::isfinite(start) && std::isfinite(stop),
          "axis endpoints must be finite");
  if (count == 1) return {start};
  require(stop > start, "axis endpoints must increase");
  std::vector<double> axis(count);
  const double step = (stop - start) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i)
    axis[i] = start + static_cast<double>(i) * step;
  return axis;
}

double chirp_from_acceleration(double accel_m_s2, double lambda_m) {
  require(lambda_m > 0.0, "wavelength must be positive");
  return accel_m_s2 / lambda_m;
}

double acceleration_from_chirp(double chirp_hz_per_s, double lambda_m) {
  require(lambda_m > 0.0, "wavelength must be positive");
  return chirp_hz_per_s * lambda_m;
}

}  // namespace pbr
