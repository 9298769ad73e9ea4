#include "pbr/caf_oracle.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pbr/errors.hpp"
#include "pbr/parallel.hpp"

namespace pbr {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

std::complex<double> caf_point(const ComplexBaseband& surveillance,
                               const ComplexBaseband& reference,
                               long delay_samples, double doppler_hz,
                               double chirp_hz_per_s) {
  surveillance.validate();
  reference.validate();
  require(surveillance.sample_rate_hz == reference.sample_rate_hz,
          "surveillance and reference sample rates differ");
  const auto n_surv = static_cast<long>(surveillance.size());
  const auto n_ref = static_cast<long>(reference.size());
  require(std::labs(delay_samples) < std::max(n_surv, n_ref),
          "delay outside the stream bounds");

  const double fs = surveillance.sample_rate_hz;
  const double centre = 0.5 * static_cast<double>(n_surv - 1);
  std::complex<double> acc{0.0, 0.0};
  for (long n = 0; n < n_surv; ++n) {
    long r = n - delay_samples;
    if (r < 0 || r >= n_ref) continue;
    double t = (static_cast<double>(n) - centre) / fs;
    double phase_cycles = doppler_hz * t + 0.5 * chirp_hz_per_s * t * t;
    acc += surveillance.samples[static_cast<std::size_t>(n)] *
           std::conj(reference.samples[static_cast<std::size_t>(r)]) *
           std::polar(1.0, -2.0 * std::numbers::pi * phase_cycles);
  }
  return acc;
}

AmbiguitySurface caf_grid(const ComplexBaseband& surveillance,
                          const ComplexBaseband& reference,
                          const std::vector<double>& delay_axis_s,
                          const std::vector<double>& doppler_axis_hz,
                          double chirp_hz_per_s, int n_threads) {
  surveillance.validate();
  reference.validate();
  require(!delay_axis_s.empty() && !doppler_axis_hz.empty(),
          "grid axes must not be empty");
  const std::size_t n = std::max(surveillance.size(), reference.size());
  if (n > kCafMaxSamples)
    throw ResourceLimitError("oracle stream cap exceeded: " +
                             std::to_string(n) + " samples");
  if (delay_axis_s.size() > kCafMaxAxis || doppler_axis_hz.size() > kCafMaxAxis)
    throw ResourceLimitError("oracle grid cap exceeded");

  const double fs = surveillance.sample_rate_hz;
  std::vector<long> lags(delay_axis_s.size());
  for (std::size_t i = 0; i < delay_axis_s.size(); ++i) {
    double bins = delay_axis_s[i] * fs;
    lags[i] = std::lround(bins);
    require(std::abs(bins - static_cast<double>(lags[i])) <= 1e-6,
            "delay axis entry is not an integer sample lag");
  }

  AmbiguitySurface surf;
  surf.delay_axis_s = delay_axis_s;
  surf.doppler_axis_hz = doppler_axis_hz;
  surf.hypothesis = DopplerHypothesis{chirp_hz_per_s, 0.0};
  surf.cpi_s = static_cast<double>(surveillance.size()) / fs;
  surf.epoch_s = surveillance.epoch_s;
  surf.power.resize(delay_axis_s.size() * doppler_axis_hz.size());

  const std::size_t n_dop = doppler_axis_hz.size();
  parallel_for(surf.power.size(), n_threads <= 0 ? 0u
                                                 : static_cast<unsigned>(n_threads),
               [&](std::size_t cell) {
                 std::size_t d = cell / n_dop;
                 std::size_t k = cell % n_dop;
                 surf.power[cell] = std::norm(
                     caf_point(surveillance, reference, lags[d],
                               doppler_axis_hz[k], chirp_hz_per_s));
               });
  return surf;
}

}  // namespace pbr
