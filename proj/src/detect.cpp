#include "pbr/detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "pbr/errors.hpp"

namespace pbr {

double noise_floor(const AmbiguitySurface& surface,
                   const CellRegion& exclusion) {
  surface.validate();
  const std::size_t n_delay = surface.n_delay();
  const std::size_t n_doppler = surface.n_doppler();

  std::vector<double> kept;
  kept.reserve(surface.power.size());
  for (std::size_t d = 0; d < n_delay; ++d)
    for (std::size_t k = 0; k < n_doppler; ++k)
      if (!exclusion.contains(d, k)) kept.push_back(surface.at(d, k));

  if (kept.size() * 2 <= surface.power.size())
    throw ValidationError(
        "noise_floor: exclusion region covers half the surface or more");

  const std::size_t mid = kept.size() / 2;
  std::nth_element(kept.begin(), kept.begin() + mid, kept.end());
  double median = kept[mid];
  if (kept.size() % 2 == 0) {
    double below = *std::max_element(kept.begin(), kept.begin() + mid);
    median = 0.5 * (median + below);
  }
  return median / std::log(2.0);
}

Detection extract_peak(const AmbiguitySurface& surface, double floor) {
  surface.validate();
  if (!(floor > 0.0))
    throw ValidationError("extract_peak: noise floor must be positive");

  const std::size_t n_doppler = surface.n_doppler();
  const std::size_t flat = static_cast<std::size_t>(
      std::max_element(surface.power.begin(), surface.power.end()) -
      surface.power.begin());
  const std::size_t d = flat / n_doppler;
  const std::size_t k = flat % n_doppler;
  const double peak = surface.power[flat];

  double doppler = surface.doppler_axis_hz[k];
  double peak_used = peak;
  if (k > 0 && k + 1 < n_doppler) {
    const double left = surface.at(d, k - 1);
    const double right = surface.at(d, k + 1);
    if (left > 0.0 && right > 0.0 && peak > 0.0) {
      const double a = std::log(left), b = std::log(peak), c = std::log(right);
      const double denom = a - 2.0 * b + c;
      if (denom < 0.0) {
        double offset = 0.5 * (a - c) / denom;
        offset = std::clamp(offset, -0.5, 0.5);
        const double bin_hz =
            surface.doppler_axis_hz[1] - surface.doppler_axis_hz[0];
        doppler += offset * bin_hz;
        // Amplitude of the same parabola at the refined position. Scoring
        // the raw cell instead would make the reported SNR, and any
        // comparison across hypotheses, depend on where the true Doppler
        // falls within its bin.
        peak_used = std::exp(b + 0.5 * (c - a) * offset +
                             0.5 * denom * offset * offset);
      }
    }
  }

  Detection det;
  det.delay_s = surface.delay_axis_s[d];
  det.doppler_hz = doppler;
  det.chirp_hz_per_s = surface.hypothesis.chirp_hz_per_s;
  det.jerk_hz_per_s2 = surface.hypothesis.jerk_hz_per_s2;
  det.snr_db = 10.0 * std::log10(peak_used / floor);
  det.cpi_s = surface.cpi_s;
  det.epoch_s = surface.epoch_s;
  det.surface_id = 0;
  return det;
}

Detection best_hypothesis(const std::vector<AmbiguitySurface>& surfaces) {
  if (surfaces.empty())
    throw ValidationError("best_hypothesis: empty surface sweep");
  const auto& first = surfaces.front();
  for (const auto& s : surfaces)
    if (s.delay_axis_s != first.delay_axis_s ||
        s.doppler_axis_hz != first.doppler_axis_hz)
      throw ValidationError("best_hypothesis: surfaces disagree on axes");

  Detection best;
  bool have = false;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    auto det = extract_peak(surfaces[i], noise_floor(surfaces[i]));
    det.surface_id = i;
    if (!have || det.snr_db > best.snr_db) {
      best = det;
      have = true;
    }
  }
  return best;
}

}  // namespace pbr
