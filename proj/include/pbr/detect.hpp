#pragma once

#include <cstddef>
#include <vector>

#include "pbr/pulse_stack.hpp"

namespace pbr {

// Half-open index rectangle on an ambiguity surface. Used to keep cells
// around a known target out of the noise estimate.
struct CellRegion {
  std::size_t delay_begin = 0;
  std::size_t delay_end = 0;
  std::size_t doppler_begin = 0;
  std::size_t doppler_end = 0;

  bool contains(std::size_t d, std::size_t k) const {
    return d >= delay_begin && d < delay_end && k >= doppler_begin &&
           k < doppler_end;
  }
};

struct Detection {
  double delay_s = 0.0;
  double doppler_hz = 0.0;
  double chirp_hz_per_s = 0.0;
  double jerk_hz_per_s2 = 0.0;
  double snr_db = 0.0;
  double cpi_s = 0.0;
  double epoch_s = 0.0;
  std::size_t surface_id = 0;
};

// Cells at or above this SNR count as detections unless a scenario overrides
// the threshold. Chosen from the extreme-value statistics of a 64x64 noise
// surface, where the strongest cell stays below 13 dB in well over 99% of
// trials.
inline constexpr double kDefaultDetectionThresholdDb = 13.0;

// Median power over the non-excluded cells, scaled by 1/ln 2 so that
// exponentially distributed noise maps to its mean power. The exclusion
// region must cover less than half the surface.
double noise_floor(const AmbiguitySurface& surface,
                   const CellRegion& exclusion = {});

// Global power argmax with sub-bin Doppler refinement by a three-point
// parabola on log power. snr_db is the parabola's amplitude at the refined
// position over the supplied floor, which keeps it independent of where the
// true Doppler falls within its bin; where the fit does not apply it is the
// raw cell power.
Detection extract_peak(const AmbiguitySurface& surface, double floor);

// Detection from the surface in the sweep whose peak SNR is maximal, with
// chirp/jerk copied from that surface's hypothesis and surface_id set to its
// index. All surfaces must share delay and Doppler axes.
Detection best_hypothesis(const std::vector<AmbiguitySurface>& surfaces);

}  // namespace pbr
