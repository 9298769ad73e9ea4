#pragma once

#include <utility>

#include "pbr/detect.hpp"
#include "pbr/signal_core.hpp"

namespace pbr {

enum class SyncStage { coarse, fine };

// Reference-channel alignment estimate. Offsets follow one convention at both
// stages: time_offset_s is how late the reference holds its content relative
// to the surveillance clock, freq_offset_hz the tone its oscillator error
// leaves on the stream. apply_correction consumes the solution as is, and
// solutions compose by adding their fields.
//
// The residual fields express the offsets in measurement bins (delay bins of
// one sample, Doppler bins of 1/CPI). Re-aligning after a correction has been
// applied must leave them no larger than half a bin.
struct SyncSolution {
  double time_offset_s = 0.0;
  double freq_offset_hz = 0.0;
  double residual_delay_bins = 0.0;
  double residual_doppler_bins = 0.0;
  SyncStage stage = SyncStage::coarse;
};

inline constexpr double kCoarseStepS = 1e-3;
inline constexpr double kCoarseThreshold = 7.0;

// Locates a shared transient: correlates the surveillance snippet inside
// event_window_s (absolute seconds) against the reference at every lag in
// [0, search_span_s], keeps the per-millisecond-block maxima of the
// normalised correlation as the lag profile, and demands the best block
// reach kCoarseThreshold times the profile median before refining to the
// single best sample lag. Throws NoDetectionError when nothing clears the
// threshold.
SyncSolution coarse_align(const ComplexBaseband& surv,
                          const ComplexBaseband& ref,
                          std::pair<double, double> event_window_s,
                          double search_span_s);

// Ephemeris residual alignment: predicted minus measured delay and Doppler
// of a confirmed detection of a known target. sample_rate_hz sets the delay
// bin used for the residual bookkeeping; the Doppler bin comes from the
// detection's own CPI.
SyncSolution fine_align(const Detection& measured, double predicted_delay_s,
                        double predicted_doppler_hz, double sample_rate_hz);

// out(t) = in(t + time_offset) * exp(-j 2 pi freq_offset t), with the
// fractional advance evaluated by a windowed-sinc kernel and t measured from
// the stream epoch. Applying a solution and then its negation returns the
// original stream up to a constant phase.
ComplexBaseband apply_correction(const ComplexBaseband& in,
                                 const SyncSolution& sol);

namespace detail {
inline constexpr int kSyncShiftKernelHalfLen = 64;
}

}  // namespace pbr
