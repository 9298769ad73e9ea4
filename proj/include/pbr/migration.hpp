#pragma once

#include <cstddef>
#include <vector>

#include "pbr/pulse_stack.hpp"

namespace pbr {

// Fast-frequency dependent slow-time resampling: after a DFT along the delay
// axis, each fast-frequency row f is re-evaluated at slow times scaled by
// carrier / (carrier + f), then transformed back. A constant bistatic range
// rate then keeps its compressed peak in one delay bin across the whole CPI,
// whatever the range walk was. Needs carrier > half the delay-axis bandwidth
// so carrier + f stays positive.
PulseStack keystone(const PulseStack& stack, int n_threads = 1);

// Multiplies each slow-time sample by exp(-j 2 pi (c_r t^2 / 2 + c_j t^3 / 6))
// with t centred mid-CPI, cancelling the quadratic phase of a target whose
// Doppler drifts at chirp_hz_per_s. dechirp rejects hypotheses with a jerk
// term; dejerk handles both and reduces to dechirp when the jerk is zero.
PulseStack dechirp(const PulseStack& stack, const DopplerHypothesis& hyp);
PulseStack dejerk(const PulseStack& stack, const DopplerHypothesis& hyp);

// One surface per (chirp, jerk) pair, chirp-major order. The stack is
// compressed once by the caller and only re-phased here; compression is never
// repeated per hypothesis.
std::vector<AmbiguitySurface> hypothesis_sweep(
    const PulseStack& stack, const std::vector<double>& chirp_grid,
    const std::vector<double>& jerk_grid, Taper window,
    std::size_t surface_cap = 4096, int n_threads = 1);

// Uniform axis from a {start, stop, count} triple; count 1 collapses to
// {start}.
std::vector<double> make_axis(double start, double stop, std::size_t count);

// chirp = bistatic acceleration / wavelength.
double chirp_from_acceleration(double accel_m_s2, double lambda_m);
double acceleration_from_chirp(double chirp_hz_per_s, double lambda_m);

}  // namespace pbr
