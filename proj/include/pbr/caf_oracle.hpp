#pragma once

#include <complex>
#include <vector>

#include "pbr/pulse_stack.hpp"
#include "pbr/signal_core.hpp"

namespace pbr {

// Brute-force evaluation of the extended cross-ambiguity function
//   chi(d, v, w) = sum_n s[n] * conj(r[n - d])
//                  * exp(-j 2 pi (v t_n + 0.5 w t_n^2))
// with t_n centered mid-stream, t_n = (n - (N-1)/2) / sample_rate, and
// out-of-range reference samples counted as zero. Direct summation with no
// fast transforms; this is the ground truth the fast pipeline is checked
// against, kept simple enough to audit by inspection.
std::complex<double> caf_point(const ComplexBaseband& surveillance,
                               const ComplexBaseband& reference,
                               long delay_samples, double doppler_hz,
                               double chirp_hz_per_s);

inline constexpr std::size_t kCafMaxSamples = 65536;
inline constexpr std::size_t kCafMaxAxis = 64;

// |caf_point|^2 swept over a delay x Doppler grid at one chirp value.
// Delay axis entries must land on integer sample lags. Deliberately slow;
// instances above the documented caps are rejected.
AmbiguitySurface caf_grid(const ComplexBaseband& surveillance,
                          const ComplexBaseband& reference,
                          const std::vector<double>& delay_axis_s,
                          const std::vector<double>& doppler_axis_hz,
                          double chirp_hz_per_s, int n_threads = 1);

}  // namespace pbr
