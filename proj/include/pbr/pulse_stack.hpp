#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "pbr/signal_core.hpp"

namespace pbr {

// Doppler-rate hypothesis in physical units: chirp is the first and jerk the
// second time derivative of the target's Doppler in Hz. Equivalently the
// bistatic acceleration divided by wavelength (chirp = a / lambda).
struct DopplerHypothesis {
  double chirp_hz_per_s = 0.0;
  double jerk_hz_per_s2 = 0.0;
  bool operator==(const DopplerHypothesis&) const = default;
};

enum class Taper { rectangular, hann };

// Range-compressed stack: one cross-correlation column per slow-time batch.
// data is delay-major, data[d * n_batches + m]; each row is the slow-time
// series of one delay bin.
struct PulseStack {
  std::vector<std::complex<double>> data;
  std::vector<double> delay_axis_s;  // bin centers, spacing 1/sample_rate
  std::size_t n_batches = 0;
  double batch_duration_s = 0.0;
  double epoch_s = 0.0;
  double carrier_hz = 0.0;
  // True when the first column's reference window reached before the start of
  // the stream and was zero filled.
  bool first_batch_zero_filled = false;

  std::size_t n_delay() const { return delay_axis_s.size(); }
  double cpi_s() const { return static_cast<double>(n_batches) * batch_duration_s; }
  double delay_spacing_s() const;
  std::complex<double>& at(std::size_t d, std::size_t m) {
    return data[d * n_batches + m];
  }
  const std::complex<double>& at(std::size_t d, std::size_t m) const {
    return data[d * n_batches + m];
  }
  void validate() const;
};

// Delay x Doppler power map, linear power, delay-major rows.
struct AmbiguitySurface {
  std::vector<double> power;
  std::vector<double> delay_axis_s;
  std::vector<double> doppler_axis_hz;  // spacing 1/cpi_s, zero-centered
  DopplerHypothesis hypothesis;
  double cpi_s = 0.0;
  double epoch_s = 0.0;

  std::size_t n_delay() const { return delay_axis_s.size(); }
  std::size_t n_doppler() const { return doppler_axis_hz.size(); }
  double& at(std::size_t d, std::size_t k) {
    return power[d * n_doppler() + k];
  }
  double at(std::size_t d, std::size_t k) const {
    return power[d * n_doppler() + k];
  }
  void validate() const;
};

enum class CompressMethod { automatic, direct, fft };

// Segmented cross-correlation range compression:
//   data[d, m] = sum_l surv[m*L + l] * conj(ref[m*L + l - d]),  l in [0, L)
// with delay bins spanning [0, max_delay_s] at 1/sample_rate spacing.
// Reference samples before the stream start count as zero. A trailing partial
// batch is dropped. The automatic method switches to per-batch FFT
// correlation once the delay-bin count exceeds 64.
PulseStack compress(const ComplexBaseband& reference,
                    const ComplexBaseband& surveillance, double max_delay_s,
                    std::size_t batch_len_samples,
                    CompressMethod method = CompressMethod::automatic,
                    int n_threads = 1);

// Slow-time DFT of each delay row:
//   power[d, k] = |sum_m data[d, m] * w[m] * exp(-j 2 pi k m / M)|^2
// with the Doppler axis rotated so zero sits at bin floor(M/2).
AmbiguitySurface doppler_transform(const PulseStack& stack, Taper window,
                                   int n_threads = 1);

// Half-extent of the alias-free Doppler interval, 1 / (2 * batch duration).
double unambiguous_doppler(const PulseStack& stack);

}  // namespace pbr
