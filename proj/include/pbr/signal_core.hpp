#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace pbr {

// Complex baseband stream. Sample n sits at epoch_s + n / sample_rate_hz.
struct ComplexBaseband {
  std::vector<std::complex<double>> samples;
  double sample_rate_hz = 0.0;
  double carrier_hz = 0.0;
  double epoch_s = 0.0;

  std::size_t size() const { return samples.size(); }
  double duration_s() const { return samples.size() / sample_rate_hz; }
  double time_of(std::size_t n) const { return epoch_s + n / sample_rate_hz; }

  // Metadata invariants; does not scan the samples.
  void validate() const;
  // Copy of samples [offset, offset + count) with the epoch advanced.
  ComplexBaseband slice(std::size_t offset, std::size_t count) const;
};

// Per-sample modulation program for echo synthesis: bistatic delay relative
// to the direct path, carrier phase in cycles, and a real amplitude.
struct PhaseHistory {
  std::vector<double> delay_s;
  std::vector<double> phase_cycles;
  std::vector<double> amplitude;

  std::size_t size() const { return delay_s.size(); }
  void validate() const;
};

// Sentinel for add_noise: leave the stream untouched.
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

// Band-limited FM-like surrogate: complex white noise confined to
// [-bandwidth/2, +bandwidth/2] with unit mean power. Deterministic per seed.
ComplexBaseband make_fm_surrogate(double duration_s, double bandwidth_hz,
                                  double sample_rate_hz, std::uint64_t seed);

enum class LeadInPolicy {
  zero_fill,  // waveform before stream start reads as zero
  strict,     // raise InsufficientLeadInError instead
};

// output[n] = amplitude[n] * waveform(t_n - delay_s[n]) * exp(+j*2*pi*phase_cycles[n])
// with fractional-sample evaluation by a Hamming-windowed sinc kernel.
// history.size() must equal waveform.size(); output matches that length.
ComplexBaseband synthesize_echo(const ComplexBaseband& waveform,
                                const PhaseHistory& history,
                                LeadInPolicy policy = LeadInPolicy::zero_fill);

// Adds circular complex white Gaussian noise so the realised ratio of input
// power to added noise power equals snr_db. kNoNoise returns the input as is.
ComplexBaseband add_noise(const ComplexBaseband& in, double snr_db,
                          std::uint64_t seed);

double mean_power(const ComplexBaseband& in);

namespace detail {

// Hamming-windowed sinc interpolator, half_len taps on each side of the
// evaluation point. Integer positions reproduce samples exactly; positions
// whose support leaves [0, n) treat the outside as zero.
std::complex<double> interp_windowed_sinc(const std::complex<double>* x,
                                          std::size_t n, double position,
                                          int half_len);

inline constexpr int kEchoKernelHalfLen = 16;

// Seeded complex standard-normal source, E|z|^2 = 1. Box-Muller over
// mt19937_64 rather than std::normal_distribution: the engine is fully
// specified by the standard, the distribution is not, and fixed seeds must
// reproduce bit-identical streams.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}
  std::complex<double> next();

 private:
  std::mt19937_64 engine_;
};

}  // namespace detail

}  // namespace pbr
