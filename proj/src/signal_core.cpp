#include "pbr/signal_core.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pbr/errors.hpp"
#include "pbr/fft.hpp"

namespace pbr {

namespace {
constexpr double kPi = std::numbers::pi;

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}
}  // namespace

void ComplexBaseband::validate() const {
  require(!samples.empty(), "stream: at least one sample required");
  require(std::isfinite(sample_rate_hz) && sample_rate_hz > 0.0,
          "stream: sample_rate_hz must be positive");
  require(std::isfinite(carrier_hz) && carrier_hz > 0.0,
          "stream: carrier_hz must be positive");
  require(std::isfinite(epoch_s), "stream: epoch_s must be finite");
}

ComplexBaseband ComplexBaseband::slice(std::size_t offset,
                                       std::size_t count) const {
  require(offset + count <= samples.size(), "stream slice out of range");
  ComplexBaseband out;
  out.samples.assign(samples.begin() + offset, samples.begin() + offset + count);
  out.sample_rate_hz = sample_rate_hz;
  out.carrier_hz = carrier_hz;
  out.epoch_s = epoch_s + offset / sample_rate_hz;
  return out;
}

void PhaseHistory::validate() const {
  require(delay_s.size() == phase_cycles.size() &&
              delay_s.size() == amplitude.size(),
          "phase history: vector lengths differ");
  for (std::size_t n = 0; n < delay_s.size(); ++n) {
    if (!(delay_s[n] >= 0.0) || !std::isfinite(delay_s[n]))
      throw ValidationError("phase history: delay_s must be finite and >= 0");
    if (!(amplitude[n] >= 0.0) || !std::isfinite(amplitude[n]))
      throw ValidationError("phase history: amplitude must be finite and >= 0");
    if (!std::isfinite(phase_cycles[n]))
      throw ValidationError("phase history: phase_cycles must be finite");
  }
}

namespace detail {

std::complex<double> GaussianSource::next() {
  // Box-Muller on raw engine words; |z|^2 is exponential with mean 1.
  double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  double r = std::sqrt(-std::log(u1));
  return std::polar(r, 2.0 * kPi * u2);
}

std::complex<double> interp_windowed_sinc(const std::complex<double>* x,
                                          std::size_t n, double position,
                                          int half_len) {
  const double i0f = std::floor(position);
  const double frac = position - i0f;
  const long i0 = static_cast<long>(i0f);

  if (frac == 0.0) {
    if (i0 < 0 || i0 >= static_cast<long>(n)) return {0.0, 0.0};
    return x[i0];
  }
  const long lo = i0 - half_len + 1;
  const long hi = i0 + half_len;
  if (hi < 0 || lo >= static_cast<long>(n)) return {0.0, 0.0};

  // sin(pi*(frac - j)) alternates sign with the integer tap offset j.
  const double sin_frac = std::sin(kPi * frac);
  std::complex<double> acc{0.0, 0.0};
  double sign = ((i0 - lo) % 2 == 0) ? 1.0 : -1.0;
  for (long k = lo; k <= hi; ++k) {
    const double u = position - static_cast<double>(k);  // in (-half_len, half_len)
    if (k >= 0 && k < static_cast<long>(n)) {
      const double sinc = sign * sin_frac / (kPi * u);
      const double window = 0.54 + 0.46 * std::cos(kPi * u / half_len);
      acc += x[k] * (sinc * window);
    }
    sign = -sign;
  }
  return acc;
}

}  // namespace detail

ComplexBaseband make_fm_surrogate(double duration_s, double bandwidth_hz,
                                  double sample_rate_hz, std::uint64_t seed) {
  require(std::isfinite(duration_s) && duration_s > 0.0,
          "surrogate: duration_s must be positive");
  require(std::isfinite(sample_rate_hz) && sample_rate_hz > 0.0,
          "surrogate: sample_rate_hz must be positive");
  require(std::isfinite(bandwidth_hz) && bandwidth_hz > 0.0,
          "surrogate: bandwidth_hz must be positive");
  require(bandwidth_hz <= sample_rate_hz,
          "surrogate: bandwidth_hz exceeds sample_rate_hz");

  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  require(n >= 1, "surrogate: duration shorter than one sample");

  ComplexBaseband out;
  out.sample_rate_hz = sample_rate_hz;
  out.carrier_hz = sample_rate_hz;  // placeholder; callers overwrite for scenes
  out.epoch_s = 0.0;
  out.samples.resize(n);

  detail::GaussianSource gauss(seed);
  for (auto& v : out.samples) v = gauss.next();

  if (bandwidth_hz < sample_rate_hz) {
    auto spec = fft::transform(out.samples, fft::Direction::forward);
    const double half_band = bandwidth_hz / 2.0;
    for (std::size_t k = 0; k < n; ++k) {
      double f = static_cast<double>(k) / n * sample_rate_hz;
      if (f > sample_rate_hz / 2.0) f -= sample_rate_hz;
      if (std::abs(f) > half_band) spec[k] = {0.0, 0.0};
    }
    out.samples = fft::transform(spec, fft::Direction::inverse);
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : out.samples) v *= scale;
  }

  const double power = mean_power(out);
  require(power > 0.0, "surrogate: degenerate band selection");
  const double norm = 1.0 / std::sqrt(power);
  for (auto& v : out.samples) v *= norm;
  return out;
}

ComplexBaseband synthesize_echo(const ComplexBaseband& waveform,
                                const PhaseHistory& history,
                                LeadInPolicy policy) {
  waveform.validate();
  history.validate();
  require(history.size() == waveform.size(),
          "echo: history length must match waveform length");

  const double fs = waveform.sample_rate_hz;
  const std::size_t n = waveform.size();
  ComplexBaseband out;
  out.sample_rate_hz = fs;
  out.carrier_hz = waveform.carrier_hz;
  out.epoch_s = waveform.epoch_s;
  out.samples.assign(n, {0.0, 0.0});

  for (std::size_t i = 0; i < n; ++i) {
    const double amp = history.amplitude[i];
    if (amp == 0.0) continue;
    const double position = static_cast<double>(i) - history.delay_s[i] * fs;
    if (policy == LeadInPolicy::strict && position < 0.0)
      throw InsufficientLeadInError(
          "echo: delay reaches before the start of the waveform");
    std::complex<double> v = detail::interp_windowed_sinc(
        waveform.samples.data(), n, position, detail::kEchoKernelHalfLen);
    const double cycles = history.phase_cycles[i];
    const double arg = 2.0 * kPi * (cycles - std::floor(cycles));
    out.samples[i] = v * std::polar(amp, arg);
  }
  return out;
}

ComplexBaseband add_noise(const ComplexBaseband& in, double snr_db,
                          std::uint64_t seed) {
  in.validate();
  if (snr_db == kNoNoise) return in;
  require(std::isfinite(snr_db), "add_noise: snr_db must be finite or no-noise");

  const double signal_power = mean_power(in);
  require(signal_power > 0.0, "add_noise: input stream has zero power");
  const double target = signal_power * std::pow(10.0, -snr_db / 10.0);

  std::vector<std::complex<double>> noise(in.size());
  detail::GaussianSource gauss(seed);
  double raw_power = 0.0;
  for (auto& v : noise) {
    v = gauss.next();
    raw_power += std::norm(v);
  }
  raw_power /= static_cast<double>(noise.size());
  const double scale = std::sqrt(target / raw_power);

  ComplexBaseband out = in;
  for (std::size_t i = 0; i < noise.size(); ++i)
    out.samples[i] += noise[i] * scale;
  return out;
}

double mean_power(const ComplexBaseband& in) {
  if (in.samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& v : in.samples) acc += std::norm(v);
  return acc / static_cast<double>(in.samples.size());
}

}  // namespace pbr
