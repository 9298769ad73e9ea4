#pragma once

#include <cstdint>
#include <filesystem>

#include "pbr/pulse_stack.hpp"
#include "pbr/signal_core.hpp"

namespace pbr {

inline constexpr std::uint32_t kSurfaceFormatVersion = 1;

// Binary surface dump, little-endian throughout:
//   bytes 0..3   magic "AMBS"
//   u32          format version
//   u32          n_delay
//   u32          n_doppler
//   f64          cpi_s
//   f64          hypothesis chirp_hz_per_s
//   f64          hypothesis jerk_hz_per_s2
//   f32[n_delay * n_doppler]  power, delay-major rows
// The axes and the surface epoch ride in a sibling text file <path>.axes.csv
// (kind,index,value rows) so the binary stays a bare power matrix that
// numpy.fromfile can slurp after a 40-byte seek.
void dump_surface(const std::filesystem::path& path,
                  const AmbiguitySurface& surface);

// Reads a dump pair written by dump_surface. Power comes back at f32
// precision; axes and epoch are exact. Throws ValidationError on a missing
// file, bad magic, unknown version, or a size mismatch between header,
// payload, and axes.
AmbiguitySurface load_surface(const std::filesystem::path& path);

// Raw complex stream on disk: interleaved little-endian f32 (re, im) pairs,
// with stream metadata in a JSON sidecar at <path>.json holding
// sample_rate_hz, carrier_hz and epoch_s. Unknown sidecar keys are ignored so
// externally recorded captures can carry their own annotations.
void save_stream(const std::filesystem::path& path,
                 const ComplexBaseband& stream);
ComplexBaseband load_stream(const std::filesystem::path& path);

}  // namespace pbr
