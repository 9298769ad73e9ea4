#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pbr/geometry.hpp"
#include "pbr/pulse_stack.hpp"

namespace pbr {

// Uniform hypothesis axis; count 1 collapses to {start} and then start must
// equal stop.
struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  std::size_t count = 1;

  std::vector<double> values() const;
  bool operator==(const GridSpec&) const = default;
};

// Reference clock / oscillator fault injected into the synthetic reference
// before processing: the faulted stream lags truth by time_offset_s and its
// mixer runs freq_offset_hz high. search_span_s bounds the coarse alignment
// search that has to rediscover the offset.
struct SyncFault {
  double time_offset_s = 0.0;
  double freq_offset_hz = 0.0;
  double search_span_s = 8.0;
  bool operator==(const SyncFault&) const = default;
};

// One self-contained experiment: geometry, signal parameters, and the
// processing chain configuration. Field names carry explicit physical units;
// nothing is inferred.
struct Scenario {
  Site tx;
  Site rx;
  Trajectory trajectory;
  double carrier_hz = 0.0;
  double bandwidth_hz = 0.0;
  double sample_rate_hz = 0.0;
  double duration_s = 0.0;
  double rcs_amplitude = 0.0;
  double noise_snr_db = kNoNoise;  // per-sample echo-to-noise ratio
  std::uint64_t seed = 0;

  std::vector<double> cpi_s;
  std::size_t batch_len = 0;
  double max_delay_s = 0.0;
  GridSpec chirp_grid_hz_per_s;
  GridSpec jerk_grid_hz_per_s2;
  bool keystone_enabled = true;
  Taper window = Taper::hann;

  std::optional<SyncFault> sync_fault;

  bool operator==(const Scenario&) const = default;
};

// Strict parse: unknown keys, missing required fields, and type mismatches
// all raise ValidationError with the dotted path of the offending field.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::filesystem::path& path);

// Canonical form: fixed key order, shortest round-trip numbers. Guaranteed to
// re-parse to an equal Scenario; equal Scenarios serialize to equal strings.
std::string serialize_scenario(const Scenario& scenario);

// Physics and processing invariants beyond what the parser can see:
// every CPI must hold an integer number of batches, the trajectory's Doppler
// must stay inside the unambiguous interval for the chosen batch length, and
// its bistatic delay must fit the compressed window. Throws ValidationError
// naming the failing field.
void validate_scenario(const Scenario& scenario);

// FNV-1a over the canonical serialization; recorded in run manifests so two
// result sets can be compared by config identity.
std::uint64_t config_hash(const Scenario& scenario);

namespace detail {

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace detail

}  // namespace pbr
