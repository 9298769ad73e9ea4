#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "pbr/detect.hpp"
#include "pbr/scenario.hpp"
#include "pbr/sync.hpp"

namespace pbr {

struct RunOptions {
  std::filesystem::path out_dir;
  unsigned n_threads = 1;
  bool dump_surfaces = false;
};

// Outcome of the reference-fault recovery chain: the two alignment stages,
// the summed correction that was finally applied, and the closed-loop
// residuals measured by reprocessing the first CPI with the corrected
// reference. Residual delay is quantized to the compression bin; Doppler is
// refined below a bin.
struct SyncReport {
  SyncFault injected;
  SyncSolution coarse;
  SyncSolution fine;
  double recovered_time_offset_s = 0.0;
  double recovered_freq_offset_hz = 0.0;
  double residual_delay_bins = 0.0;
  double residual_doppler_bins = 0.0;
};

// One processed CPI chunk. epoch_s is the chunk start; mid_s the midpoint,
// which is what the time columns in the output tables use.
struct ChunkResult {
  double epoch_s = 0.0;
  double mid_s = 0.0;
  double cpi_s = 0.0;
  Detection detection;
};

struct RunReport {
  std::vector<ChunkResult> chunks;
  std::optional<SyncReport> sync;
  std::uint64_t config_hash = 0;
  std::size_t n_detections = 0;  // chunks at or above kDefaultDetectionThresholdDb
};

// Runs a scenario end to end: synthesize reference and surveillance, recover
// any injected reference fault, process every CPI chunk over the hypothesis
// grid, and write detections.csv, snr_vs_time.csv, chirp_vs_time.csv and
// manifest.json (plus sync.json and surfaces/ when applicable) into
// options.out_dir. Outputs are bit-identical for identical scenario and seed,
// independent of the thread count.
RunReport run_scenario(const Scenario& scenario, const RunOptions& options);

}  // namespace pbr
