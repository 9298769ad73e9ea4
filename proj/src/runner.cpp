#include "pbr/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pbr/errors.hpp"
#include "pbr/io.hpp"
#include "pbr/migration.hpp"
#include "pbr/pulse_stack.hpp"
#include "pbr/version.hpp"

namespace pbr {

namespace {

// Observable sampling for phase-history interpolation. The cubic interpolant
// reproduces the locally-cubic bistatic range exactly; 20 ms sampling leaves
// only the quartic remainder, far below a thousandth of a cycle for the
// trajectory classes in scope.
constexpr double kObsStepS = 0.02;

// Cells = delay bins x batches x hypotheses held live per chunk.
constexpr std::size_t kMaxChunkCells = 200'000'000;

std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out.good()) {
    throw ValidationError("output file not writable: " + path.string());
  }
}

struct Synthesis {
  ComplexBaseband waveform_long;  // clean reference, padded on both sides
  ComplexBaseband surveillance;   // noisy echo over [0, duration), epoch 0
  std::size_t head = 0;           // padding samples before t = 0
  std::size_t body = 0;           // samples in [0, duration)
};

Synthesis synthesize(const Scenario& s) {
  const double fs = s.sample_rate_hz;
  // The pad keeps real waveform content under the surveillance span even
  // after the reference is slid by an injected clock offset.
  double pad_s =
      s.sync_fault ? 0.5 * s.sync_fault->search_span_s + 0.25 : 0.0;
  double lead_s = std::max(2.0 * s.max_delay_s, 0.05);

  Synthesis syn;
  syn.head = static_cast<std::size_t>(std::ceil((lead_s + pad_s) * fs));
  syn.body = static_cast<std::size_t>(std::llround(s.duration_s * fs));
  const std::size_t n_total = 2 * syn.head + syn.body;

  syn.waveform_long = make_fm_surrogate(static_cast<double>(n_total) / fs,
                                        s.bandwidth_hz, fs, s.seed);
  syn.waveform_long.carrier_hz = s.carrier_hz;
  syn.waveform_long.epoch_s = -static_cast<double>(syn.head) / fs;

  std::vector<double> grid;
  double t_begin = syn.waveform_long.epoch_s - 3.0 * kObsStepS;
  double t_end =
      syn.waveform_long.epoch_s + static_cast<double>(n_total) / fs +
      3.0 * kObsStepS;
  for (double t = t_begin; t <= t_end; t += kObsStepS) grid.push_back(t);
  auto obs = observables(s.tx, s.rx, s.trajectory, grid, s.carrier_hz);
  auto hist = render_phase_history(obs, fs, s.rcs_amplitude,
                                   syn.waveform_long.epoch_s, n_total);

  auto echo = synthesize_echo(syn.waveform_long, hist);
  syn.surveillance = add_noise(echo.slice(syn.head, syn.body), s.noise_snr_db,
                               s.seed + 1);
  return syn;
}

// Slice of the (long) reference covering exactly the surveillance chunk's
// sample span.
ComplexBaseband aligned_ref_slice(const ComplexBaseband& ref_long,
                                  const ComplexBaseband& surv_chunk) {
  auto off = static_cast<std::size_t>(std::llround(
      (surv_chunk.epoch_s - ref_long.epoch_s) * ref_long.sample_rate_hz));
  return ref_long.slice(off, surv_chunk.size());
}

// Peak measurement for the sync loop. Unlike the detection tables, the
// closed-loop residual check needs sub-bin delay, so the bin estimate is
// refined with a log-power parabola across the peak's delay neighbours.
Detection measure_first_chunk(const ComplexBaseband& ref_long,
                              const ComplexBaseband& surv, const Scenario& s,
                              unsigned threads) {
  auto n0 = static_cast<std::size_t>(
      std::llround(s.cpi_s.front() * s.sample_rate_hz));
  auto surv_chunk = surv.slice(0, n0);
  auto ref_chunk = aligned_ref_slice(ref_long, surv_chunk);
  auto stack = compress(ref_chunk, surv_chunk, s.max_delay_s, s.batch_len,
                        CompressMethod::automatic, static_cast<int>(threads));
  auto surface =
      doppler_transform(stack, Taper::rectangular, static_cast<int>(threads));
  auto det = extract_peak(surface, noise_floor(surface));

  const std::size_t n_doppler = surface.n_doppler();
  std::size_t best = 0;
  for (std::size_t i = 1; i < surface.power.size(); ++i) {
    if (surface.power[i] > surface.power[best]) best = i;
  }
  const std::size_t d = best / n_doppler;
  if (d > 0 && d + 1 < surface.n_delay()) {
    double a = surface.power[best - n_doppler];
    double b = surface.power[best];
    double c = surface.power[best + n_doppler];
    if (a > 0.0 && c > 0.0) {
      double la = std::log(a), lb = std::log(b), lc = std::log(c);
      double den = la - 2.0 * lb + lc;
      if (den < 0.0) {
        double delta = 0.5 * (la - lc) / den;
        if (std::abs(delta) <= 0.75) {
          det.delay_s += delta * (surface.delay_axis_s[1] -
                                  surface.delay_axis_s[0]);
        }
      }
    }
  }
  return det;
}

struct SyncOutcome {
  SyncReport report;
  ComplexBaseband corrected_long;
};

// Injection and recovery share one convention: a solution's offsets are what
// apply_correction must consume to fix the stream, so the fault is injected
// by applying the negated offsets and recovery should reproduce them.
SyncOutcome recover_fault(const ComplexBaseband& waveform_long,
                          const ComplexBaseband& surv, const Scenario& s,
                          unsigned threads) {
  const auto& fault = *s.sync_fault;
  SyncSolution negated;
  negated.time_offset_s = -fault.time_offset_s;
  negated.freq_offset_hz = -fault.freq_offset_hz;
  auto faulted = apply_correction(waveform_long, negated);

  // The correlator behind coarse_align is fully coherent over the event
  // window, so both the echo's own Doppler and the unknown clock frequency
  // offset can null the peak. Take the predicted Doppler out up front, then
  // scan a comb of trial clock offsets half a window-bin apart and keep the
  // median lag over the trials that detect. Re-anchoring the reference
  // epoch half a span later turns the one-sided lag scan into a two-sided
  // offset search.
  const double window_len = std::min(0.45, s.duration_s / 4.0);
  const double win_mid = surv.epoch_s + 0.5 * window_len;
  auto pred_win =
      observables(s.tx, s.rx, s.trajectory, {win_mid}, s.carrier_hz);
  auto snippet = surv;
  for (std::size_t n = 0; n < snippet.size(); ++n) {
    snippet.samples[n] *= std::polar(
        1.0, -2.0 * M_PI * pred_win.doppler_hz[0] * snippet.time_of(n));
  }
  auto scan_ref = faulted;
  scan_ref.epoch_s += 0.5 * fault.search_span_s;

  std::vector<double> lags;
  const double comb_step_hz = 0.5 / window_len;
  for (int k = -4; k <= 4; ++k) {
    auto trial = snippet;
    if (k != 0) {
      for (std::size_t n = 0; n < trial.size(); ++n) {
        trial.samples[n] *= std::polar(
            1.0, -2.0 * M_PI * k * comb_step_hz * trial.time_of(n));
      }
    }
    try {
      auto sol = coarse_align(trial, scan_ref,
                              {surv.epoch_s, surv.epoch_s + window_len},
                              fault.search_span_s);
      lags.push_back(sol.time_offset_s - 0.5 * fault.search_span_s);
    } catch (const NoDetectionError&) {
    }
  }
  if (lags.empty()) {
    throw NoDetectionError(
        "sync recovery: no clock offset trial cleared the "
        "coarse correlation threshold");
  }
  std::sort(lags.begin(), lags.end());
  SyncSolution coarse;
  coarse.time_offset_s = lags[lags.size() / 2];
  coarse.stage = SyncStage::coarse;

  // Back the applied coarse shift off by a few delay bins so the echo sits
  // on interior bins of the measurement surface, where the sub-bin parabola
  // is usable; the deliberate shift is added back into the total.
  const auto n_delay = static_cast<std::size_t>(
      std::floor(s.max_delay_s * s.sample_rate_hz + 1e-9)) + 1;
  const double backoff_s =
      static_cast<double>(std::min<std::size_t>(4, (n_delay - 1) / 2)) /
      s.sample_rate_hz;
  SyncSolution applied_coarse = coarse;
  applied_coarse.time_offset_s += backoff_s;
  auto after_coarse = apply_correction(faulted, applied_coarse);

  auto measured = measure_first_chunk(after_coarse, surv, s, threads);
  double mid0 = 0.5 * s.cpi_s.front();
  auto obs = observables(s.tx, s.rx, s.trajectory, {mid0}, s.carrier_hz);
  auto fine = fine_align(measured, obs.delay_s[0], obs.doppler_hz[0],
                         s.sample_rate_hz);

  // One summed correction applied to the original faulted stream avoids a
  // second interpolation pass.
  SyncSolution total;
  total.time_offset_s = applied_coarse.time_offset_s + fine.time_offset_s;
  total.freq_offset_hz = coarse.freq_offset_hz + fine.freq_offset_hz;
  total.stage = SyncStage::fine;
  auto corrected = apply_correction(faulted, total);

  auto closed_loop = measure_first_chunk(corrected, surv, s, threads);

  SyncOutcome out;
  out.report.injected = fault;
  out.report.coarse = coarse;
  out.report.fine = fine;
  out.report.recovered_time_offset_s = total.time_offset_s;
  out.report.recovered_freq_offset_hz = total.freq_offset_hz;
  out.report.residual_delay_bins =
      (obs.delay_s[0] - closed_loop.delay_s) * s.sample_rate_hz;
  out.report.residual_doppler_bins =
      (obs.doppler_hz[0] - closed_loop.doppler_hz) * s.cpi_s.front();
  out.corrected_long = std::move(corrected);
  return out;
}

void write_tables(const RunReport& report, const Scenario& s,
                  const std::filesystem::path& out_dir) {
  std::string det =
      "epoch_s,cpi_s,delay_s,doppler_hz,chirp_hz_per_s,jerk_hz_per_s2,"
      "snr_db\n";
  for (const auto& c : report.chunks) {
    if (c.detection.snr_db < kDefaultDetectionThresholdDb) continue;
    det += fmt_g17(c.mid_s) + "," + fmt_g17(c.cpi_s) + "," +
           fmt_g17(c.detection.delay_s) + "," +
           fmt_g17(c.detection.doppler_hz) + "," +
           fmt_g17(c.detection.chirp_hz_per_s) + "," +
           fmt_g17(c.detection.jerk_hz_per_s2) + "," +
           fmt_g17(c.detection.snr_db) + "\n";
  }
  write_text(out_dir / "detections.csv", det);

  // one column per CPI length over the union of chunk midpoints
  const auto& cpis = s.cpi_s;
  auto column_of = [&](double cpi) {
    return std::find(cpis.begin(), cpis.end(), cpi) - cpis.begin();
  };
  std::map<double, std::vector<double>> rows;
  for (const auto& c : report.chunks) {
    auto& row = rows
                    .try_emplace(c.mid_s, cpis.size(),
                                 std::numeric_limits<double>::quiet_NaN())
                    .first->second;
    row[static_cast<std::size_t>(column_of(c.cpi_s))] = c.detection.snr_db;
  }
  std::map<double, std::vector<double>> chirp_rows;
  for (const auto& c : report.chunks) {
    auto& row = chirp_rows
                    .try_emplace(c.mid_s, cpis.size(),
                                 std::numeric_limits<double>::quiet_NaN())
                    .first->second;
    row[static_cast<std::size_t>(column_of(c.cpi_s))] =
        c.detection.chirp_hz_per_s;
  }

  auto emit = [&](const std::map<double, std::vector<double>>& table) {
    std::string text = "epoch_s";
    for (double cpi : cpis) text += ",cpi_" + fmt_g(cpi) + "_s";
    text += "\n";
    for (const auto& [mid, row] : table) {
      text += fmt_g17(mid);
      for (double v : row) {
        text += ",";
        if (!std::isnan(v)) text += fmt_g17(v);
      }
      text += "\n";
    }
    return text;
  };
  write_text(out_dir / "snr_vs_time.csv", emit(rows));
  write_text(out_dir / "chirp_vs_time.csv", emit(chirp_rows));

  nlohmann::ordered_json manifest;
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(report.config_hash));
  manifest["config_hash"] = hex;
  manifest["version"] = kVersion;
  manifest["scenario"] = nlohmann::ordered_json::parse(serialize_scenario(s));
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");

  if (report.sync) {
    const auto& y = *report.sync;
    nlohmann::ordered_json sync_json;
    sync_json["injected"] = {{"time_offset_s", y.injected.time_offset_s},
                             {"freq_offset_hz", y.injected.freq_offset_hz},
                             {"search_span_s", y.injected.search_span_s}};
    sync_json["coarse"] = {{"time_offset_s", y.coarse.time_offset_s},
                           {"freq_offset_hz", y.coarse.freq_offset_hz}};
    sync_json["fine"] = {
        {"time_offset_s", y.fine.time_offset_s},
        {"freq_offset_hz", y.fine.freq_offset_hz},
        {"residual_delay_bins", y.fine.residual_delay_bins},
        {"residual_doppler_bins", y.fine.residual_doppler_bins}};
    sync_json["recovered"] = {{"time_offset_s", y.recovered_time_offset_s},
                              {"freq_offset_hz", y.recovered_freq_offset_hz}};
    sync_json["residual"] = {{"delay_bins", y.residual_delay_bins},
                             {"doppler_bins", y.residual_doppler_bins}};
    write_text(out_dir / "sync.json", sync_json.dump(2) + "\n");
  }
}

}  // namespace

RunReport run_scenario(const Scenario& s, const RunOptions& options) {
  validate_scenario(s);
  std::filesystem::create_directories(options.out_dir);
  const double fs = s.sample_rate_hz;
  const auto threads = options.n_threads;

  const std::size_t n_delay =
      static_cast<std::size_t>(std::floor(s.max_delay_s * fs + 1e-9)) + 1;
  const std::size_t n_hyp =
      s.chirp_grid_hz_per_s.count * s.jerk_grid_hz_per_s2.count;
  for (double cpi : s.cpi_s) {
    auto n_batches =
        static_cast<std::size_t>(std::llround(cpi * fs)) / s.batch_len;
    if (n_delay * n_batches * n_hyp > kMaxChunkCells) {
      throw ResourceLimitError(
          "scenario needs " + std::to_string(n_delay * n_batches * n_hyp) +
          " surface cells per chunk at CPI " + fmt_g(cpi) + " s (cap " +
          std::to_string(kMaxChunkCells) + ")");
    }
  }

  auto syn = synthesize(s);

  RunReport report;
  report.config_hash = config_hash(s);

  ComplexBaseband ref_long = syn.waveform_long;
  if (s.sync_fault) {
    auto outcome = recover_fault(syn.waveform_long, syn.surveillance, s,
                                 threads);
    report.sync = outcome.report;
    ref_long = std::move(outcome.corrected_long);
  }

  auto chirps = s.chirp_grid_hz_per_s.values();
  auto jerks = s.jerk_grid_hz_per_s2.values();
  auto surfaces_dir = options.out_dir / "surfaces";
  if (options.dump_surfaces) std::filesystem::create_directories(surfaces_dir);

  for (double cpi : s.cpi_s) {
    auto n_cpi = static_cast<std::size_t>(std::llround(cpi * fs));
    std::size_t n_chunks = syn.body / n_cpi;
    for (std::size_t k = 0; k < n_chunks; ++k) {
      auto surv_chunk = syn.surveillance.slice(k * n_cpi, n_cpi);
      auto ref_chunk = aligned_ref_slice(ref_long, surv_chunk);
      auto stack = compress(ref_chunk, surv_chunk, s.max_delay_s, s.batch_len,
                            CompressMethod::automatic,
                            static_cast<int>(threads));
      if (s.keystone_enabled) stack = keystone(stack, static_cast<int>(threads));
      auto surfaces = hypothesis_sweep(stack, chirps, jerks, s.window, 4096,
                                       static_cast<int>(threads));
      auto det = best_hypothesis(surfaces);

      ChunkResult chunk;
      chunk.epoch_s = surv_chunk.epoch_s;
      chunk.mid_s = surv_chunk.epoch_s + 0.5 * cpi;
      chunk.cpi_s = cpi;
      chunk.detection = det;
      if (det.snr_db >= kDefaultDetectionThresholdDb) ++report.n_detections;

      if (options.dump_surfaces) {
        char name[64];
        std::snprintf(name, sizeof(name), "cpi_%s_chunk_%03zu.ambs",
                      fmt_g(cpi).c_str(), k);
        dump_surface(surfaces_dir / name,
                     surfaces[static_cast<std::size_t>(det.surface_id)]);
      }
      report.chunks.push_back(std::move(chunk));
    }
  }

  write_tables(report, s, options.out_dir);
  return report;
}

}  // namespace pbr
