#include <fftw3.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pbr/caf_oracle.hpp"
#include "pbr/detect.hpp"
#include "pbr/errors.hpp"
#include "pbr/io.hpp"
#include "pbr/migration.hpp"
#include "pbr/runner.hpp"
#include "pbr/scenario.hpp"
#include "pbr/sync.hpp"
#include "pbr/version.hpp"

namespace {

// The only environment the tool reads: a cache directory for FFTW plan
// wisdom, worth a few hundred ms on repeated large runs.
std::filesystem::path wisdom_path() {
  const char* dir = std::getenv("PBR_CACHE_DIR");
  if (dir == nullptr || *dir == '\0') return {};
  return std::filesystem::path(dir) / "fftw_wisdom";
}

void import_wisdom() {
  auto p = wisdom_path();
  if (!p.empty() && std::filesystem::exists(p)) {
    fftw_import_wisdom_from_filename(p.string().c_str());
  }
}

void export_wisdom() {
  auto p = wisdom_path();
  if (p.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(p.parent_path(), ec);
  if (!ec) fftw_export_wisdom_to_filename(p.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"passive bistatic radar coherent-processing toolkit"};
  app.set_version_flag("--version", std::string(pbr::kVersion));
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "execute a scenario end to end");
  std::string scenario_path;
  std::string out_dir;
  unsigned threads = 1;
  bool dump_surfaces = false;
  run->add_option("--scenario", scenario_path, "scenario JSON file")
      ->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--threads", threads, "worker threads, 0 = all hardware");
  run->add_flag("--dump-surfaces", dump_surfaces,
                "write the best surface per chunk under <out>/surfaces");

  auto* oracle =
      app.add_subcommand("oracle", "brute-force ambiguity surface (debugging)");
  std::string oracle_ref, oracle_surv, oracle_out;
  double oracle_max_delay = 0.0;
  double doppler_start = 0.0, doppler_stop = 0.0, oracle_chirp = 0.0;
  std::size_t doppler_count = 1;
  oracle->add_option("--ref", oracle_ref, "reference stream (.cf32)")
      ->required();
  oracle->add_option("--surv", oracle_surv, "surveillance stream (.cf32)")
      ->required();
  oracle->add_option("--max-delay", oracle_max_delay, "delay span, seconds")
      ->required();
  oracle->add_option("--doppler-start", doppler_start, "Hz")->required();
  oracle->add_option("--doppler-stop", doppler_stop, "Hz")->required();
  oracle->add_option("--doppler-count", doppler_count, "grid points")
      ->required();
  oracle->add_option("--chirp", oracle_chirp, "Doppler rate hypothesis, Hz/s");
  oracle->add_option("--out", oracle_out, "surface dump path")->required();

  auto* sync = app.add_subcommand("sync", "coarse-align two recorded streams");
  std::string sync_surv, sync_ref;
  double window_start = 0.0, window_end = 0.0, span = 0.0;
  sync->add_option("--surv", sync_surv, "stream holding the known event")
      ->required();
  sync->add_option("--ref", sync_ref, "stream to search")->required();
  sync->add_option("--window-start", window_start, "event window start, s")
      ->required();
  sync->add_option("--window-end", window_end, "event window end, s")
      ->required();
  sync->add_option("--span", span, "search span, s")->required();

  auto* surface = app.add_subcommand("surface", "inspect a surface dump");
  std::string surface_in;
  surface->add_option("--in", surface_in, "surface dump path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  import_wisdom();
  try {
    if (*run) {
      auto scenario = pbr::load_scenario(scenario_path);
      pbr::validate_scenario(scenario);
      auto report =
          pbr::run_scenario(scenario, {out_dir, threads, dump_surfaces});
      std::cout << report.n_detections << " detections across "
                << report.chunks.size() << " chunks -> " << out_dir << "\n";
      char hex[32];
      std::snprintf(hex, sizeof(hex), "%016llx",
                    static_cast<unsigned long long>(report.config_hash));
      std::cout << "config hash " << hex << "\n";
      if (report.sync) {
        std::cout << "sync recovered time offset "
                  << report.sync->recovered_time_offset_s << " s, freq offset "
                  << report.sync->recovered_freq_offset_hz << " Hz\n";
      }
    } else if (*oracle) {
      auto ref = pbr::load_stream(oracle_ref);
      auto surv = pbr::load_stream(oracle_surv);
      auto n_delay = static_cast<std::size_t>(std::floor(
                         oracle_max_delay * ref.sample_rate_hz + 1e-9)) +
                     1;
      std::vector<double> delay_axis(n_delay);
      for (std::size_t d = 0; d < n_delay; ++d) {
        delay_axis[d] = static_cast<double>(d) / ref.sample_rate_hz;
      }
      auto surf = pbr::caf_grid(
          surv, ref, delay_axis,
          pbr::make_axis(doppler_start, doppler_stop, doppler_count),
          oracle_chirp);
      pbr::dump_surface(oracle_out, surf);
      std::cout << "wrote " << surf.n_delay() << "x" << surf.n_doppler()
                << " surface to " << oracle_out << "\n";
    } else if (*sync) {
      auto surv = pbr::load_stream(sync_surv);
      auto ref = pbr::load_stream(sync_ref);
      auto sol =
          pbr::coarse_align(surv, ref, {window_start, window_end}, span);
      nlohmann::ordered_json out{{"time_offset_s", sol.time_offset_s},
                                 {"freq_offset_hz", sol.freq_offset_hz},
                                 {"stage", "coarse"}};
      std::cout << out.dump(2) << "\n";
    } else if (*surface) {
      auto surf = pbr::load_surface(surface_in);
      auto det = pbr::extract_peak(surf, pbr::noise_floor(surf));
      std::printf("surface %zux%zu cpi_s=%g chirp_hz_per_s=%g jerk_hz_per_s2=%g\n",
                  surf.n_delay(), surf.n_doppler(), surf.cpi_s,
                  surf.hypothesis.chirp_hz_per_s,
                  surf.hypothesis.jerk_hz_per_s2);
      std::printf("peak delay_s=%g doppler_hz=%g snr_db=%.2f\n", det.delay_s,
                  det.doppler_hz, det.snr_db);
    }
  } catch (const pbr::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pbr::ResourceLimitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const pbr::NoDetectionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  export_wisdom();
  return 0;
}
