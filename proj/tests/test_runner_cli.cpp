#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "pbr/caf_oracle.hpp"
#include "pbr/errors.hpp"
#include "pbr/geometry.hpp"
#include "pbr/io.hpp"
#include "pbr/migration.hpp"
#include "pbr/runner.hpp"
#include "pbr/scenario.hpp"
#include "pbr/signal_core.hpp"

namespace fs = std::filesystem;
using njson = nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("pbr_run_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp_text(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd =
      std::string(PBR_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Slow crossing target 60 km out; echo sits a third of the way into the
// delay window and Doppler around +35 Hz, far inside the 250 Hz unambiguous
// span of 50-sample batches.
pbr::Scenario mini_scenario() {
  pbr::Scenario s;
  s.tx.position_m = {0.0, 0.0, 0.0};
  s.rx.position_m = {100.0, 0.0, 0.0};
  pbr::PolynomialTrajectory traj;
  traj.p0 = {-60.0e3, 20.0e3, 25.0e3};
  traj.p1 = {60.0, 0.0, 0.0};
  s.trajectory = traj;
  s.carrier_hz = 1.0e8;
  s.bandwidth_hz = 2.0e4;
  s.sample_rate_hz = 2.5e4;
  s.duration_s = 2.0;
  s.rcs_amplitude = 1.0;
  s.noise_snr_db = -15.0;
  s.seed = 3;
  s.cpi_s = {0.5, 1.0};
  s.batch_len = 50;
  s.max_delay_s = 8.0e-4;
  s.chirp_grid_hz_per_s = {-2.0, 2.0, 5};
  s.jerk_grid_hz_per_s2 = {0.0, 0.0, 1};
  s.keystone_enabled = true;
  s.window = pbr::Taper::hann;
  return s;
}

std::pair<double, double> predicted_delay_doppler(const pbr::Scenario& s,
                                                  double t) {
  auto obs = pbr::observables(s.tx, s.rx, s.trajectory, {t}, s.carrier_hz);
  return {obs.delay_s[0], obs.doppler_hz[0]};
}

double mean_snr_near(const pbr::RunReport& report, double cpi, double center_s,
                     double halfwidth_s) {
  double sum = 0.0;
  int count = 0;
  for (const auto& c : report.chunks) {
    if (c.cpi_s == cpi && std::abs(c.mid_s - center_s) <= halfwidth_s) {
      sum += c.detection.snr_db;
      ++count;
    }
  }
  REQUIRE(count > 0);
  return sum / count;
}

}  // namespace

TEST_SUITE("runner_cli") {

TEST_CASE("runner processes every CPI chunk and lands on the trajectory") {
  TempDir tmp("chunks");
  auto s = mini_scenario();
  auto report = pbr::run_scenario(s, {tmp.path / "out", 1, false});

  REQUIRE(report.chunks.size() == 6);
  CHECK(report.n_detections == 6);
  CHECK(!report.sync.has_value());
  CHECK(report.config_hash == pbr::config_hash(s));

  int n_short = 0, n_long = 0;
  for (const auto& c : report.chunks) {
    if (c.cpi_s == 0.5) {
      ++n_short;
    } else if (c.cpi_s == 1.0) {
      ++n_long;
    }
    CHECK(c.mid_s == doctest::Approx(c.epoch_s + 0.5 * c.cpi_s).epsilon(1e-12));
    CHECK(c.detection.cpi_s == c.cpi_s);
    CHECK(c.detection.snr_db >= pbr::kDefaultDetectionThresholdDb);

    auto [delay, doppler] = predicted_delay_doppler(s, c.mid_s);
    CHECK(std::abs(c.detection.delay_s - delay) <= 1.0 / s.sample_rate_hz);
    CHECK(std::abs(c.detection.doppler_hz - doppler) <= 1.5 / c.cpi_s);
  }
  CHECK(n_short == 4);
  CHECK(n_long == 2);
}

TEST_CASE("runner output tables are complete, canonical and deterministic") {
  TempDir tmp("tables");
  auto s = mini_scenario();
  auto report = pbr::run_scenario(s, {tmp.path / "a", 1, false});
  pbr::run_scenario(s, {tmp.path / "b", 1, false});

  for (const char* name :
       {"detections.csv", "snr_vs_time.csv", "chirp_vs_time.csv",
        "manifest.json"}) {
    CAPTURE(name);
    CHECK(fs::exists(tmp.path / "a" / name));
    CHECK(slurp_text(tmp.path / "a" / name) ==
          slurp_text(tmp.path / "b" / name));
  }
  CHECK(!fs::exists(tmp.path / "a" / "sync.json"));
  CHECK(!fs::exists(tmp.path / "a" / "surfaces"));

  auto det_lines = lines_of(slurp_text(tmp.path / "a" / "detections.csv"));
  REQUIRE(det_lines.size() == 1 + 6);
  CHECK(det_lines[0] ==
        "epoch_s,cpi_s,delay_s,doppler_hz,chirp_hz_per_s,jerk_hz_per_s2,"
        "snr_db");

  auto snr_lines = lines_of(slurp_text(tmp.path / "a" / "snr_vs_time.csv"));
  REQUIRE(snr_lines.size() == 1 + 6);
  CHECK(snr_lines[0] == "epoch_s,cpi_0.5_s,cpi_1_s");
  // union of chunk midpoints, ascending; 0.25 s chunk rows leave the 1 s
  // column empty and vice versa
  CHECK(snr_lines[1].rfind("0.25,", 0) == 0);
  CHECK(snr_lines[1].back() == ',');
  CHECK(snr_lines[2].rfind("0.5,,", 0) == 0);

  auto chirp_lines = lines_of(slurp_text(tmp.path / "a" / "chirp_vs_time.csv"));
  REQUIRE(chirp_lines.size() == 1 + 6);
  CHECK(chirp_lines[0] == "epoch_s,cpi_0.5_s,cpi_1_s");

  auto manifest = njson::parse(slurp_text(tmp.path / "a" / "manifest.json"));
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(report.config_hash));
  CHECK(manifest.at("config_hash").get<std::string>() == hex);
  CHECK(manifest.at("version").is_string());
  auto echoed = pbr::parse_scenario(manifest.at("scenario").dump());
  CHECK(echoed == s);
}

TEST_CASE("runner dumps the best surface per chunk on request") {
  TempDir tmp("dumps");
  auto s = mini_scenario();
  auto report = pbr::run_scenario(s, {tmp.path / "out", 1, true});

  auto dir = tmp.path / "out" / "surfaces";
  REQUIRE(fs::exists(dir));
  std::size_t n_files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".ambs") ++n_files;
  }
  CHECK(n_files == report.chunks.size());

  auto first = pbr::load_surface(dir / "cpi_0.5_chunk_000.ambs");
  CHECK(first.n_delay() == 21);
  CHECK(first.n_doppler() == 250);
  CHECK(first.cpi_s == 0.5);
  CHECK(first.epoch_s == 0.0);
}

TEST_CASE("runner recovers an injected reference fault") {
  TempDir tmp("fault");
  auto s = mini_scenario();
  s.sync_fault = pbr::SyncFault{0.35, 0.8, 1.2};
  auto report = pbr::run_scenario(s, {tmp.path / "out", 1, false});

  REQUIRE(report.sync.has_value());
  const auto& sync = *report.sync;
  CHECK(std::abs(sync.recovered_time_offset_s - 0.35) <=
        1.0 / s.sample_rate_hz);
  CHECK(std::abs(sync.recovered_freq_offset_hz - 0.8) <= 1.0 / 0.5);
  CHECK(std::abs(sync.residual_delay_bins) <= 0.5);
  CHECK(std::abs(sync.residual_doppler_bins) <= 0.5);
  CHECK(sync.coarse.stage == pbr::SyncStage::coarse);
  CHECK(sync.fine.stage == pbr::SyncStage::fine);

  // the corrected reference restores full sensitivity
  CHECK(report.n_detections == report.chunks.size());

  auto sync_json = njson::parse(slurp_text(tmp.path / "out" / "sync.json"));
  CHECK(sync_json.at("injected").at("time_offset_s").get<double>() == 0.35);
  CHECK(sync_json.at("recovered").at("time_offset_s").get<double>() ==
        sync.recovered_time_offset_s);
  CHECK(std::abs(sync_json.at("residual").at("doppler_bins").get<double>()) <=
        0.5);
}

TEST_CASE("cli run matches the library and reports config errors") {
  TempDir tmp("cli_run");
  auto s = mini_scenario();
  auto scenario_path = tmp.path / "mini.scenario.json";
  std::ofstream(scenario_path) << pbr::serialize_scenario(s);

  auto lib_dir = tmp.path / "lib_out";
  pbr::run_scenario(s, {lib_dir, 1, false});

  auto cli_dir = tmp.path / "cli_out";
  int rc = run_cli("run --scenario " + scenario_path.string() + " --out " +
                       cli_dir.string(),
                   tmp.path / "run.log");
  CHECK(rc == 0);
  for (const char* name :
       {"detections.csv", "snr_vs_time.csv", "chirp_vs_time.csv"}) {
    CAPTURE(name);
    CHECK(slurp_text(cli_dir / name) == slurp_text(lib_dir / name));
  }
  auto log = slurp_text(tmp.path / "run.log");
  CHECK(log.find("detections") != std::string::npos);

  SUBCASE("invalid config exits 2 and names the field") {
    auto bad = s;
    bad.batch_len = 60;
    auto bad_path = tmp.path / "bad.scenario.json";
    std::ofstream(bad_path) << pbr::serialize_scenario(bad);
    int bad_rc = run_cli("run --scenario " + bad_path.string() + " --out " +
                             (tmp.path / "bad_out").string(),
                         tmp.path / "bad.log");
    CHECK(bad_rc == 2);
    CHECK(slurp_text(tmp.path / "bad.log").find("processing.cpi_s[0]") !=
          std::string::npos);
  }
  SUBCASE("missing scenario file exits 2") {
    int missing_rc = run_cli("run --scenario " +
                                 (tmp.path / "absent.json").string() +
                                 " --out " + (tmp.path / "x").string(),
                             tmp.path / "missing.log");
    CHECK(missing_rc == 2);
  }
  SUBCASE("unknown flag fails") {
    int flag_rc = run_cli("run --scenario " + scenario_path.string() +
                              " --frobnicate",
                          tmp.path / "flag.log");
    CHECK(flag_rc != 0);
  }
}

TEST_CASE("cli oracle subcommand reproduces the reference surface") {
  TempDir tmp("cli_oracle");
  double fs = 1.0e4;
  auto ref = pbr::make_fm_surrogate(0.1, 8.0e3, fs, 77);
  ref.carrier_hz = 1.0e8;
  auto surv = ref;
  for (std::size_t n = 0; n < surv.size(); ++n) {
    double t = surv.time_of(n);
    surv.samples[n] *= std::polar(0.8, 2.0 * M_PI * 25.0 * t);
  }
  pbr::save_stream(tmp.path / "ref.cf32", ref);
  pbr::save_stream(tmp.path / "surv.cf32", surv);

  auto out = tmp.path / "oracle.ambs";
  int rc = run_cli("oracle --ref " + (tmp.path / "ref.cf32").string() +
                       " --surv " + (tmp.path / "surv.cf32").string() +
                       " --max-delay 4e-4 --doppler-start -50 --doppler-stop"
                       " 50 --doppler-count 21 --out " + out.string(),
                   tmp.path / "oracle.log");
  REQUIRE(rc == 0);

  std::vector<double> delay_axis;
  for (int d = 0; d < 5; ++d) delay_axis.push_back(d / fs);
  auto expected = pbr::caf_grid(surv, ref, delay_axis,
                                pbr::make_axis(-50.0, 50.0, 21), 0.0);
  auto dumped = pbr::load_surface(out);
  REQUIRE(dumped.n_delay() == expected.n_delay());
  REQUIRE(dumped.n_doppler() == expected.n_doppler());
  double peak = *std::max_element(expected.power.begin(), expected.power.end());
  for (std::size_t i = 0; i < expected.power.size(); ++i) {
    CHECK(std::abs(dumped.power[i] - expected.power[i]) <= 1e-5 * peak);
  }

  int info_rc = run_cli("surface --in " + out.string(), tmp.path / "info.log");
  CHECK(info_rc == 0);
  auto info = slurp_text(tmp.path / "info.log");
  CHECK(info.find("peak") != std::string::npos);
  CHECK(info.find("doppler_hz=25") != std::string::npos);
}

TEST_CASE("cli sync subcommand aligns two recorded streams") {
  TempDir tmp("cli_sync");
  double fs = 2.0e4;
  auto surv = pbr::make_fm_surrogate(1.2, 1.6e4, fs, 201);
  auto ref = pbr::make_fm_surrogate(4.6, 1.6e4, fs, 202);
  surv.carrier_hz = ref.carrier_hz = 1.0e8;
  auto event = pbr::make_fm_surrogate(0.05, 1.6e4, fs, 203);
  auto add_event = [&](pbr::ComplexBaseband& stream, double at_s) {
    auto start = static_cast<std::size_t>(std::llround(at_s * fs));
    for (std::size_t n = 0; n < event.size(); ++n) {
      stream.samples[start + n] += 8.0 * event.samples[n];
    }
  };
  add_event(surv, 0.5);
  add_event(ref, 3.717);
  pbr::save_stream(tmp.path / "surv.cf32", surv);
  pbr::save_stream(tmp.path / "ref.cf32", ref);

  int rc = run_cli("sync --surv " + (tmp.path / "surv.cf32").string() +
                       " --ref " + (tmp.path / "ref.cf32").string() +
                       " --window-start 0.5 --window-end 0.55 --span 4.0",
                   tmp.path / "sync.log");
  REQUIRE(rc == 0);
  auto sol = njson::parse(slurp_text(tmp.path / "sync.log"));
  CHECK(std::abs(sol.at("time_offset_s").get<double>() - 3.217) <= 0.5 / fs);

  SUBCASE("unrelated streams exit 4") {
    auto lone = pbr::make_fm_surrogate(1.2, 1.6e4, fs, 501);
    lone.carrier_hz = 1.0e8;
    pbr::save_stream(tmp.path / "lone.cf32", lone);
    int lone_rc = run_cli("sync --surv " + (tmp.path / "lone.cf32").string() +
                              " --ref " + (tmp.path / "ref.cf32").string() +
                              " --window-start 0.5 --window-end 0.55 "
                              "--span 4.0",
                          tmp.path / "lone.log");
    CHECK(lone_rc == 4);
  }
}

TEST_CASE("bundled orbit scenario gains SNR with CPI near closest approach") {
  TempDir tmp("iss");
  auto s = pbr::load_scenario(fs::path(PBR_SCENARIO_DIR) /
                              "iss_like.scenario.json");
  pbr::validate_scenario(s);
  auto report = pbr::run_scenario(s, {tmp.path / "out", 1, false});

  // closest approach sits mid-scenario by construction
  double crossing = s.duration_s / 2.0;
  double snr1 = mean_snr_near(report, 1.0, crossing, 3.0);
  double snr2 = mean_snr_near(report, 2.0, crossing, 3.0);
  double snr3 = mean_snr_near(report, 3.0, crossing, 3.0);
  CAPTURE(snr1);
  CAPTURE(snr2);
  CAPTURE(snr3);
  CHECK(snr2 > snr1 + 1.0);
  CHECK(snr3 > snr1 + 2.0);

  for (const auto& c : report.chunks) {
    if (std::abs(c.mid_s - crossing) <= 2.0) {
      CHECK(c.detection.snr_db >= pbr::kDefaultDetectionThresholdDb);
    }
  }
}

TEST_CASE("bundled uncompensated scenario loses SNR at long CPI") {
  TempDir tmp("nomig");
  auto s = pbr::load_scenario(fs::path(PBR_SCENARIO_DIR) /
                              "nomigration_off.scenario.json");
  CHECK(!s.keystone_enabled);
  CHECK(s.chirp_grid_hz_per_s.count == 1);
  auto report = pbr::run_scenario(s, {tmp.path / "out", 1, false});

  double crossing = s.duration_s / 2.0;
  double snr1 = mean_snr_near(report, 1.0, crossing, 2.0);
  double snr3 = mean_snr_near(report, 3.0, crossing, 2.0);
  CAPTURE(snr1);
  CAPTURE(snr3);
  CHECK(snr3 < snr1 - 1.0);
}

}  // TEST_SUITE
