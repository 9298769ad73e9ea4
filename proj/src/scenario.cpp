#include "pbr/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "json.hpp"
#include "pbr/errors.hpp"
#include "pbr/migration.hpp"

namespace pbr {

namespace {

using njson = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError("scenario field " + path + ": " + what);
}

std::string join(const std::string& path, const char* key) {
  return path.empty() ? key : path + "." + key;
}

const njson& member(const njson& obj, const std::string& path,
                    const char* key) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(join(path, key), "missing");
  return *it;
}

void reject_unknown(const njson& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) {
      return item.key() == k;
    });
    if (!known) fail(join(path, item.key().c_str()), "unknown key");
  }
}

double get_double(const njson& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

std::uint64_t get_u64(const njson& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  fail(path, "expected a non-negative integer");
}

bool get_bool(const njson& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const njson& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

Vec3 get_vec3(const njson& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3 ||
      !std::all_of(v.begin(), v.end(),
                   [](const njson& e) { return e.is_number(); })) {
    fail(path, "expected [x, y, z] in metres");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

GridSpec get_grid(const njson& v, const std::string& path) {
  GridSpec g;
  g.start = get_double(member(v, path, "start"), path + ".start");
  g.stop = get_double(member(v, path, "stop"), path + ".stop");
  g.count = static_cast<std::size_t>(
      get_u64(member(v, path, "count"), path + ".count"));
  reject_unknown(v, path, {"start", "stop", "count"});
  return g;
}

Site get_site(const njson& v, const std::string& path) {
  Site site;
  site.position_m = get_vec3(member(v, path, "position_m"), path + ".position_m");
  reject_unknown(v, path, {"position_m"});
  return site;
}

Trajectory get_trajectory(const njson& v, const std::string& path) {
  auto type = get_string(member(v, path, "type"), path + ".type");
  if (type == "polynomial") {
    PolynomialTrajectory p;
    p.p0 = get_vec3(member(v, path, "p0_m"), path + ".p0_m");
    p.p1 = get_vec3(member(v, path, "p1_m_per_s"), path + ".p1_m_per_s");
    if (v.contains("p2_m_per_s2")) {
      p.p2 = get_vec3(v.at("p2_m_per_s2"), path + ".p2_m_per_s2");
    }
    if (v.contains("p3_m_per_s3")) {
      p.p3 = get_vec3(v.at("p3_m_per_s3"), path + ".p3_m_per_s3");
    }
    reject_unknown(v, path,
                   {"type", "p0_m", "p1_m_per_s", "p2_m_per_s2", "p3_m_per_s3"});
    return p;
  }
  if (type == "circular_orbit") {
    CircularOrbitTrajectory o;
    o.altitude_m = get_double(member(v, path, "altitude_m"), path + ".altitude_m");
    o.ground_track_offset_m = get_double(
        member(v, path, "ground_track_offset_m"), path + ".ground_track_offset_m");
    o.phase_at_epoch_rad = get_double(member(v, path, "phase_at_epoch_rad"),
                                      path + ".phase_at_epoch_rad");
    reject_unknown(
        v, path,
        {"type", "altitude_m", "ground_track_offset_m", "phase_at_epoch_rad"});
    return o;
  }
  fail(path + ".type", "unknown type \"" + type +
                           "\" (expected polynomial or circular_orbit)");
}

// Collapse -0.0 so equal scenarios cannot serialize to different strings.
double canon(double v) { return v == 0.0 ? 0.0 : v; }

njson::array_t vec3_json(const Vec3& v) {
  return {canon(v.x), canon(v.y), canon(v.z)};
}

nlohmann::ordered_json grid_json(const GridSpec& g) {
  return {{"start", canon(g.start)}, {"stop", canon(g.stop)}, {"count", g.count}};
}

const char* window_name(Taper w) {
  return w == Taper::hann ? "hann" : "rectangular";
}

// Doppler and delay envelopes are checked on a coarse time grid; the
// trajectories in scope vary over seconds, so 0.2 s sampling bounds the
// extremes to well under a percent.
constexpr double kKinematicSampleStepS = 0.2;

std::vector<double> validation_time_grid(double duration_s) {
  std::vector<double> t;
  for (double v = 0.0; v < duration_s; v += kKinematicSampleStepS) {
    t.push_back(v);
  }
  t.push_back(duration_s);
  return t;
}

void validate_grid(const GridSpec& g, const std::string& path) {
  if (g.count < 1) fail(path + ".count", "must be at least 1");
  if (!std::isfinite(g.start) || !std::isfinite(g.stop)) {
    fail(path, "start and stop must be finite");
  }
  if (g.count == 1 && g.start != g.stop) {
    fail(path + ".count", "count 1 requires start == stop");
  }
  if (g.count > 1 && g.stop <= g.start) {
    fail(path + ".stop", "must exceed start");
  }
}

void require_positive(double v, const char* key) {
  if (!(v > 0.0) || !std::isfinite(v)) fail(key, "must be positive and finite");
}

}  // namespace

std::vector<double> GridSpec::values() const {
  return make_axis(start, stop, count);
}

Scenario parse_scenario(const std::string& json_text) {
  njson root;
  try {
    root = njson::parse(json_text);
  } catch (const njson::exception& e) {
    throw ValidationError(std::string("scenario JSON parse failed: ") +
                          e.what());
  }

  Scenario s;
  const auto& sites = member(root, "", "sites");
  s.tx = get_site(member(sites, "sites", "tx"), "sites.tx");
  s.rx = get_site(member(sites, "sites", "rx"), "sites.rx");
  reject_unknown(sites, "sites", {"tx", "rx"});

  s.trajectory = get_trajectory(member(root, "", "trajectory"), "trajectory");

  s.carrier_hz = get_double(member(root, "", "carrier_hz"), "carrier_hz");
  s.bandwidth_hz = get_double(member(root, "", "bandwidth_hz"), "bandwidth_hz");
  s.sample_rate_hz =
      get_double(member(root, "", "sample_rate_hz"), "sample_rate_hz");
  s.duration_s = get_double(member(root, "", "duration_s"), "duration_s");

  const auto& target = member(root, "", "target");
  s.rcs_amplitude =
      get_double(member(target, "target", "rcs_amplitude"), "target.rcs_amplitude");
  reject_unknown(target, "target", {"rcs_amplitude"});

  if (root.contains("noise")) {
    const auto& noise = root.at("noise");
    s.noise_snr_db = get_double(member(noise, "noise", "snr_db"), "noise.snr_db");
    reject_unknown(noise, "noise", {"snr_db"});
  }

  s.seed = get_u64(member(root, "", "seed"), "seed");

  const auto& proc = member(root, "", "processing");
  const auto& cpis = member(proc, "processing", "cpi_s");
  if (!cpis.is_array() || cpis.empty()) {
    fail("processing.cpi_s", "expected a non-empty array of seconds");
  }
  for (std::size_t i = 0; i < cpis.size(); ++i) {
    s.cpi_s.push_back(get_double(cpis[i], "processing.cpi_s[" +
                                              std::to_string(i) + "]"));
  }
  s.batch_len = static_cast<std::size_t>(
      get_u64(member(proc, "processing", "batch_len"), "processing.batch_len"));
  s.max_delay_s = get_double(member(proc, "processing", "max_delay_s"),
                             "processing.max_delay_s");
  s.chirp_grid_hz_per_s = get_grid(member(proc, "processing", "chirp_grid_hz_per_s"),
                                   "processing.chirp_grid_hz_per_s");
  s.jerk_grid_hz_per_s2 = get_grid(member(proc, "processing", "jerk_grid_hz_per_s2"),
                                   "processing.jerk_grid_hz_per_s2");
  s.keystone_enabled =
      get_bool(member(proc, "processing", "keystone"), "processing.keystone");
  auto window = get_string(member(proc, "processing", "window"),
                           "processing.window");
  if (window == "hann") {
    s.window = Taper::hann;
  } else if (window == "rectangular") {
    s.window = Taper::rectangular;
  } else {
    fail("processing.window",
         "unknown window \"" + window + "\" (expected rectangular or hann)");
  }
  reject_unknown(proc, "processing",
                 {"cpi_s", "batch_len", "max_delay_s", "chirp_grid_hz_per_s",
                  "jerk_grid_hz_per_s2", "keystone", "window"});

  if (root.contains("sync_fault")) {
    const auto& f = root.at("sync_fault");
    SyncFault fault;
    fault.time_offset_s = get_double(member(f, "sync_fault", "time_offset_s"),
                                     "sync_fault.time_offset_s");
    fault.freq_offset_hz = get_double(member(f, "sync_fault", "freq_offset_hz"),
                                      "sync_fault.freq_offset_hz");
    if (f.contains("search_span_s")) {
      fault.search_span_s =
          get_double(f.at("search_span_s"), "sync_fault.search_span_s");
    }
    reject_unknown(f, "sync_fault",
                   {"time_offset_s", "freq_offset_hz", "search_span_s"});
    s.sync_fault = fault;
  }

  reject_unknown(root, "",
                 {"sites", "trajectory", "carrier_hz", "bandwidth_hz",
                  "sample_rate_hz", "duration_s", "target", "noise", "seed",
                  "processing", "sync_fault"});
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.good()) {
    throw ValidationError("scenario file not readable: " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

std::string serialize_scenario(const Scenario& s) {
  nlohmann::ordered_json root;
  root["sites"] = {{"tx", {{"position_m", vec3_json(s.tx.position_m)}}},
                   {"rx", {{"position_m", vec3_json(s.rx.position_m)}}}};

  if (const auto* poly = std::get_if<PolynomialTrajectory>(&s.trajectory)) {
    root["trajectory"] = {{"type", "polynomial"},
                          {"p0_m", vec3_json(poly->p0)},
                          {"p1_m_per_s", vec3_json(poly->p1)},
                          {"p2_m_per_s2", vec3_json(poly->p2)},
                          {"p3_m_per_s3", vec3_json(poly->p3)}};
  } else {
    const auto& orbit = std::get<CircularOrbitTrajectory>(s.trajectory);
    root["trajectory"] = {
        {"type", "circular_orbit"},
        {"altitude_m", canon(orbit.altitude_m)},
        {"ground_track_offset_m", canon(orbit.ground_track_offset_m)},
        {"phase_at_epoch_rad", canon(orbit.phase_at_epoch_rad)}};
  }

  root["carrier_hz"] = canon(s.carrier_hz);
  root["bandwidth_hz"] = canon(s.bandwidth_hz);
  root["sample_rate_hz"] = canon(s.sample_rate_hz);
  root["duration_s"] = canon(s.duration_s);
  root["target"] = {{"rcs_amplitude", canon(s.rcs_amplitude)}};
  if (s.noise_snr_db != kNoNoise) {
    root["noise"] = {{"snr_db", canon(s.noise_snr_db)}};
  }
  root["seed"] = s.seed;

  njson::array_t cpis;
  for (double c : s.cpi_s) cpis.push_back(canon(c));
  root["processing"] = {{"cpi_s", cpis},
                        {"batch_len", s.batch_len},
                        {"max_delay_s", canon(s.max_delay_s)},
                        {"chirp_grid_hz_per_s", grid_json(s.chirp_grid_hz_per_s)},
                        {"jerk_grid_hz_per_s2", grid_json(s.jerk_grid_hz_per_s2)},
                        {"keystone", s.keystone_enabled},
                        {"window", window_name(s.window)}};

  if (s.sync_fault) {
    root["sync_fault"] = {{"time_offset_s", canon(s.sync_fault->time_offset_s)},
                          {"freq_offset_hz", canon(s.sync_fault->freq_offset_hz)},
                          {"search_span_s", canon(s.sync_fault->search_span_s)}};
  }
  return root.dump(2) + "\n";
}

void validate_scenario(const Scenario& s) {
  require_positive(s.carrier_hz, "carrier_hz");
  require_positive(s.bandwidth_hz, "bandwidth_hz");
  require_positive(s.sample_rate_hz, "sample_rate_hz");
  require_positive(s.duration_s, "duration_s");
  require_positive(s.max_delay_s, "processing.max_delay_s");
  if (s.bandwidth_hz > s.sample_rate_hz) {
    fail("bandwidth_hz", "exceeds sample_rate_hz");
  }
  if (!(s.rcs_amplitude >= 0.0) || !std::isfinite(s.rcs_amplitude)) {
    fail("target.rcs_amplitude", "must be non-negative and finite");
  }
  if (s.noise_snr_db != kNoNoise && !std::isfinite(s.noise_snr_db)) {
    fail("noise.snr_db", "must be finite");
  }
  if (s.batch_len < 1) fail("processing.batch_len", "must be at least 1");
  if (s.cpi_s.empty()) fail("processing.cpi_s", "must not be empty");

  for (std::size_t i = 0; i < s.cpi_s.size(); ++i) {
    auto path = "processing.cpi_s[" + std::to_string(i) + "]";
    double cpi = s.cpi_s[i];
    if (!(cpi > 0.0) || !std::isfinite(cpi)) fail(path, "must be positive");
    double samples = cpi * s.sample_rate_hz;
    double rounded = std::round(samples);
    if (std::abs(samples - rounded) > 1e-6 || rounded < 1.0) {
      fail(path, "is not an integer number of samples at " +
                     std::to_string(s.sample_rate_hz) + " Hz");
    }
    if (static_cast<std::uint64_t>(rounded) % s.batch_len != 0) {
      fail(path, "does not divide into whole batches of " +
                     std::to_string(s.batch_len) + " samples");
    }
    if (cpi > s.duration_s) {
      fail("duration_s", "shorter than CPI " + path);
    }
  }

  validate_grid(s.chirp_grid_hz_per_s, "processing.chirp_grid_hz_per_s");
  validate_grid(s.jerk_grid_hz_per_s2, "processing.jerk_grid_hz_per_s2");

  if (s.sync_fault) {
    const auto& f = *s.sync_fault;
    if (!std::isfinite(f.time_offset_s) || !std::isfinite(f.freq_offset_hz)) {
      fail("sync_fault", "offsets must be finite");
    }
    require_positive(f.search_span_s, "sync_fault.search_span_s");
    if (f.search_span_s < 2.0 * std::abs(f.time_offset_s)) {
      fail("sync_fault.search_span_s",
           "must cover at least twice the injected time offset");
    }
  }

  if (const auto* orbit = std::get_if<CircularOrbitTrajectory>(&s.trajectory)) {
    orbit->validate();
  }

  auto obs = observables(s.tx, s.rx, s.trajectory,
                         validation_time_grid(s.duration_s), s.carrier_hz);
  double max_doppler = 0.0;
  double max_delay = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    max_doppler = std::max(max_doppler, std::abs(obs.doppler_hz[i]));
    max_delay = std::max(max_delay, obs.delay_s[i]);
  }
  double batch_duration = s.batch_len / s.sample_rate_hz;
  double unambiguous = 0.5 / batch_duration;
  if (max_doppler >= unambiguous) {
    std::ostringstream msg;
    msg << "trajectory Doppler reaches " << max_doppler
        << " Hz but the batch length leaves only " << unambiguous
        << " Hz unambiguous; shrink processing.batch_len";
    fail("processing.batch_len", msg.str());
  }
  if (max_delay > s.max_delay_s) {
    std::ostringstream msg;
    msg << "trajectory bistatic delay reaches " << max_delay
        << " s, outside the compressed window";
    fail("processing.max_delay_s", msg.str());
  }
}

std::uint64_t config_hash(const Scenario& s) {
  return detail::fnv1a64(serialize_scenario(s));
}

namespace detail {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

}  // namespace pbr
