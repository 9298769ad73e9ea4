#include "pbr/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pbr/errors.hpp"

namespace pbr {

static_assert(std::endian::native == std::endian::little,
              "surface and stream files are little-endian; serialization "
              "assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'A', 'M', 'B', 'S'};
constexpr std::size_t kHeaderBytes = 40;

std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<char> read_file(const std::filesystem::path& path,
                            const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) {
    throw ValidationError(std::string(what) + " not readable: " +
                          path.string());
  }
  return std::vector<char>(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const char* data,
                std::size_t n, const char* what) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(data, static_cast<std::streamsize>(n));
  if (!out.good()) {
    throw ValidationError(std::string(what) + " not writable: " +
                          path.string());
  }
}

template <typename T>
void append_raw(std::vector<char>& buf, T v) {
  char tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.insert(buf.end(), tmp, tmp + sizeof(T));
}

template <typename T>
T read_raw(const std::vector<char>& buf, std::size_t off) {
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  return v;
}

std::filesystem::path axes_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".axes.csv";
  return p;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

double sidecar_number(const nlohmann::json& j, const char* key,
                      const std::filesystem::path& path) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ValidationError("stream sidecar field missing or not a number: " +
                          std::string(key) + " in " + path.string());
  }
  return j.at(key).get<double>();
}

}  // namespace

void dump_surface(const std::filesystem::path& path,
                  const AmbiguitySurface& surface) {
  surface.validate();

  std::vector<char> buf;
  buf.reserve(kHeaderBytes + surface.power.size() * sizeof(float));
  buf.insert(buf.end(), kMagic, kMagic + 4);
  append_raw<std::uint32_t>(buf, kSurfaceFormatVersion);
  append_raw<std::uint32_t>(buf, static_cast<std::uint32_t>(surface.n_delay()));
  append_raw<std::uint32_t>(buf,
                            static_cast<std::uint32_t>(surface.n_doppler()));
  append_raw<double>(buf, surface.cpi_s);
  append_raw<double>(buf, surface.hypothesis.chirp_hz_per_s);
  append_raw<double>(buf, surface.hypothesis.jerk_hz_per_s2);
  for (double p : surface.power) append_raw<float>(buf, static_cast<float>(p));
  write_file(path, buf.data(), buf.size(), "surface dump");

  std::string csv = "kind,index,value\n";
  for (std::size_t i = 0; i < surface.delay_axis_s.size(); ++i) {
    csv += "delay_s," + std::to_string(i) + "," +
           fmt_g17(surface.delay_axis_s[i]) + "\n";
  }
  for (std::size_t i = 0; i < surface.doppler_axis_hz.size(); ++i) {
    csv += "doppler_hz," + std::to_string(i) + "," +
           fmt_g17(surface.doppler_axis_hz[i]) + "\n";
  }
  csv += "epoch_s,0," + fmt_g17(surface.epoch_s) + "\n";
  write_file(axes_path(path), csv.data(), csv.size(), "surface axes");
}

AmbiguitySurface load_surface(const std::filesystem::path& path) {
  auto buf = read_file(path, "surface dump");
  if (buf.size() < kHeaderBytes) {
    throw ValidationError("surface dump shorter than its header: " +
                          path.string());
  }
  if (std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw ValidationError("surface dump has wrong magic: " + path.string());
  }
  auto version = read_raw<std::uint32_t>(buf, 4);
  if (version != kSurfaceFormatVersion) {
    throw ValidationError("surface dump version " + std::to_string(version) +
                          " not supported: " + path.string());
  }
  std::size_t n_delay = read_raw<std::uint32_t>(buf, 8);
  std::size_t n_doppler = read_raw<std::uint32_t>(buf, 12);

  AmbiguitySurface s;
  s.cpi_s = read_raw<double>(buf, 16);
  s.hypothesis.chirp_hz_per_s = read_raw<double>(buf, 24);
  s.hypothesis.jerk_hz_per_s2 = read_raw<double>(buf, 32);

  std::size_t n_cells = n_delay * n_doppler;
  if (buf.size() != kHeaderBytes + n_cells * sizeof(float)) {
    throw ValidationError("surface dump payload size disagrees with header: " +
                          path.string());
  }
  s.power.resize(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) {
    s.power[i] = read_raw<float>(buf, kHeaderBytes + i * sizeof(float));
  }

  auto csv_bytes = read_file(axes_path(path), "surface axes");
  std::string text(csv_bytes.begin(), csv_bytes.end());
  std::istringstream lines(text);
  std::string line;
  if (!std::getline(lines, line) || line != "kind,index,value") {
    throw ValidationError("surface axes file malformed: " +
                          axes_path(path).string());
  }
  bool have_epoch = false;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw ValidationError("surface axes row malformed: " + line);
    }
    std::string kind = line.substr(0, c1);
    std::size_t index = std::stoul(line.substr(c1 + 1, c2 - c1 - 1));
    double value = std::strtod(line.c_str() + c2 + 1, nullptr);
    std::vector<double>* axis = nullptr;
    if (kind == "delay_s") {
      axis = &s.delay_axis_s;
    } else if (kind == "doppler_hz") {
      axis = &s.doppler_axis_hz;
    } else if (kind == "epoch_s") {
      s.epoch_s = value;
      have_epoch = true;
      continue;
    } else {
      throw ValidationError("surface axes row has unknown kind: " + kind);
    }
    if (index != axis->size()) {
      throw ValidationError("surface axes rows out of order at: " + line);
    }
    axis->push_back(value);
  }
  if (!have_epoch || s.delay_axis_s.size() != n_delay ||
      s.doppler_axis_hz.size() != n_doppler) {
    throw ValidationError("surface axes disagree with the dump header: " +
                          axes_path(path).string());
  }
  s.validate();
  return s;
}

void save_stream(const std::filesystem::path& path,
                 const ComplexBaseband& stream) {
  stream.validate();

  std::vector<char> buf;
  buf.reserve(stream.size() * 2 * sizeof(float));
  for (const auto& z : stream.samples) {
    append_raw<float>(buf, static_cast<float>(z.real()));
    append_raw<float>(buf, static_cast<float>(z.imag()));
  }
  write_file(path, buf.data(), buf.size(), "stream payload");

  nlohmann::ordered_json sidecar{{"sample_rate_hz", stream.sample_rate_hz},
                                 {"carrier_hz", stream.carrier_hz},
                                 {"epoch_s", stream.epoch_s}};
  auto text = sidecar.dump(2) + "\n";
  write_file(sidecar_path(path), text.data(), text.size(), "stream sidecar");
}

ComplexBaseband load_stream(const std::filesystem::path& path) {
  auto side = sidecar_path(path);
  if (!std::filesystem::exists(side)) {
    throw ValidationError("stream sidecar missing: " + side.string());
  }
  nlohmann::json j;
  try {
    auto text = read_file(side, "stream sidecar");
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("stream sidecar not valid JSON: " + side.string() +
                          ": " + e.what());
  }

  ComplexBaseband out;
  out.sample_rate_hz = sidecar_number(j, "sample_rate_hz", side);
  out.carrier_hz = sidecar_number(j, "carrier_hz", side);
  out.epoch_s = sidecar_number(j, "epoch_s", side);

  auto buf = read_file(path, "stream payload");
  if (buf.size() % (2 * sizeof(float)) != 0) {
    throw ValidationError(
        "stream payload is not a whole number of complex f32 samples: " +
        path.string());
  }
  std::size_t n = buf.size() / (2 * sizeof(float));
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto re = read_raw<float>(buf, 2 * i * sizeof(float));
    auto im = read_raw<float>(buf, (2 * i + 1) * sizeof(float));
    out.samples[i] = {static_cast<double>(re), static_cast<double>(im)};
  }
  out.validate();
  return out;
}

}  // namespace pbr
