#pragma once

#include <cmath>
#include <variant>
#include <vector>

#include "pbr/signal_core.hpp"

namespace pbr {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kEarthMu = 3.986004418e14;
inline constexpr double kMinOrbitAltitudeM = 100e3;
inline constexpr double kMaxOrbitAltitudeM = 2000e3;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  bool operator==(const Vec3&) const = default;
};

// Transmitter or receiver location in the local scene frame (metres, ENU-style
// with the origin on the ground and +z up).
struct Site {
  Vec3 position_m;
  bool operator==(const Site&) const = default;
};

// position(t) = p0 + p1*t + p2*t^2 + p3*t^3, metres and seconds.
struct PolynomialTrajectory {
  Vec3 p0, p1, p2, p3;
  bool operator==(const PolynomialTrajectory&) const = default;
};

// Circular orbit over a spherical Earth whose centre sits at
// (0, 0, -earth_radius) in the scene frame. The orbital plane is tilted so
// the ground track passes ground_track_offset_m to the +y side of the origin;
// phase_at_epoch_rad locates the platform along the orbit at t = 0, with
// phase 0 directly over the origin and motion towards +x. Orbital speed is
// fixed at sqrt(mu / orbit_radius).
struct CircularOrbitTrajectory {
  double altitude_m = 0.0;
  double ground_track_offset_m = 0.0;
  double phase_at_epoch_rad = 0.0;
  bool operator==(const CircularOrbitTrajectory&) const = default;

  double orbit_radius_m() const { return kEarthRadiusM + altitude_m; }
  double angular_rate_rad_s() const {
    return std::sqrt(kEarthMu / (orbit_radius_m() * orbit_radius_m() *
                                 orbit_radius_m()));
  }
  void validate() const;
};

using Trajectory = std::variant<PolynomialTrajectory, CircularOrbitTrajectory>;

Vec3 trajectory_position(const Trajectory& traj, double t_s);

// Kinematics of the tx -> target -> rx path sampled on a time grid.
// delay_s is referenced to the direct tx -> rx path; doppler_hz is the rate
// of carrier phase in Hz (approaching geometry gives positive doppler),
// chirp its first and jerk its second time derivative.
struct BistaticObservables {
  std::vector<double> t_s;
  std::vector<double> range_m;    // bistatic sum |target-tx| + |target-rx|
  std::vector<double> delay_s;    // (range_m - baseline_m) / c
  std::vector<double> doppler_hz;
  std::vector<double> chirp_hz_per_s;
  std::vector<double> jerk_hz_per_s2;
  double lambda_m = 0.0;
  double baseline_m = 0.0;

  std::size_t size() const { return t_s.size(); }
};

// Polynomial trajectories use closed-form range derivatives; orbits fall back
// to 5-point central finite differences of the bistatic range.
BistaticObservables observables(const Site& tx, const Site& rx,
                                const Trajectory& traj,
                                const std::vector<double>& t_grid_s,
                                double carrier_hz);

// Per-sample modulation program for synthesize_echo, built by cubic
// interpolation of the observables' bistatic range over a uniform grid.
// Samples run t_start_s, t_start_s + 1/fs, ... and must stay at least one
// grid cell inside the observables' span.
PhaseHistory render_phase_history(const BistaticObservables& obs,
                                  double sample_rate_hz, double rcs_amplitude,
                                  double t_start_s, std::size_t n_samples);

}  // namespace pbr
