#include "pbr/geometry.hpp"

#include <cmath>
#include <string>

#include "pbr/errors.hpp"

namespace pbr {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

// Minimum distance between the target and either site before the range
// derivatives blow up.
constexpr double kSiteClearanceM = 1e-6;

struct LegDerivatives {
  double rho, d1, d2, d3;
};

// Range rate chain for |p(t) - site| with analytic position derivatives.
LegDerivatives leg_derivatives(const Vec3& r, const Vec3& v, const Vec3& a,
                               const Vec3& j) {
  double rho = r.norm();
  require(rho > kSiteClearanceM, "target coincides with a site");
  double s = r.dot(v);
  double sp = v.dot(v) + r.dot(a);
  double spp = 3.0 * v.dot(a) + r.dot(j);
  double rho3 = rho * rho * rho;
  double rho5 = rho3 * rho * rho;
  LegDerivatives out;
  out.rho = rho;
  out.d1 = s / rho;
  out.d2 = sp / rho - s * s / rho3;
  out.d3 = spp / rho - 3.0 * s * sp / rho3 + 3.0 * s * s * s / rho5;
  return out;
}

Vec3 orbit_position(const CircularOrbitTrajectory& orbit, double t_s) {
  const double radius = orbit.orbit_radius_m();
  const double beta = orbit.ground_track_offset_m / radius;
  const Vec3 normal{0.0, std::sin(beta), std::cos(beta)};
  const Vec3 centre{0.0, 0.0, -kEarthRadiusM};
  const double theta =
      orbit.phase_at_epoch_rad + orbit.angular_rate_rad_s() * t_s;
  Vec3 along{std::sin(theta), 0.0, 0.0};
  return centre + along * radius + normal * (radius * std::cos(theta));
}

double bistatic_range_at(const Site& tx, const Site& rx,
                         const CircularOrbitTrajectory& orbit, double t_s) {
  Vec3 p = orbit_position(orbit, t_s);
  double to_tx = (p - tx.position_m).norm();
  double to_rx = (p - rx.position_m).norm();
  require(to_tx > kSiteClearanceM && to_rx > kSiteClearanceM,
          "target coincides with a site");
  return to_tx + to_rx;
}

}  // namespace

void CircularOrbitTrajectory::validate() const {
  require(altitude_m > kMinOrbitAltitudeM && altitude_m < kMaxOrbitAltitudeM,
          "orbit altitude outside the supported band");
}

Vec3 trajectory_position(const Trajectory& traj, double t_s) {
  if (const auto* poly = std::get_if<PolynomialTrajectory>(&traj)) {
    return poly->p0 + poly->p1 * t_s + poly->p2 * (t_s * t_s) +
           poly->p3 * (t_s * t_s * t_s);
  }
  const auto& orbit = std::get<CircularOrbitTrajectory>(traj);
  return orbit_position(orbit, t_s);
}

BistaticObservables observables(const Site& tx, const Site& rx,
                                const Trajectory& traj,
                                const std::vector<double>& t_grid_s,
                                double carrier_hz) {
  require(carrier_hz > 0.0, "carrier frequency must be positive");
  require(!t_grid_s.empty(), "time grid is empty");
  for (std::size_t i = 1; i < t_grid_s.size(); ++i)
    require(t_grid_s[i] > t_grid_s[i - 1], "time grid must be increasing");
  if (const auto* orbit = std::get_if<CircularOrbitTrajectory>(&traj))
    orbit->validate();

  BistaticObservables obs;
  obs.lambda_m = kSpeedOfLight / carrier_hz;
  obs.baseline_m = (tx.position_m - rx.position_m).norm();
  obs.t_s = t_grid_s;
  obs.range_m.reserve(t_grid_s.size());
  obs.delay_s.reserve(t_grid_s.size());
  obs.doppler_hz.reserve(t_grid_s.size());
  obs.chirp_hz_per_s.reserve(t_grid_s.size());
  obs.jerk_hz_per_s2.reserve(t_grid_s.size());

  auto push = [&](double range, double d1, double d2, double d3) {
    obs.range_m.push_back(range);
    obs.delay_s.push_back((range - obs.baseline_m) / kSpeedOfLight);
    obs.doppler_hz.push_back(-d1 / obs.lambda_m);
    obs.chirp_hz_per_s.push_back(-d2 / obs.lambda_m);
    obs.jerk_hz_per_s2.push_back(-d3 / obs.lambda_m);
  };

  if (const auto* poly = std::get_if<PolynomialTrajectory>(&traj)) {
    for (double t : t_grid_s) {
      Vec3 p = poly->p0 + poly->p1 * t + poly->p2 * (t * t) +
               poly->p3 * (t * t * t);
      Vec3 v = poly->p1 + poly->p2 * (2.0 * t) + poly->p3 * (3.0 * t * t);
      Vec3 a = poly->p2 * 2.0 + poly->p3 * (6.0 * t);
      Vec3 j = poly->p3 * 6.0;
      auto tx_leg = leg_derivatives(p - tx.position_m, v, a, j);
      auto rx_leg = leg_derivatives(p - rx.position_m, v, a, j);
      push(tx_leg.rho + rx_leg.rho, tx_leg.d1 + rx_leg.d1,
           tx_leg.d2 + rx_leg.d2, tx_leg.d3 + rx_leg.d3);
    }
    return obs;
  }

  const auto& orbit = std::get<CircularOrbitTrajectory>(traj);
  const double h = 0.02;
  for (double t : t_grid_s) {
    double f0 = bistatic_range_at(tx, rx, orbit, t);
    double f1m = bistatic_range_at(tx, rx, orbit, t - h);
    double f1p = bistatic_range_at(tx, rx, orbit, t + h);
    double f2m = bistatic_range_at(tx, rx, orbit, t - 2.0 * h);
    double f2p = bistatic_range_at(tx, rx, orbit, t + 2.0 * h);
    double d1 = (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * h);
    double d2 = (-f2p + 16.0 * f1p - 30.0 * f0 + 16.0 * f1m - f2m) /
                (12.0 * h * h);
    double d3 = (f2p - 2.0 * f1p + 2.0 * f1m - f2m) / (2.0 * h * h * h);
    push(f0, d1, d2, d3);
  }
  return obs;
}

PhaseHistory render_phase_history(const BistaticObservables& obs,
                                  double sample_rate_hz, double rcs_amplitude,
                                  double t_start_s, std::size_t n_samples) {
  require(sample_rate_hz > 0.0, "sample rate must be positive");
  require(obs.size() >= 4, "need at least 4 observable samples");
  require(obs.lambda_m > 0.0, "observables carry no wavelength");
  const std::size_t m = obs.size();
  const double t0 = obs.t_s.front();
  const double dt = obs.t_s[1] - obs.t_s[0];
  for (std::size_t i = 1; i < m; ++i)
    require(std::abs(obs.t_s[i] - obs.t_s[i - 1] - dt) <=
                1e-9 * std::max(1.0, std::abs(dt)),
            "observables must lie on a uniform time grid");

  PhaseHistory hist;
  hist.delay_s.resize(n_samples);
  hist.phase_cycles.resize(n_samples);
  hist.amplitude.assign(n_samples, rcs_amplitude);
  for (std::size_t n = 0; n < n_samples; ++n) {
    double t = t_start_s + static_cast<double>(n) / sample_rate_hz;
    double pos = (t - t0) / dt;
    auto cell = static_cast<long>(std::floor(pos));
    double u = pos - static_cast<double>(cell);
    if (cell == static_cast<long>(m) - 2 && u < 1e-9) {
      cell -= 1;
      u += 1.0;
    }
    require(cell >= 1 && cell <= static_cast<long>(m) - 3,
            "sample span must stay one grid cell inside the observables");
    const double r0 = obs.range_m[static_cast<std::size_t>(cell - 1)];
    const double r1 = obs.range_m[static_cast<std::size_t>(cell)];
    const double r2 = obs.range_m[static_cast<std::size_t>(cell + 1)];
    const double r3 = obs.range_m[static_cast<std::size_t>(cell + 2)];
    // Catmull-Rom in the cell, C1 across cell boundaries.
    double range =
        0.5 * (2.0 * r1 + u * (r2 - r0 +
                               u * (2.0 * r0 - 5.0 * r1 + 4.0 * r2 - r3 +
                                    u * (3.0 * (r1 - r2) + r3 - r0))));
    double excess = range - obs.baseline_m;
    hist.delay_s[n] = excess / kSpeedOfLight;
    hist.phase_cycles[n] = -excess / obs.lambda_m;
  }
  return hist;
}

}  // namespace pbr
