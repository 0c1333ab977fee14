#include "pathbin/raysim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pathbin::sim {
namespace {

constexpr double kEps = 1e-9;

double wrap_azimuth(double a) {
  double w = std::fmod(a, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  return w;
}

void set_departure(GeometricRay& ray, const Eigen::Vector3d& tx, const Eigen::Vector3d& toward) {
  Eigen::Vector3d u = (toward - tx).normalized();
  ray.departure_azimuth_rad = wrap_azimuth(std::atan2(u.y(), u.x()));
  ray.departure_elevation_rad = std::asin(std::clamp(u.z(), -1.0, 1.0));
}

void set_arrival(GeometricRay& ray, const Eigen::Vector3d& rx, const Eigen::Vector3d& toward) {
  Eigen::Vector3d u = (toward - rx).normalized();
  ray.arrival_azimuth_rad = wrap_azimuth(std::atan2(u.y(), u.x()));
  ray.arrival_elevation_rad = std::asin(std::clamp(u.z(), -1.0, 1.0));
}

bool segment_blocked_by_any(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                            const ScenarioConfig& scene) {
  for (const Scatterer& s : scene.scatterers)
    if (segment_blocked_by_box(a, b, s)) return true;
  return false;
}

}  // namespace

std::vector<Eigen::Vector3d> build_rx_positions(const ScenarioConfig& config) {
  if (config.num_positions < 2) throw std::invalid_argument("num_positions must be >= 2");
  if (!(config.trajectory_length() > 0.0))
    throw std::invalid_argument("trajectory must have positive length");
  std::vector<Eigen::Vector3d> out;
  out.reserve(static_cast<std::size_t>(config.num_positions));
  for (int n = 0; n < config.num_positions; ++n) {
    double t = static_cast<double>(n) / (config.num_positions - 1);
    out.push_back(config.trajectory_start + t * (config.trajectory_end - config.trajectory_start));
  }
  return out;
}

bool segment_blocked_by_box(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                            const Scatterer& box) {
  // Slab test over the open parameter interval so endpoints resting on a
  // face (the reflection point itself) do not register as blockage.
  Eigen::Vector3d lo = box.min_corner();
  Eigen::Vector3d hi = box.max_corner();
  Eigen::Vector3d d = b - a;
  double t_enter = kEps;
  double t_exit = 1.0 - kEps;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (a[k] < lo[k] + kEps || a[k] > hi[k] - kEps) return false;
      continue;
    }
    double t0 = (lo[k] - a[k]) / d[k];
    double t1 = (hi[k] - a[k]) / d[k];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0 + kEps);
    t_exit = std::min(t_exit, t1 - kEps);
    if (t_enter >= t_exit) return false;
  }
  return true;
}

std::complex<double> fresnel_reflection(double eps_r, double grazing_angle_rad) {
  if (!(grazing_angle_rad > 0.0)) throw std::domain_error("grazing angle must be > 0");
  double s = std::sin(grazing_angle_rad);
  double c = std::cos(grazing_angle_rad);
  double root = std::sqrt(std::max(eps_r - c * c, 0.0));
  double gamma = (eps_r * s - root) / (eps_r * s + root);
  return {gamma, 0.0};
}

double antenna_gain(double elevation_rad) {
  double c = std::cos(elevation_rad);
  return c * c;
}

double fspl_db(double distance_m, double wavelength_m) {
  return 20.0 * std::log10(4.0 * kPi * distance_m / wavelength_m);
}

std::vector<GeometricRay> trace_rays(const Eigen::Vector3d& tx, const Eigen::Vector3d& rx,
                                     const ScenarioConfig& scene) {
  if ((tx - rx).norm() < 1e-12) throw std::invalid_argument("tx and rx coincide");
  std::vector<GeometricRay> rays;

  if (!segment_blocked_by_any(tx, rx, scene)) {
    GeometricRay los;
    los.kind = RayKind::kLos;
    los.ray_id = 0;
    los.path_length_m = (rx - tx).norm();
    set_departure(los, tx, rx);
    set_arrival(los, rx, tx);
    rays.push_back(los);
  }

  // Ground bounce via the TX image under z = 0.
  {
    Eigen::Vector3d tx_img(tx.x(), tx.y(), -tx.z());
    double denom = rx.z() - tx_img.z();
    if (denom > kEps) {
      double t = -tx_img.z() / denom;
      if (t > kEps && t < 1.0 - kEps) {
        Eigen::Vector3d refl = tx_img + t * (rx - tx_img);
        if (!segment_blocked_by_any(tx, refl, scene) &&
            !segment_blocked_by_any(refl, rx, scene)) {
          GeometricRay g;
          g.kind = RayKind::kGround;
          g.ray_id = 1;
          g.path_length_m = (rx - tx_img).norm();
          g.reflection_point = refl;
          double grazing = std::asin(std::clamp((tx.z() + rx.z()) / g.path_length_m, 0.0, 1.0));
          g.reflection_coeff = fresnel_reflection(scene.ground_permittivity, grazing);
          set_departure(g, tx, refl);
          set_arrival(g, rx, refl);
          rays.push_back(g);
        }
      }
    }
  }

  // Single bounce off each box face that faces both endpoints.
  for (std::size_t si = 0; si < scene.scatterers.size(); ++si) {
    const Scatterer& box = scene.scatterers[si];
    Eigen::Vector3d lo = box.min_corner();
    Eigen::Vector3d hi = box.max_corner();
    for (int face = 0; face < 6; ++face) {
      int axis = face / 2;
      double sign = (face % 2 == 0) ? -1.0 : 1.0;
      double plane = (sign < 0.0) ? lo[axis] : hi[axis];
      double tx_side = sign * (tx[axis] - plane);
      double rx_side = sign * (rx[axis] - plane);
      if (tx_side <= kEps || rx_side <= kEps) continue;

      Eigen::Vector3d tx_img = tx;
      tx_img[axis] = 2.0 * plane - tx[axis];
      double denom = rx[axis] - tx_img[axis];
      if (std::abs(denom) < 1e-15) continue;
      double t = (plane - tx_img[axis]) / denom;
      if (t <= kEps || t >= 1.0 - kEps) continue;
      Eigen::Vector3d refl = tx_img + t * (rx - tx_img);
      refl[axis] = plane;

      bool inside = true;
      for (int k = 0; k < 3; ++k) {
        if (k == axis) continue;
        if (refl[k] < lo[k] - kEps || refl[k] > hi[k] + kEps) inside = false;
      }
      if (!inside) continue;
      if (segment_blocked_by_any(tx, refl, scene) || segment_blocked_by_any(refl, rx, scene))
        continue;

      GeometricRay r;
      r.kind = RayKind::kScatterer;
      r.ray_id = 2 + 6 * static_cast<std::uint64_t>(si) + static_cast<std::uint64_t>(face);
      r.path_length_m = (rx - tx_img).norm();
      r.reflection_point = refl;
      Eigen::Vector3d incident = (refl - tx).normalized();
      double grazing = std::asin(std::clamp(std::abs(incident[axis]), 0.0, 1.0));
      if (grazing <= 0.0) continue;
      r.reflection_coeff = fresnel_reflection(scene.scatterer_permittivity, grazing);
      set_departure(r, tx, refl);
      set_arrival(r, rx, refl);
      rays.push_back(r);
    }
  }
  return rays;
}

MpcRecord ray_to_mpc(const GeometricRay& ray, const ScenarioConfig& config, int rx_index,
                     double straight_line_m) {
  MpcRecord m;
  m.rx_index = rx_index;
  m.true_ray_id = ray.ray_id;
  double lambda = config.wavelength();
  double d = ray.path_length_m;
  m.delay_s = d / kSpeedOfLight;

  double gamma_db = 0.0;
  if (ray.kind != RayKind::kLos)
    gamma_db = 20.0 * std::log10(std::max(std::abs(ray.reflection_coeff), 1e-300));
  double g_tx = antenna_gain(ray.departure_elevation_rad);
  double g_rx = antenna_gain(ray.arrival_elevation_rad);
  double gain_db = 10.0 * std::log10(std::max(g_tx * g_rx, 1e-300));
  m.power_dbm = config.tx_power_dbm - fspl_db(d, lambda) + gamma_db + gain_db;
  m.alpha = std::pow(10.0, m.power_dbm / 20.0);

  double excess = d - straight_line_m;
  double phase = std::fmod(2.0 * kPi * excess / lambda, 2.0 * kPi);
  if (phase < 0.0) phase += 2.0 * kPi;
  m.phase_rad = phase;

  m.aod_elevation_rad = ray.departure_elevation_rad;
  m.aod_azimuth_rad = ray.departure_azimuth_rad;
  m.aoa_elevation_rad = ray.arrival_elevation_rad;
  m.aoa_azimuth_rad = ray.arrival_azimuth_rad;
  return m;
}

ChannelSnapshot apply_power_threshold(const ChannelSnapshot& snapshot, double threshold_dbm) {
  ChannelSnapshot out;
  out.rx_index = snapshot.rx_index;
  out.rx_position = snapshot.rx_position;
  for (const MpcRecord& m : snapshot.mpcs)
    if (m.power_dbm > threshold_dbm) out.mpcs.push_back(m);
  return out;
}

std::vector<std::complex<double>> assemble_cir(const ChannelSnapshot& snapshot,
                                               double tap_spacing_s, std::size_t num_taps) {
  if (!(tap_spacing_s > 0.0)) throw std::invalid_argument("tap spacing must be > 0");
  std::vector<std::complex<double>> h(num_taps, {0.0, 0.0});
  for (const MpcRecord& m : snapshot.mpcs) {
    auto idx = static_cast<long long>(std::llround(m.delay_s / tap_spacing_s));
    if (idx < 0 || idx >= static_cast<long long>(num_taps)) continue;
    h[static_cast<std::size_t>(idx)] += std::polar(m.alpha, m.phase_rad);
  }
  return h;
}

ChannelDataset simulate(const ScenarioConfig& config) {
  config.validate();
  ChannelDataset ds;
  ds.config = config;
  std::vector<Eigen::Vector3d> positions = build_rx_positions(config);
  ds.snapshots.reserve(positions.size());
  for (std::size_t n = 0; n < positions.size(); ++n) {
    ChannelSnapshot snap;
    snap.rx_index = static_cast<int>(n);
    snap.rx_position = positions[n];
    double d0 = (positions[n] - config.tx_position).norm();
    for (const GeometricRay& ray : trace_rays(config.tx_position, positions[n], config))
      snap.mpcs.push_back(ray_to_mpc(ray, config, static_cast<int>(n), d0));
    ds.snapshots.push_back(apply_power_threshold(snap, config.power_threshold_dbm));
  }
  return ds;
}

}  // namespace pathbin::sim
