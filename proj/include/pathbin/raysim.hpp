#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "pathbin/scenario.hpp"

namespace pathbin::sim {

enum class RayKind { kLos, kGround, kScatterer };

// One geometric path from TX to RX. At most one bounce.
struct GeometricRay {
  RayKind kind = RayKind::kLos;
  // Stable geometric identity: 0 = LOS, 1 = ground, 2 + 6*scatterer + face
  // for box reflections. Used as the binning oracle label.
  std::uint64_t ray_id = 0;
  double path_length_m = 0.0;
  double departure_azimuth_rad = 0.0;   // [0, 2pi)
  double departure_elevation_rad = 0.0; // [-pi/2, pi/2]
  double arrival_azimuth_rad = 0.0;
  double arrival_elevation_rad = 0.0;
  Eigen::Vector3d reflection_point{Eigen::Vector3d::Zero()};  // bounce only
  std::complex<double> reflection_coeff{1.0, 0.0};
};

// One detected multipath component at one RX position.
struct MpcRecord {
  int rx_index = 0;
  double alpha = 0.0;      // linear amplitude, 10^(power_dbm/20)
  double power_dbm = 0.0;
  double delay_s = 0.0;
  double aod_elevation_rad = 0.0;  // theta_t
  double aod_azimuth_rad = 0.0;    // phi_t
  double aoa_elevation_rad = 0.0;  // theta_r
  double aoa_azimuth_rad = 0.0;    // phi_r
  double phase_rad = 0.0;          // [0, 2pi)
  std::uint64_t true_ray_id = 0;
};

struct ChannelSnapshot {
  int rx_index = 0;
  Eigen::Vector3d rx_position{Eigen::Vector3d::Zero()};
  std::vector<MpcRecord> mpcs;
};

struct ChannelDataset {
  ScenarioConfig config;
  std::vector<ChannelSnapshot> snapshots;  // strictly ordered by rx_index
};

// N equally spaced points from trajectory_start to trajectory_end.
std::vector<Eigen::Vector3d> build_rx_positions(const ScenarioConfig& config);

// True when the open segment (a, b) passes through the box interior.
// Endpoints touching a face do not count as blocked.
bool segment_blocked_by_box(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                            const Scatterer& box);

// LOS + ground image + one ray per visible scatterer face (image method,
// single bounce). Blocked rays are omitted; the list can hold LOS alone.
std::vector<GeometricRay> trace_rays(const Eigen::Vector3d& tx, const Eigen::Vector3d& rx,
                                     const ScenarioConfig& scene);

// Vertical-polarization Fresnel coefficient at the given grazing angle.
// Throws std::domain_error when grazing_angle <= 0.
std::complex<double> fresnel_reflection(double eps_r, double grazing_angle_rad);

// Vertical-dipole donut pattern, unity at the horizon, null at zenith.
double antenna_gain(double elevation_rad);

// Free-space path loss in dB over distance d at wavelength lambda.
double fspl_db(double distance_m, double wavelength_m);

// Converts a geometric ray into the six-parameter channel record.
// straight_line_m is the per-position TX-RX distance (phase reference d0).
MpcRecord ray_to_mpc(const GeometricRay& ray, const ScenarioConfig& config, int rx_index,
                     double straight_line_m);

// Keeps exactly the MPCs with power above the threshold, order preserved.
ChannelSnapshot apply_power_threshold(const ChannelSnapshot& snapshot, double threshold_dbm);

// Renders the snapshot onto a uniform delay grid (nearest-tap assignment).
// Taps outside the grid are dropped.
std::vector<std::complex<double>> assemble_cir(const ChannelSnapshot& snapshot,
                                               double tap_spacing_s, std::size_t num_taps);

// One thresholded snapshot per RX position. Deterministic given the config.
ChannelDataset simulate(const ScenarioConfig& config);

}  // namespace pathbin::sim
