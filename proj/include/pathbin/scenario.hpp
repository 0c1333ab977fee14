#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace pathbin::sim {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;

// Axis-aligned box obstacle. `extents` are full edge lengths.
struct Scatterer {
  Eigen::Vector3d center{Eigen::Vector3d::Zero()};
  Eigen::Vector3d extents{Eigen::Vector3d::Ones()};

  Eigen::Vector3d min_corner() const { return center - 0.5 * extents; }
  Eigen::Vector3d max_corner() const { return center + 0.5 * extents; }
};

// Ground-to-air scene: fixed TX, straight RX trajectory, box scatterers on
// one side of the trajectory, flat ground at z = 0.
struct ScenarioConfig {
  double carrier_frequency_hz = 28e9;
  Eigen::Vector3d tx_position{0.0, 0.0, 2.0};
  Eigen::Vector3d trajectory_start{-50.0, 0.0, 40.0};
  Eigen::Vector3d trajectory_end{50.0, 0.0, 40.0};
  int num_positions = 2;
  double uav_velocity_mps = 10.0;
  double ground_permittivity = 3.5;
  double scatterer_permittivity = 5.31;
  double power_threshold_dbm = -175.5;
  double tx_power_dbm = 20.0;
  std::vector<Scatterer> scatterers;
  std::uint64_t rng_seed = 1;

  double trajectory_length() const { return (trajectory_end - trajectory_start).norm(); }
  double wavelength() const { return kSpeedOfLight / carrier_frequency_hz; }
  double position_spacing() const { return trajectory_length() / (num_positions - 1); }

  // Throws std::invalid_argument on violated invariants (N >= 2, fc > 0,
  // L > 0, permittivities > 1, positive extents, scatterers on one side).
  void validate() const;
};

}  // namespace pathbin::sim
