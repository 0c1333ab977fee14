#include "pathbin/scenario.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pathbin::sim {
namespace {

// Signed distance from `p` to the vertical plane through the trajectory,
// positive on the side of the plane normal. Degenerates to 0 when the
// trajectory has no horizontal extent.
double side_of_trajectory(const ScenarioConfig& cfg, const Eigen::Vector3d& p) {
  Eigen::Vector2d a = cfg.trajectory_start.head<2>();
  Eigen::Vector2d b = cfg.trajectory_end.head<2>();
  Eigen::Vector2d dir = b - a;
  if (dir.norm() < 1e-12) return 0.0;
  dir.normalize();
  Eigen::Vector2d normal(-dir.y(), dir.x());
  return normal.dot(p.head<2>() - a);
}

}  // namespace

void ScenarioConfig::validate() const {
  if (num_positions < 2) throw std::invalid_argument("num_positions must be >= 2");
  if (!(carrier_frequency_hz > 0.0)) throw std::invalid_argument("carrier_frequency_hz must be > 0");
  if (!(trajectory_length() > 0.0)) throw std::invalid_argument("trajectory must have positive length");
  if (!(uav_velocity_mps > 0.0)) throw std::invalid_argument("uav_velocity_mps must be > 0");
  if (!(ground_permittivity > 1.0)) throw std::invalid_argument("ground_permittivity must be > 1");
  if (!(scatterer_permittivity > 1.0)) throw std::invalid_argument("scatterer_permittivity must be > 1");
  if (tx_position.z() <= 0.0) throw std::invalid_argument("tx must be above the ground plane");
  if (trajectory_start.z() <= 0.0 || trajectory_end.z() <= 0.0)
    throw std::invalid_argument("trajectory must stay above the ground plane");

  int side_sign = 0;
  for (std::size_t i = 0; i < scatterers.size(); ++i) {
    const Scatterer& s = scatterers[i];
    if (!(s.extents.minCoeff() > 0.0))
      throw std::invalid_argument("scatterer " + std::to_string(i) + " has non-positive extent");
    if (s.min_corner().z() < 0.0)
      throw std::invalid_argument("scatterer " + std::to_string(i) + " extends below the ground plane");
    double side = side_of_trajectory(*this, s.center);
    if (side == 0.0)
      throw std::invalid_argument("scatterer " + std::to_string(i) + " sits on the trajectory plane");
    int sign = side > 0.0 ? 1 : -1;
    if (side_sign == 0) side_sign = sign;
    if (sign != side_sign)
      throw std::invalid_argument("scatterers must all lie on one side of the trajectory");
  }
}

}  // namespace pathbin::sim
