#include "pathbin/predictors/poisson.hpp"

#include <cmath>
#include <stdexcept>

#include "pathbin/rng.hpp"

namespace pathbin::pred {

PoissonModel estimate_rates(const std::vector<track::BirthDeathEvent>& events,
                            const std::vector<int>& alive_count, double delta_n) {
  if (alive_count.empty()) throw std::invalid_argument("no positions");
  if (!(delta_n > 0.0)) throw std::invalid_argument("delta_n must be > 0");

  PoissonModel m;
  m.delta_n = delta_n;
  m.positions = static_cast<int>(alive_count.size());
  for (const auto& e : events)
    (e.kind == track::EventKind::kBirth ? m.births : m.deaths) += 1;
  for (int c : alive_count) m.exposure += c;

  m.birth_rate = static_cast<double>(m.births) / static_cast<double>(m.positions);
  m.death_rate_per_position =
      static_cast<double>(m.deaths) / static_cast<double>(m.positions);
  if (m.exposure == 0) throw std::invalid_argument("zero exposure, death rate undefined");
  m.death_rate = static_cast<double>(m.deaths) / static_cast<double>(m.exposure);
  return m;
}

double poisson_pmf(int y, double mean) {
  if (y < 0) return 0.0;
  if (mean == 0.0) return y == 0 ? 1.0 : 0.0;
  return std::exp(static_cast<double>(y) * std::log(mean) - mean - std::lgamma(y + 1.0));
}

double death_pmf(int y, const PoissonModel& model) { return poisson_pmf(y, model.death_rate); }

double birth_pmf(int y, const PoissonModel& model) { return poisson_pmf(y, model.birth_rate); }

double predict_lifespan_poisson(const PoissonModel& model) {
  if (!(model.death_rate > 0.0))
    throw std::invalid_argument("death rate is zero, expected lifespan unbounded");
  return 1.0 / model.death_rate;
}

std::vector<int> simulate_chain(const PoissonModel& model, int steps, std::uint64_t seed,
                                int initial_state) {
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (initial_state < 0) throw std::invalid_argument("state must be >= 0");
  double p = model.birth_rate;
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("birth probability outside [0, 1]");
  if (model.death_rate < 0.0) throw std::invalid_argument("death rate must be >= 0");

  RandomStream rng(seed);
  std::vector<int> traj;
  traj.reserve(static_cast<std::size_t>(steps) + 1);
  int state = initial_state;
  traj.push_back(state);
  for (int t = 0; t < steps; ++t) {
    double q = state * model.death_rate;
    if (p + q > 1.0)
      throw std::invalid_argument("step probabilities exceed 1, rates too large for the chain");
    double u = rng.uniform01();
    if (u < p) ++state;
    else if (u < p + q) --state;
    traj.push_back(state);
  }
  return traj;
}

}  // namespace pathbin::pred
