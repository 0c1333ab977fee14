#pragma once

#include <cstdint>
#include <vector>

#include "pathbin/binning.hpp"

namespace pathbin::pred {

struct PoissonModel {
  double birth_rate = 0.0;               // births per rx position
  double death_rate = 0.0;               // deaths per alive-bin-position (exposure basis)
  double death_rate_per_position = 0.0;  // deaths per rx position, reported alternative
  double delta_n = 1.0;                  // spatial step L/N in meters
  long long births = 0;
  long long deaths = 0;
  long long exposure = 0;  // sum of alive counts
  int positions = 0;
};

// Rates from event counts: birth_rate = births / N, death_rate = deaths /
// total alive exposure. Throws when the exposure is zero.
PoissonModel estimate_rates(const std::vector<track::BirthDeathEvent>& events,
                            const std::vector<int>& alive_count, double delta_n);

// (mean^y e^-mean) / y!
double poisson_pmf(int y, double mean);

// Event-count PMFs over one inter-position step.
double death_pmf(int y, const PoissonModel& model);
double birth_pmf(int y, const PoissonModel& model);

// Constant memoryless point prediction 1 / death_rate, independent of the
// bin and of how much of it has been observed. Throws when death_rate = 0.
double predict_lifespan_poisson(const PoissonModel& model);

// Birth/death counting chain on the alive-bin count: per step +1 with
// probability birth_rate, -1 with probability state * death_rate.
std::vector<int> simulate_chain(const PoissonModel& model, int steps, std::uint64_t seed,
                                int initial_state = 0);

}  // namespace pathbin::pred
