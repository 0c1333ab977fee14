#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pathbin/binning.hpp"

namespace pathbin::pred {

struct WsModel {
  Eigen::VectorXd weights;  // one per feature column
  bool ridge_used = false;
  double ridge_lambda = 0.0;
  int replicates = 1;
};

// Hazard table indexed by covered-position count n (1-based): q(n) is the
// probability a bin that reached n positions dies there. Also collects the
// inter-birth spacing histogram as a diagnostic.
struct SemiMarkovEstimate {
  std::vector<int> reached;       // [n-1] bins with lifespan >= n
  std::vector<int> died;          // [n-1] closed bins with lifespan == n
  std::vector<double> death_prob; // died / reached
  std::vector<int> birth_spacings;
};

// Ordinary least squares via the normal equations. Rank-deficient designs
// fall back to ridge with lambda = 1e-8 * trace(VtV) / cols, flagged in
// the model.
WsModel fit_ws(const Eigen::MatrixXd& V, const Eigen::VectorXd& X);

double predict_ws_raw(const WsModel& model, const Eigen::VectorXd& row);

// Raw dot product clamped below by the already-covered prefix length.
double predict_ws(const WsModel& model, const Eigen::VectorXd& row, double covered_length);

SemiMarkovEstimate estimate_semi_markov(const std::vector<track::PathBin>& bins);

}  // namespace pathbin::pred
