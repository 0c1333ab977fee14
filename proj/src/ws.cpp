#include "pathbin/predictors/ws.hpp"

#include <algorithm>
#include <stdexcept>

namespace pathbin::pred {

WsModel fit_ws(const Eigen::MatrixXd& V, const Eigen::VectorXd& X) {
  if (V.rows() != X.size()) throw std::invalid_argument("row count mismatch");
  if (V.rows() < V.cols()) throw std::invalid_argument("need at least as many rows as features");
  if (!V.allFinite() || !X.allFinite()) throw std::invalid_argument("non-finite design matrix");

  WsModel model;
  Eigen::MatrixXd A = V.transpose() * V;
  Eigen::VectorXd b = V.transpose() * X;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
  if (qr.rank() < V.cols()) {
    model.ridge_used = true;
    model.ridge_lambda = 1e-8 * A.trace() / static_cast<double>(V.cols());
    A.diagonal().array() += model.ridge_lambda;
  }
  model.weights = A.ldlt().solve(b);
  return model;
}

double predict_ws_raw(const WsModel& model, const Eigen::VectorXd& row) {
  if (row.size() != model.weights.size()) throw std::invalid_argument("feature width mismatch");
  return model.weights.dot(row);
}

double predict_ws(const WsModel& model, const Eigen::VectorXd& row, double covered_length) {
  return std::max(predict_ws_raw(model, row), covered_length);
}

SemiMarkovEstimate estimate_semi_markov(const std::vector<track::PathBin>& bins) {
  bool any_closed = false;
  int max_len = 0;
  for (const auto& b : bins) {
    any_closed = any_closed || b.closed;
    max_len = std::max(max_len, b.lifespan());
  }
  if (!any_closed) throw std::invalid_argument("no closed bins to estimate from");

  SemiMarkovEstimate est;
  est.reached.assign(static_cast<std::size_t>(max_len), 0);
  est.died.assign(static_cast<std::size_t>(max_len), 0);
  for (const auto& b : bins) {
    for (int n = 1; n <= b.lifespan(); ++n) ++est.reached[static_cast<std::size_t>(n - 1)];
    if (b.closed) ++est.died[static_cast<std::size_t>(b.lifespan() - 1)];
  }
  est.death_prob.assign(static_cast<std::size_t>(max_len), 0.0);
  for (int n = 0; n < max_len; ++n) {
    if (est.reached[static_cast<std::size_t>(n)] > 0)
      est.death_prob[static_cast<std::size_t>(n)] =
          static_cast<double>(est.died[static_cast<std::size_t>(n)]) /
          static_cast<double>(est.reached[static_cast<std::size_t>(n)]);
  }

  std::vector<int> births;
  for (const auto& b : bins) births.push_back(b.birth_rx);
  std::sort(births.begin(), births.end());
  for (std::size_t i = 1; i < births.size(); ++i)
    est.birth_spacings.push_back(births[i] - births[i - 1]);
  return est;
}

}  // namespace pathbin::pred
