#include <cmath>
#include <vector>

#include "doctest.h"
#include "pathbin/predictors/ws.hpp"
#include "pathbin/rng.hpp"

using namespace pathbin;
using namespace pathbin::pred;

namespace {

Eigen::MatrixXd random_design(int rows, int cols, std::uint64_t seed) {
  RandomStream rng(seed);
  Eigen::MatrixXd V(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) V(r, c) = rng.uniform(-2.0, 2.0);
  return V;
}

double sse(const Eigen::MatrixXd& V, const Eigen::VectorXd& X, const Eigen::VectorXd& w) {
  return (V * w - X).squaredNorm();
}

// Independent oracle: plain gradient descent on the least-squares loss.
Eigen::VectorXd iterative_ls(const Eigen::MatrixXd& V, const Eigen::VectorXd& X, int iters) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(V.cols());
  Eigen::MatrixXd A = V.transpose() * V;
  double step = 1.0 / (A.operatorNorm() + 1e-12);
  for (int i = 0; i < iters; ++i) w -= step * (A * w - V.transpose() * X);
  return w;
}

track::PathBin bin_of_length(int id, int birth, int len, bool closed) {
  track::PathBin b;
  b.id = id;
  b.birth_rx = birth;
  for (int i = 0; i < len; ++i) {
    sim::MpcRecord m;
    m.rx_index = birth + i;
    b.records.push_back(m);
  }
  b.closed = closed;
  if (closed) b.death_rx = b.last_rx();
  return b;
}

}  // namespace

TEST_CASE("identity design returns the labels as weights") {
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(9, 9);
  Eigen::VectorXd X(9);
  for (int i = 0; i < 9; ++i) X(i) = i + 1.0;
  WsModel m = fit_ws(V, X);
  CHECK_FALSE(m.ridge_used);
  CHECK((m.weights - X).norm() < 1e-12);
}

TEST_CASE("planted weights are recovered and reproduced in predictions") {
  Eigen::MatrixXd V = random_design(200, 9, 31);
  Eigen::VectorXd w_star(9);
  for (int i = 0; i < 9; ++i) w_star(i) = std::pow(-1.0, i) * (i + 0.5);
  Eigen::VectorXd X = V * w_star;

  WsModel m = fit_ws(V, X);
  CHECK((m.weights - w_star).norm() / w_star.norm() < 1e-6);
  for (int r = 0; r < 20; ++r)
    CHECK(predict_ws_raw(m, V.row(r).transpose()) == doctest::Approx(X(r)).epsilon(1e-9));
}

TEST_CASE("normal-equation residual is orthogonal to the design") {
  Eigen::MatrixXd V = random_design(150, 9, 77);
  Eigen::VectorXd X(150);
  RandomStream rng(78);
  for (int r = 0; r < 150; ++r) X(r) = rng.uniform(1.0, 40.0);
  WsModel m = fit_ws(V, X);
  double rel = (V.transpose() * (V * m.weights - X)).norm() / (V.transpose() * X).norm();
  CHECK(rel < 1e-6);
}

TEST_CASE("duplicated column engages the ridge fallback") {
  Eigen::MatrixXd V = random_design(120, 9, 5);
  V.col(8) = V.col(3);  // exact collinearity
  Eigen::VectorXd X(120);
  RandomStream rng(6);
  for (int r = 0; r < 120; ++r) X(r) = rng.uniform(0.0, 30.0);

  WsModel m = fit_ws(V, X);
  CHECK(m.ridge_used);
  CHECK(m.ridge_lambda > 0.0);
  CHECK(m.weights.allFinite());

  // Held-out residual no worse than an independent iterative solver's.
  Eigen::MatrixXd Vh = random_design(60, 9, 7);
  Vh.col(8) = Vh.col(3);
  Eigen::VectorXd Xh = Vh * m.weights;  // same generating map applied out of sample
  Eigen::VectorXd w_iter = iterative_ls(V, X, 20000);
  CHECK(sse(Vh, Xh, m.weights) <= sse(Vh, Xh, w_iter) + 1e-6);
  CHECK(sse(V, X, m.weights) <= sse(V, X, w_iter) * (1.0 + 1e-6));
}

TEST_CASE("fitted weights sit at a loss minimum") {
  Eigen::MatrixXd V = random_design(80, 9, 11);
  Eigen::VectorXd X(80);
  RandomStream rng(12);
  for (int r = 0; r < 80; ++r) X(r) = rng.uniform(2.0, 25.0);
  WsModel m = fit_ws(V, X);
  double base = sse(V, X, m.weights);
  for (int i = 0; i < 9; ++i) {
    for (double eps : {1e-3, -1e-3}) {
      Eigen::VectorXd w = m.weights;
      w(i) += eps;
      CHECK(sse(V, X, w) >= base - 1e-12);
    }
  }
}

TEST_CASE("prediction is linear before clamping and clamped after") {
  WsModel m;
  m.weights = Eigen::VectorXd::Zero(9);
  m.weights(8) = 1.0;
  Eigen::VectorXd row = Eigen::VectorXd::Zero(9);
  row(8) = 4.0;
  CHECK(predict_ws_raw(m, row) == doctest::Approx(4.0));
  CHECK(predict_ws(m, row, 2.0) == doctest::Approx(4.0));
  CHECK(predict_ws(m, row, 6.0) == doctest::Approx(6.0));  // cannot die in the past

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(9);
  CHECK(predict_ws(m, zero, 3.0) == doctest::Approx(3.0));

  RandomStream rng(42);
  Eigen::VectorXd a(9), b(9);
  for (int i = 0; i < 9; ++i) {
    a(i) = rng.uniform(-1, 1);
    b(i) = rng.uniform(-1, 1);
    m.weights(i) = rng.uniform(-2, 2);
  }
  CHECK(predict_ws_raw(m, a + b) ==
        doctest::Approx(predict_ws_raw(m, a) + predict_ws_raw(m, b)).epsilon(1e-12));

  Eigen::VectorXd wide(5);
  CHECK_THROWS(predict_ws_raw(m, wide));
}

TEST_CASE("fit rejects degenerate inputs") {
  Eigen::MatrixXd V = random_design(5, 9, 1);
  Eigen::VectorXd X(5);
  X.setZero();
  CHECK_THROWS(fit_ws(V, X));  // fewer rows than features

  Eigen::MatrixXd V2 = random_design(12, 9, 2);
  Eigen::VectorXd X2(12);
  X2.setZero();
  X2(0) = std::nan("");
  CHECK_THROWS(fit_ws(V2, X2));
}

TEST_CASE("hazard table matches hand counts") {
  std::vector<track::PathBin> same;
  for (int i = 0; i < 6; ++i) same.push_back(bin_of_length(i, 0, 5, true));
  auto est = estimate_semi_markov(same);
  CHECK(est.death_prob[4] == doctest::Approx(1.0));
  for (int n = 0; n < 4; ++n) CHECK(est.death_prob[n] == 0.0);

  // 10 bins reach length 5, 2 die there, the rest live on.
  std::vector<track::PathBin> mixed;
  for (int i = 0; i < 2; ++i) mixed.push_back(bin_of_length(i, 0, 5, true));
  for (int i = 2; i < 10; ++i) mixed.push_back(bin_of_length(i, 0, 9, true));
  auto est2 = estimate_semi_markov(mixed);
  CHECK(est2.reached[4] == 10);
  CHECK(est2.died[4] == 2);
  CHECK(est2.death_prob[4] == doctest::Approx(0.2));

  // Hazard consistency: expected deaths reproduce the closed-bin count.
  double expected_deaths = 0.0;
  for (std::size_t n = 0; n < est2.death_prob.size(); ++n)
    expected_deaths += est2.death_prob[n] * est2.reached[n];
  CHECK(expected_deaths == doctest::Approx(10.0));

  CHECK_THROWS(estimate_semi_markov({}));
  std::vector<track::PathBin> open_only = {bin_of_length(0, 0, 4, false)};
  CHECK_THROWS(estimate_semi_markov(open_only));
}

TEST_CASE("birth spacings are the sorted inter-birth gaps") {
  std::vector<track::PathBin> bins = {bin_of_length(0, 0, 3, true), bin_of_length(1, 4, 3, true),
                                      bin_of_length(2, 10, 3, true)};
  auto est = estimate_semi_markov(bins);
  CHECK(est.birth_spacings == std::vector<int>{4, 6});
}
