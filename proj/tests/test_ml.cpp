#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "pathbin/predictors/ml.hpp"
#include "pathbin/rng.hpp"

using namespace pathbin;
using namespace pathbin::pred;

namespace {

Eigen::VectorXd labels_of(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Six rows, nine features. Only feature 0 is informative: one class spread
// around 0 with label 5, the other around 2 with label 9. Equal priors and
// equal within-class variance put the optimal boundary at feature0 = 1.
struct BoundaryFixture {
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(6, 9);
  Eigen::VectorXd X = labels_of({5, 5, 5, 9, 9, 9});
  BoundaryFixture() {
    V(0, 0) = -0.1;
    V(1, 0) = 0.0;
    V(2, 0) = 0.1;
    V(3, 0) = 1.9;
    V(4, 0) = 2.0;
    V(5, 0) = 2.1;
  }
  Eigen::VectorXd query(double f0) const {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(9);
    q(0) = f0;
    return q;
  }
};

template <typename Classify>
double bisect_boundary(const Classify& cls, double lo, double hi) {
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    (cls(mid) == cls(lo) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Two well separated clusters with a wide margin on every feature, so any
// axis-aligned split a tree picks classifies the whole set correctly.
struct SeparableFixture {
  Eigen::MatrixXd V;
  Eigen::VectorXd X;
  SeparableFixture(int per_class, std::uint64_t seed) {
    RandomStream rng(seed);
    V.resize(2 * per_class, 9);
    X.resize(2 * per_class);
    for (int i = 0; i < 2 * per_class; ++i) {
      double center = i < per_class ? 0.0 : 10.0;
      for (int f = 0; f < 9; ++f) V(i, f) = center + 0.1 * rng.gaussian();
      X(i) = i < per_class ? 4.0 : 9.0;
    }
  }
};

}  // namespace

TEST_CASE("class binning keeps distinct values as their own classes") {
  auto cb = ClassBinning::from_labels(labels_of({3, 7, 12, 7, 3}));
  CHECK(cb.unit_classes());
  CHECK(cb.num_classes() == 3);
  CHECK(cb.representative(0) == 3.0);
  CHECK(cb.representative(1) == 7.0);
  CHECK(cb.representative(2) == 12.0);
  CHECK(cb.class_of(7.0) == 1);
  CHECK(cb.representative(cb.class_of(12.0)) == 12.0);
  // Off-grid labels snap to the nearest value, lower on ties.
  CHECK(cb.class_of(8.0) == 1);
  CHECK(cb.class_of(10.0) == 2);
  CHECK(cb.class_of(9.5) == 1);
}

TEST_CASE("width binning uses aligned intervals with midpoint representatives") {
  auto cb = ClassBinning::with_width(labels_of({2, 7, 12}), 5.0);
  CHECK_FALSE(cb.unit_classes());
  CHECK(cb.width() == 5.0);
  CHECK(cb.num_classes() == 3);
  // Label 12 falls in [10, 15) whose midpoint is 12.5.
  CHECK(cb.representative(cb.class_of(12.0)) == doctest::Approx(12.5));
  CHECK(cb.representative(cb.class_of(2.0)) == doctest::Approx(2.5));
  CHECK(cb.representative(cb.class_of(7.0)) == doctest::Approx(7.5));
  // Intervals align at multiples of the width, also below zero.
  auto neg = ClassBinning::with_width(labels_of({-3, 2}), 5.0);
  CHECK(neg.representative(neg.class_of(-3.0)) == doctest::Approx(-2.5));
}

TEST_CASE("many distinct labels fall back to width classes within the cap") {
  Eigen::VectorXd X(100);
  for (int i = 0; i < 100; ++i) X(i) = static_cast<double>(i + 1);
  auto cb = ClassBinning::from_labels(X, 40);
  CHECK_FALSE(cb.unit_classes());
  CHECK(cb.num_classes() <= 40);
  for (int i = 0; i < 100; ++i) {
    double rep = cb.representative(cb.class_of(X(i)));
    CHECK(std::abs(rep - X(i)) <= 0.5 * cb.width());
  }
}

TEST_CASE("class binning rejects empty or degenerate input") {
  CHECK_THROWS_AS(ClassBinning::from_labels(Eigen::VectorXd()), std::invalid_argument);
  CHECK_THROWS_AS(ClassBinning::with_width(labels_of({1, 2}), 0.0), std::invalid_argument);
}

TEST_CASE("lda places the two class boundary at the midpoint") {
  BoundaryFixture fx;
  auto classes = ClassBinning::from_labels(fx.X);
  auto model = fit_lda(fx.V, fx.X, classes);
  CHECK(model.regularized);  // constant features make the pooled covariance singular
  CHECK_FALSE(model.single_class);
  CHECK(predict_lda(model, fx.query(0.0), 0.0) == doctest::Approx(5.0));
  CHECK(predict_lda(model, fx.query(2.0), 0.0) == doctest::Approx(9.0));
  double boundary = bisect_boundary(
      [&](double f0) { return predict_lda_class(model, fx.query(f0)); }, 0.0, 2.0);
  CHECK(std::abs(boundary - 1.0) < 1e-6);
}

TEST_CASE("gaussian nb places the two class boundary at the midpoint") {
  BoundaryFixture fx;
  auto classes = ClassBinning::from_labels(fx.X);
  auto model = fit_nb(fx.V, fx.X, classes);
  CHECK_FALSE(model.single_class);
  CHECK(predict_nb(model, fx.query(-0.3), 0.0) == doctest::Approx(5.0));
  CHECK(predict_nb(model, fx.query(2.4), 0.0) == doctest::Approx(9.0));
  double boundary = bisect_boundary(
      [&](double f0) { return predict_nb_class(model, fx.query(f0)); }, 0.0, 2.0);
  CHECK(std::abs(boundary - 1.0) < 1e-6);
}

TEST_CASE("lda discriminant agrees with the full quadratic form argmax") {
  RandomStream rng(42);
  const int per_class = 60;
  Eigen::MatrixXd V(3 * per_class, 9);
  Eigen::VectorXd X(3 * per_class);
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < per_class; ++i) {
      int r = c * per_class + i;
      for (int f = 0; f < 9; ++f) V(r, f) = (f < 3 ? 3.0 * c : 0.0) + rng.gaussian();
      X(r) = 10.0 * (c + 1);
    }
  }
  auto model = fit_lda(V, X, ClassBinning::from_labels(X));
  REQUIRE(model.classes.num_classes() == 3);

  // Oracle keeps the class independent quadratic term the discriminant drops.
  auto oracle = [&](const Eigen::VectorXd& q) {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < 3; ++c) {
      Eigen::VectorXd d = q - model.means.row(c).transpose();
      double s = -0.5 * d.dot(model.cov_inv * d) + model.log_priors(c);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    return best;
  };
  for (int trial = 0; trial < 200; ++trial) {
    auto c = static_cast<int>(rng.uniform_index(3));
    Eigen::VectorXd q(9);
    for (int f = 0; f < 9; ++f) q(f) = (f < 3 ? 3.0 * c : 0.0) + 1.5 * rng.gaussian();
    CHECK(predict_lda_class(model, q) == oracle(q));
  }
}

TEST_CASE("nb ignores a feature whose distribution matches across classes") {
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(8, 9);
  Eigen::VectorXd X(8);
  for (int i = 0; i < 8; ++i) {
    bool second = i >= 4;
    V(i, 0) = (second ? 4.0 : 0.0) + (i % 2 == 0 ? -0.2 : 0.2);
    V(i, 5) = (i % 2 == 0 ? 1.0 : -1.0);  // same values in both classes
    X(i) = second ? 9.0 : 5.0;
  }
  auto model = fit_nb(V, X, ClassBinning::from_labels(X));
  Eigen::VectorXd q = Eigen::VectorXd::Zero(9);
  q(0) = 0.1;
  int base = predict_nb_class(model, q);
  for (double v : {-1000.0, -1.0, 0.0, 3.0, 1000.0}) {
    q(5) = v;
    CHECK(predict_nb_class(model, q) == base);
  }
}

TEST_CASE("single class training yields flagged constant classifiers") {
  Eigen::MatrixXd V = Eigen::MatrixXd::Random(5, 9);
  Eigen::VectorXd X = Eigen::VectorXd::Constant(5, 7.0);
  auto classes = ClassBinning::from_labels(X);
  CHECK(classes.num_classes() == 1);
  auto lda = fit_lda(V, X, classes);
  auto nb = fit_nb(V, X, classes);
  CHECK(lda.single_class);
  CHECK(nb.single_class);
  Eigen::VectorXd q = Eigen::VectorXd::Constant(9, 123.0);
  CHECK(predict_lda(lda, q, 0.0) == doctest::Approx(7.0));
  CHECK(predict_nb(nb, q, 0.0) == doctest::Approx(7.0));
}

TEST_CASE("predictions clamp to the covered prefix length") {
  BoundaryFixture fx;
  auto classes = ClassBinning::from_labels(fx.X);
  auto lda = fit_lda(fx.V, fx.X, classes);
  auto nb = fit_nb(fx.V, fx.X, classes);
  CHECK(predict_lda(lda, fx.query(0.0), 11.0) == doctest::Approx(11.0));
  CHECK(predict_nb(nb, fx.query(0.0), 11.0) == doctest::Approx(11.0));
  SeparableFixture sep(20, 3);
  auto rf = fit_rf(sep.V, sep.X, ClassBinning::from_labels(sep.X), {.num_trees = 10, .seed = 3});
  CHECK(predict_rf(rf, sep.V.row(0).transpose(), 11.0) == doctest::Approx(11.0));
}

TEST_CASE("training rejects inconsistent or non finite input") {
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(4, 9);
  Eigen::VectorXd X = labels_of({1, 2, 1, 2});
  auto classes = ClassBinning::from_labels(X);
  Eigen::VectorXd short_labels = labels_of({1, 2});
  CHECK_THROWS_AS(fit_lda(V, short_labels, classes), std::invalid_argument);
  Eigen::MatrixXd bad = V;
  bad(1, 3) = std::nan("");
  CHECK_THROWS_AS(fit_lda(bad, X, classes), std::invalid_argument);
  CHECK_THROWS_AS(fit_nb(bad, X, classes), std::invalid_argument);
  CHECK_THROWS_AS(fit_rf(bad, X, classes, {}), std::invalid_argument);
  auto lda = fit_lda(V, X, classes);
  CHECK_THROWS_AS(predict_lda_class(lda, Eigen::VectorXd::Zero(4)), std::invalid_argument);
}

TEST_CASE("random forest fits a separable set perfectly") {
  SeparableFixture fx(40, 7);
  auto classes = ClassBinning::from_labels(fx.X);
  RfConfig cfg{.num_trees = 100, .features_per_split = 3, .min_leaf = 1, .seed = 7};
  auto model = fit_rf(fx.V, fx.X, classes, cfg);
  REQUIRE(static_cast<int>(model.trees.size()) == 100);
  for (Eigen::Index i = 0; i < fx.V.rows(); ++i) {
    double pred = model.classes.representative(predict_rf_class(model, fx.V.row(i).transpose()));
    CHECK(pred == fx.X(i));
  }
  CHECK(model.split_evaluations > 0);
  CHECK(rf_oob_error(model, fx.V, fx.X) == doctest::Approx(0.0));
}

TEST_CASE("random forest is deterministic for a fixed seed") {
  SeparableFixture fx(30, 11);
  auto classes = ClassBinning::from_labels(fx.X);
  RfConfig cfg{.num_trees = 25, .seed = 99};
  auto a = fit_rf(fx.V, fx.X, classes, cfg);
  auto b = fit_rf(fx.V, fx.X, classes, cfg);
  CHECK(a.split_evaluations == b.split_evaluations);
  REQUIRE(a.trees.size() == b.trees.size());
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    REQUIRE(a.trees[t].nodes.size() == b.trees[t].nodes.size());
    for (std::size_t n = 0; n < a.trees[t].nodes.size(); ++n) {
      CHECK(a.trees[t].nodes[n].feature == b.trees[t].nodes[n].feature);
      CHECK(a.trees[t].nodes[n].threshold == b.trees[t].nodes[n].threshold);
      CHECK(a.trees[t].nodes[n].class_idx == b.trees[t].nodes[n].class_idx);
    }
    CHECK(a.oob_indices[t] == b.oob_indices[t]);
  }
  RfConfig other = cfg;
  other.seed = 100;
  auto c = fit_rf(fx.V, fx.X, classes, other);
  CHECK(a.oob_indices != c.oob_indices);
}

TEST_CASE("random forest out of bag bookkeeping is consistent") {
  SeparableFixture fx(25, 5);
  auto model = fit_rf(fx.V, fx.X, ClassBinning::from_labels(fx.X), {.num_trees = 50, .seed = 5});
  const int M = static_cast<int>(fx.V.rows());
  long total_oob = 0;
  for (const auto& oob : model.oob_indices) {
    for (std::size_t i = 0; i < oob.size(); ++i) {
      CHECK(oob[i] >= 0);
      CHECK(oob[i] < M);
      if (i > 0) CHECK(oob[i] > oob[i - 1]);
    }
    total_oob += static_cast<long>(oob.size());
  }
  // A bootstrap leaves out about a third of the rows on average.
  double frac = static_cast<double>(total_oob) / (50.0 * M);
  CHECK(frac > 0.25);
  CHECK(frac < 0.50);
}

TEST_CASE("an unsplittable tied node predicts the smaller representative") {
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(2, 9);
  Eigen::VectorXd X = labels_of({4, 9});
  auto classes = ClassBinning::from_labels(X);
  auto model = fit_rf(V, X, classes, {.num_trees = 1, .seed = 1});
  CHECK(model.split_evaluations == 0);
  CHECK(model.trees[0].nodes.size() == 1);
  CHECK(predict_rf(model, Eigen::VectorXd::Zero(9), 0.0) == doctest::Approx(4.0));
}

TEST_CASE("a forest does not lose to its own first tree on held out rows") {
  RandomStream rng(123);
  auto draw = [&](int rows, Eigen::MatrixXd& V, Eigen::VectorXd& X) {
    V.resize(rows, 9);
    X.resize(rows);
    for (int i = 0; i < rows; ++i) {
      double center = i % 2 == 0 ? 0.0 : 2.0;
      for (int f = 0; f < 9; ++f) V(i, f) = center + 1.5 * rng.gaussian();
      X(i) = i % 2 == 0 ? 3.0 : 8.0;
    }
  };
  Eigen::MatrixXd train_V, test_V;
  Eigen::VectorXd train_X, test_X;
  draw(120, train_V, train_X);
  draw(80, test_V, test_X);
  auto classes = ClassBinning::from_labels(train_X);
  auto forest = fit_rf(train_V, train_X, classes, {.num_trees = 100, .seed = 17});
  auto stump = fit_rf(train_V, train_X, classes, {.num_trees = 1, .seed = 17});
  auto accuracy = [&](const RfModel& m) {
    int hits = 0;
    for (Eigen::Index i = 0; i < test_V.rows(); ++i)
      if (m.classes.representative(predict_rf_class(m, test_V.row(i).transpose())) == test_X(i))
        ++hits;
    return static_cast<double>(hits) / static_cast<double>(test_V.rows());
  };
  CHECK(accuracy(forest) >= accuracy(stump));
  CHECK(accuracy(forest) > 0.5);
}
