#include "pathbin/predictors/ml.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "pathbin/rng.hpp"
#include "pathbin/scenario.hpp"

namespace pathbin::pred {
namespace {

constexpr double kNbVarianceFloor = 1e-9;
// Per-class variances are floored at a fraction of the overall feature
// variance so a class observed a handful of times cannot collapse to a
// near-delta that out-scores every prior.
constexpr double kNbRelativeFloor = 0.05;
// Pooled-covariance shrinkage toward the scaled identity; keeps the
// discriminant well conditioned at small sample counts.
constexpr double kLdaShrinkage = 0.5;

std::vector<double> distinct_sorted(const Eigen::VectorXd& X) {
  std::set<double> s(X.data(), X.data() + X.size());
  return {s.begin(), s.end()};
}

std::vector<int> to_class_indices(const Eigen::VectorXd& X, const ClassBinning& classes) {
  std::vector<int> idx(static_cast<std::size_t>(X.size()));
  for (Eigen::Index i = 0; i < X.size(); ++i)
    idx[static_cast<std::size_t>(i)] = classes.class_of(X(i));
  return idx;
}

void check_design(const Eigen::MatrixXd& V, const Eigen::VectorXd& X) {
  if (V.rows() != X.size()) throw std::invalid_argument("row count mismatch");
  if (V.rows() == 0) throw std::invalid_argument("empty training set");
  if (!V.allFinite() || !X.allFinite()) throw std::invalid_argument("non-finite training data");
}

// Argmax with ties resolved toward the smaller class representative
// (classes are stored in ascending representative order).
int argmax_score(const Eigen::VectorXd& scores) {
  int best = 0;
  for (int c = 1; c < scores.size(); ++c)
    if (scores(c) > scores(best)) best = c;
  return best;
}

}  // namespace

ClassBinning ClassBinning::from_labels(const Eigen::VectorXd& X, int max_classes) {
  if (X.size() == 0) throw std::invalid_argument("no labels");
  if (max_classes < 1) throw std::invalid_argument("max_classes must be >= 1");
  auto distinct = distinct_sorted(X);
  if (static_cast<int>(distinct.size()) <= max_classes) {
    ClassBinning cb;
    cb.values_ = distinct;
    cb.reps_ = distinct;
    cb.width_ = 0.0;
    return cb;
  }
  double span = distinct.back() - distinct.front() + 1.0;
  double width = std::ceil(span / static_cast<double>(max_classes));
  ClassBinning cb = with_width(X, width);
  while (cb.num_classes() > max_classes) cb = with_width(X, width += 1.0);
  return cb;
}

ClassBinning ClassBinning::restore(double width, std::vector<double> values,
                                   std::vector<long> keys) {
  ClassBinning cb;
  cb.width_ = width;
  if (width == 0.0) {
    cb.values_ = std::move(values);
    cb.reps_ = cb.values_;
  } else {
    cb.keys_ = std::move(keys);
    for (long k : cb.keys_) cb.reps_.push_back((static_cast<double>(k) + 0.5) * width);
  }
  if (cb.reps_.empty()) throw std::invalid_argument("empty class binning");
  return cb;
}

ClassBinning ClassBinning::with_width(const Eigen::VectorXd& X, double width) {
  if (X.size() == 0) throw std::invalid_argument("no labels");
  if (!(width > 0.0)) throw std::invalid_argument("width must be > 0");
  ClassBinning cb;
  cb.width_ = width;
  std::set<long> keys;
  for (Eigen::Index i = 0; i < X.size(); ++i)
    keys.insert(static_cast<long>(std::floor(X(i) / width)));
  for (long k : keys) {
    cb.keys_.push_back(k);
    cb.reps_.push_back((static_cast<double>(k) + 0.5) * width);
  }
  return cb;
}

int ClassBinning::class_of(double label) const {
  if (unit_classes()) {
    auto it = std::lower_bound(values_.begin(), values_.end(), label);
    if (it == values_.end()) return static_cast<int>(values_.size()) - 1;
    if (it == values_.begin()) return 0;
    // Nearest distinct value, lower on ties.
    double hi = *it, lo = *(it - 1);
    return (label - lo <= hi - label) ? static_cast<int>(it - values_.begin()) - 1
                                      : static_cast<int>(it - values_.begin());
  }
  long key = static_cast<long>(std::floor(label / width_));
  auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it != keys_.end() && *it == key) return static_cast<int>(it - keys_.begin());
  if (it == keys_.end()) return static_cast<int>(keys_.size()) - 1;
  if (it == keys_.begin()) return 0;
  return (key - *(it - 1) <= *it - key) ? static_cast<int>(it - keys_.begin()) - 1
                                        : static_cast<int>(it - keys_.begin());
}

LdaModel fit_lda(const Eigen::MatrixXd& V, const Eigen::VectorXd& X, const ClassBinning& classes) {
  check_design(V, X);
  const auto M = V.rows();
  const auto F = V.cols();
  const int C = classes.num_classes();

  LdaModel model;
  model.classes = classes;
  model.single_class = C < 2;
  auto idx = to_class_indices(X, classes);

  Eigen::VectorXd counts = Eigen::VectorXd::Zero(C);
  model.means = Eigen::MatrixXd::Zero(C, F);
  for (Eigen::Index i = 0; i < M; ++i) {
    counts(idx[static_cast<std::size_t>(i)]) += 1.0;
    model.means.row(idx[static_cast<std::size_t>(i)]) += V.row(i);
  }
  for (int c = 0; c < C; ++c)
    if (counts(c) > 0.0) model.means.row(c) /= counts(c);

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(F, F);
  for (Eigen::Index i = 0; i < M; ++i) {
    Eigen::VectorXd d = V.row(i).transpose() - model.means.row(idx[static_cast<std::size_t>(i)]).transpose();
    scatter += d * d.transpose();
  }
  double dof = std::max<double>(static_cast<double>(M - C), 1.0);
  Eigen::MatrixXd cov = scatter / dof;
  model.regularized = !Eigen::FullPivLU<Eigen::MatrixXd>(cov).isInvertible();
  double level = std::max(cov.trace() / static_cast<double>(F), 1e-12);
  cov *= 1.0 - kLdaShrinkage;
  cov.diagonal().array() += kLdaShrinkage * level;
  model.cov_inv = cov.ldlt().solve(Eigen::MatrixXd::Identity(F, F));

  model.log_priors.resize(C);
  for (int c = 0; c < C; ++c)
    model.log_priors(c) = counts(c) > 0.0 ? std::log(counts(c) / static_cast<double>(M))
                                          : -std::numeric_limits<double>::infinity();
  return model;
}

int predict_lda_class(const LdaModel& model, const Eigen::VectorXd& row) {
  if (row.size() != model.means.cols()) throw std::invalid_argument("feature width mismatch");
  if (model.single_class) return 0;
  const int C = model.classes.num_classes();
  Eigen::VectorXd scores(C);
  for (int c = 0; c < C; ++c) {
    Eigen::VectorXd mu = model.means.row(c).transpose();
    Eigen::VectorXd a = model.cov_inv * mu;
    scores(c) = row.dot(a) - 0.5 * mu.dot(a) + model.log_priors(c);
  }
  return argmax_score(scores);
}

double predict_lda(const LdaModel& model, const Eigen::VectorXd& row, double covered_length) {
  return std::max(model.classes.representative(predict_lda_class(model, row)), covered_length);
}

NbModel fit_nb(const Eigen::MatrixXd& V, const Eigen::VectorXd& X, const ClassBinning& classes) {
  check_design(V, X);
  const auto M = V.rows();
  const auto F = V.cols();
  const int C = classes.num_classes();

  NbModel model;
  model.classes = classes;
  model.single_class = C < 2;
  auto idx = to_class_indices(X, classes);

  Eigen::VectorXd counts = Eigen::VectorXd::Zero(C);
  model.means = Eigen::MatrixXd::Zero(C, F);
  model.variances = Eigen::MatrixXd::Zero(C, F);
  for (Eigen::Index i = 0; i < M; ++i) {
    counts(idx[static_cast<std::size_t>(i)]) += 1.0;
    model.means.row(idx[static_cast<std::size_t>(i)]) += V.row(i);
  }
  for (int c = 0; c < C; ++c)
    if (counts(c) > 0.0) model.means.row(c) /= counts(c);
  for (Eigen::Index i = 0; i < M; ++i) {
    Eigen::ArrayXd d = V.row(i).array() - model.means.row(idx[static_cast<std::size_t>(i)]).array();
    model.variances.row(idx[static_cast<std::size_t>(i)]) += (d * d).matrix();
  }
  Eigen::ArrayXd total_var(F);
  for (Eigen::Index f = 0; f < F; ++f) {
    double mean = V.col(f).mean();
    total_var(f) = (V.col(f).array() - mean).square().sum() / static_cast<double>(M);
  }
  for (int c = 0; c < C; ++c) {
    if (counts(c) > 0.0) model.variances.row(c) /= counts(c);
    for (Eigen::Index f = 0; f < F; ++f)
      model.variances(c, f) = std::max({model.variances(c, f), kNbVarianceFloor,
                                        kNbRelativeFloor * total_var(f)});
  }

  model.log_priors.resize(C);
  for (int c = 0; c < C; ++c)
    model.log_priors(c) = counts(c) > 0.0 ? std::log(counts(c) / static_cast<double>(M))
                                          : -std::numeric_limits<double>::infinity();
  return model;
}

int predict_nb_class(const NbModel& model, const Eigen::VectorXd& row) {
  if (row.size() != model.means.cols()) throw std::invalid_argument("feature width mismatch");
  if (model.single_class) return 0;
  const int C = model.classes.num_classes();
  Eigen::VectorXd scores(C);
  for (int c = 0; c < C; ++c) {
    double s = model.log_priors(c);
    for (Eigen::Index f = 0; f < row.size(); ++f) {
      double var = model.variances(c, f);
      double d = row(f) - model.means(c, f);
      s += -0.5 * std::log(2.0 * sim::kPi * var) - d * d / (2.0 * var);
    }
    scores(c) = s;
  }
  return argmax_score(scores);
}

double predict_nb(const NbModel& model, const Eigen::VectorXd& row, double covered_length) {
  return std::max(model.classes.representative(predict_nb_class(model, row)), covered_length);
}

namespace {

struct TreeBuilder {
  const Eigen::MatrixXd& V;
  const std::vector<int>& labels;
  int num_classes;
  const RfConfig& config;
  RandomStream rng;
  RfTree tree;
  long long split_evals = 0;

  int majority(const std::vector<int>& rows) const {
    std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
    for (int r : rows) ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(r)])];
    int best = 0;
    for (int c = 1; c < num_classes; ++c)
      if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)]) best = c;
    return best;
  }

  bool pure(const std::vector<int>& rows) const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (labels[static_cast<std::size_t>(rows[i])] != labels[static_cast<std::size_t>(rows[0])])
        return false;
    return true;
  }

  std::vector<int> pick_features() {
    std::vector<int> all(static_cast<std::size_t>(V.cols()));
    for (std::size_t f = 0; f < all.size(); ++f) all[f] = static_cast<int>(f);
    int k = std::min<int>(config.features_per_split, static_cast<int>(all.size()));
    for (int i = 0; i < k; ++i) {
      auto j = i + static_cast<int>(rng.uniform_index(all.size() - static_cast<std::size_t>(i)));
      std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
    }
    all.resize(static_cast<std::size_t>(k));
    std::sort(all.begin(), all.end());
    return all;
  }

  static double gini(const std::vector<int>& counts, double total) {
    double g = 1.0;
    for (int c : counts) {
      double p = static_cast<double>(c) / total;
      g -= p * p;
    }
    return g;
  }

  int build(std::vector<int> rows) {
    int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[static_cast<std::size_t>(node_id)].class_idx = majority(rows);
    if (static_cast<int>(rows.size()) < 2 * config.min_leaf || pure(rows)) return node_id;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = std::numeric_limits<double>::infinity();
    const double total = static_cast<double>(rows.size());

    for (int f : pick_features()) {
      std::vector<int> order = rows;
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (V(a, f) != V(b, f)) return V(a, f) < V(b, f);
        return a < b;
      });
      std::vector<int> left_counts(static_cast<std::size_t>(num_classes), 0);
      std::vector<int> right_counts(static_cast<std::size_t>(num_classes), 0);
      for (int r : order) ++right_counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(r)])];

      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        int lbl = labels[static_cast<std::size_t>(order[i])];
        ++left_counts[static_cast<std::size_t>(lbl)];
        --right_counts[static_cast<std::size_t>(lbl)];
        double lo = V(order[i], f), hi = V(order[i + 1], f);
        if (lo == hi) continue;
        auto n_left = static_cast<double>(i + 1);
        double n_right = total - n_left;
        if (n_left < config.min_leaf || n_right < config.min_leaf) continue;
        ++split_evals;
        double score =
            (n_left * gini(left_counts, n_left) + n_right * gini(right_counts, n_right)) / total;
        if (score < best_score) {
          best_score = score;
          best_feature = f;
          best_threshold = 0.5 * (lo + hi);
        }
      }
    }
    if (best_feature < 0) return node_id;  // nothing in the subset separates the rows

    std::vector<int> left_rows, right_rows;
    for (int r : rows)
      (V(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
    tree.nodes[static_cast<std::size_t>(node_id)].feature = best_feature;
    tree.nodes[static_cast<std::size_t>(node_id)].threshold = best_threshold;
    int left = build(std::move(left_rows));
    tree.nodes[static_cast<std::size_t>(node_id)].left = left;
    int right = build(std::move(right_rows));
    tree.nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }
};

int tree_class(const RfTree& tree, const Eigen::VectorXd& row) {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const RfNode& nd = tree.nodes[static_cast<std::size_t>(node)];
    node = row(nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return tree.nodes[static_cast<std::size_t>(node)].class_idx;
}

}  // namespace

RfModel fit_rf(const Eigen::MatrixXd& V, const Eigen::VectorXd& X, const ClassBinning& classes,
               const RfConfig& config) {
  check_design(V, X);
  if (config.num_trees < 1) throw std::invalid_argument("need at least one tree");
  if (config.features_per_split < 1) throw std::invalid_argument("features_per_split must be >= 1");

  RfModel model;
  model.classes = classes;
  model.config = config;
  auto labels = to_class_indices(X, classes);
  const auto M = static_cast<std::size_t>(V.rows());
  RandomStream master(config.seed);

  for (int t = 0; t < config.num_trees; ++t) {
    TreeBuilder builder{V, labels, classes.num_classes(), config,
                        master.derive(static_cast<std::uint64_t>(t))};
    std::vector<int> sample;
    std::vector<bool> in_bag(M, false);
    sample.reserve(M);
    for (std::size_t i = 0; i < M; ++i) {
      auto pick = builder.rng.uniform_index(M);
      sample.push_back(static_cast<int>(pick));
      in_bag[pick] = true;
    }
    builder.build(std::move(sample));
    model.trees.push_back(std::move(builder.tree));
    model.split_evaluations += builder.split_evals;

    std::vector<int> oob;
    for (std::size_t i = 0; i < M; ++i)
      if (!in_bag[i]) oob.push_back(static_cast<int>(i));
    model.oob_indices.push_back(std::move(oob));
  }
  return model;
}

int predict_rf_class(const RfModel& model, const Eigen::VectorXd& row) {
  if (model.trees.empty()) throw std::invalid_argument("empty forest");
  std::vector<int> votes(static_cast<std::size_t>(model.classes.num_classes()), 0);
  for (const auto& tree : model.trees) ++votes[static_cast<std::size_t>(tree_class(tree, row))];
  int best = 0;
  for (int c = 1; c < static_cast<int>(votes.size()); ++c)
    if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
  return best;
}

double predict_rf(const RfModel& model, const Eigen::VectorXd& row, double covered_length) {
  return std::max(model.classes.representative(predict_rf_class(model, row)), covered_length);
}

double rf_oob_error(const RfModel& model, const Eigen::MatrixXd& V, const Eigen::VectorXd& X) {
  auto labels = to_class_indices(X, model.classes);
  const auto M = static_cast<std::size_t>(V.rows());
  std::vector<std::vector<int>> votes(M, std::vector<int>(
      static_cast<std::size_t>(model.classes.num_classes()), 0));
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    for (int r : model.oob_indices[t])
      ++votes[static_cast<std::size_t>(r)][static_cast<std::size_t>(
          tree_class(model.trees[t], V.row(r).transpose()))];
  }
  double counted = 0.0, wrong = 0.0;
  for (std::size_t r = 0; r < M; ++r) {
    int total = 0, best = 0;
    for (int c = 0; c < model.classes.num_classes(); ++c) {
      total += votes[r][static_cast<std::size_t>(c)];
      if (votes[r][static_cast<std::size_t>(c)] > votes[r][static_cast<std::size_t>(best)]) best = c;
    }
    if (total == 0) continue;  // never out of bag
    counted += 1.0;
    if (best != labels[r]) wrong += 1.0;
  }
  return counted == 0.0 ? 0.0 : wrong / counted;
}

}  // namespace pathbin::pred
