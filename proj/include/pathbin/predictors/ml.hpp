#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace pathbin::pred {

// Discretization of lifespan labels into classes with a numeric
// representative per class. One class per distinct value while the label
// set is small; otherwise aligned fixed-width intervals with midpoint
// representatives.
class ClassBinning {
 public:
  static ClassBinning from_labels(const Eigen::VectorXd& X, int max_classes = 40);
  static ClassBinning with_width(const Eigen::VectorXd& X, double width);
  // Rebuilds a binning from persisted state: distinct values when width is
  // zero, interval keys otherwise.
  static ClassBinning restore(double width, std::vector<double> values, std::vector<long> keys);

  int num_classes() const { return static_cast<int>(reps_.size()); }
  int class_of(double label) const;
  double representative(int cls) const { return reps_.at(static_cast<std::size_t>(cls)); }
  bool unit_classes() const { return width_ == 0.0; }
  double width() const { return width_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<long>& keys() const { return keys_; }

 private:
  std::vector<double> values_;  // distinct labels when unit classes
  std::vector<double> reps_;    // ascending representatives
  std::vector<long> keys_;      // interval indices when width > 0
  double width_ = 0.0;
};

struct LdaModel {
  ClassBinning classes;
  Eigen::MatrixXd means;       // C x F class means
  Eigen::MatrixXd cov_inv;     // F x F pooled inverse
  Eigen::VectorXd log_priors;  // C
  bool regularized = false;
  bool single_class = false;
};

struct NbModel {
  ClassBinning classes;
  Eigen::MatrixXd means;       // C x F
  Eigen::MatrixXd variances;   // C x F, floored
  Eigen::VectorXd log_priors;  // C
  bool single_class = false;
};

struct RfConfig {
  int num_trees = 100;
  int features_per_split = 3;
  int min_leaf = 1;
  std::uint64_t seed = 0;
};

struct RfNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int class_idx = -1;  // majority class at this node
};

struct RfTree {
  std::vector<RfNode> nodes;
};

struct RfModel {
  ClassBinning classes;
  std::vector<RfTree> trees;
  RfConfig config;
  std::vector<std::vector<int>> oob_indices;  // per tree, rows left out of the bootstrap
  long long split_evaluations = 0;            // telemetry
};

LdaModel fit_lda(const Eigen::MatrixXd& V, const Eigen::VectorXd& X, const ClassBinning& classes);
NbModel fit_nb(const Eigen::MatrixXd& V, const Eigen::VectorXd& X, const ClassBinning& classes);
RfModel fit_rf(const Eigen::MatrixXd& V, const Eigen::VectorXd& X, const ClassBinning& classes,
               const RfConfig& config);

int predict_lda_class(const LdaModel& model, const Eigen::VectorXd& row);
int predict_nb_class(const NbModel& model, const Eigen::VectorXd& row);
int predict_rf_class(const RfModel& model, const Eigen::VectorXd& row);

// Class representative clamped below by the covered prefix length.
double predict_lda(const LdaModel& model, const Eigen::VectorXd& row, double covered_length);
double predict_nb(const NbModel& model, const Eigen::VectorXd& row, double covered_length);
double predict_rf(const RfModel& model, const Eigen::VectorXd& row, double covered_length);

// Out-of-bag misclassification rate on the training set.
double rf_oob_error(const RfModel& model, const Eigen::MatrixXd& V, const Eigen::VectorXd& X);

}  // namespace pathbin::pred
