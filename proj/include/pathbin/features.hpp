#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "pathbin/binning.hpp"

namespace pathbin::feat {

inline constexpr int kNumFeatures = 9;  // regression row width
inline constexpr int kSeqColumns = 13;  // sequence sample width

// Shared inputs for feature assembly. mean_alive is the dataset-average
// alive-bin count, taken from the training split to keep test labels out
// of the context.
struct FeatureContext {
  track::BinningConfig binning;
  std::vector<int> alive_count;  // per rx position, whole replicate
  double mean_alive = 0.0;
  int num_positions = 0;
};

// Mean absolute successive difference of standardized parameter u.
// Zero for single-record bins.
double parameter_variation(const track::PathBin& bin, int u, const track::BinningConfig& cfg);

// Counts of correlation entries involving bin_id above rho_min (positive)
// and below -rho_min (negative), per partner bin per parameter.
std::pair<int, int> correlation_counts(int bin_id, const track::CorrelationMatrix& R,
                                       double rho_min);

// Number of other bins whose span intersects this bin's span.
int other_bins_alive(const track::PathBin& bin, const std::vector<track::PathBin>& all_bins);

double mean_alive_count(const std::vector<int>& alive_count);

// Nine-entry regression row: six variations, the two correlation counts,
// and the centered concurrency term.
Eigen::VectorXd feature_row(const track::PathBin& bin, const track::CorrelationMatrix& R,
                            const std::vector<track::PathBin>& all_bins,
                            const FeatureContext& ctx);

// Prediction-time row for a truncated bin: correlations are recomputed
// against the context bins from the prefix records only.
Eigen::VectorXd feature_row_prefix(const track::PathBin& prefix,
                                   const std::vector<track::PathBin>& context_bins,
                                   const FeatureContext& ctx);

struct FeatureMatrix {
  Eigen::MatrixXd V;         // M x 9
  Eigen::VectorXd X;         // M lifespans
  std::vector<int> bin_ids;  // row order
};

FeatureMatrix feature_matrix(const std::vector<track::PathBin>& bins,
                             const track::CorrelationMatrix& R, const FeatureContext& ctx);

// Least-squares line through the standardized parameter series, evaluated
// at each record position of the bin.
std::vector<double> linear_trend(const track::PathBin& bin, int u,
                                 const track::BinningConfig& cfg);

// Per-position training matrix: 6 raw standardized parameters, 6 trend
// values fitted on the sample's own records, and alive_count(n) - 1.
struct SequenceSample {
  Eigen::MatrixXd matrix;  // rows x 13
  double label = 0.0;      // full lifespan
  int covered = 0;         // records the sample was built from
  int bin_id = 0;
};

SequenceSample sequence_sample(const track::PathBin& bin, const FeatureContext& ctx,
                               int undersample_step, double label);

struct TruncatedBin {
  track::PathBin prefix;
  int true_lifespan = 0;
  double fraction = 0.0;
};

// Prefix of max(1, round(fraction * N_m)) records. Throws on open bins.
TruncatedBin truncate_bin(const track::PathBin& bin, double fraction);

}  // namespace pathbin::feat
