#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pathbin/io.hpp"

namespace pathbin::harness {

// Canonical method order used by reports and the ordering criterion.
inline const std::vector<std::string> kMethods = {"poisson", "ws",   "lda", "nb",
                                                  "rf",      "lstm", "cnn"};

struct McConfig {
  int replicates = 100;
  double amplitude_scale_db = 1.0;
  double delay_scale_s = 2e-9;
  double angle_scale_rad = sim::kPi / 180.0;
  std::uint64_t seed = 0;
};

// Independent zero-mean noise on the six parameters, freshly drawn phases,
// and the detection threshold re-applied, so replicates differ in
// birth/death structure. Deterministic per (seed, replicate, position).
sim::ChannelDataset perturb_dataset(const sim::ChannelDataset& source, const McConfig& mc,
                                    int replicate);

struct Split {
  std::vector<int> train_ids;
  std::vector<int> test_ids;  // closed bins meeting the length floor
};

// Disjoint split by bin id over the eligible bins: closed and spanning at
// least min_test_lifespan positions. Shorter or open bins belong to
// neither side. Throws when fewer than two bins are eligible.
Split split_bins(const std::vector<track::PathBin>& bins, double train_ratio, std::uint64_t seed,
                 int min_test_lifespan = 4);

struct ExperimentConfig {
  io::Scenario scenario;
  McConfig mc;
  std::vector<double> fractions{0.3, 0.6, 0.9};
  double train_ratio = 0.8;
  int min_test_lifespan = 4;
  int undersample_step = 2;
  pred::TrainConfig lstm_train{.learning_rate = 0.03, .epochs = 40};
  pred::TrainConfig cnn_train{.epochs = 400};
  int lstm_hidden = 120;
  int cnn_filters = 32;
  int cnn_kernel = 3;
  int rf_trees = 100;
  int rf_features_per_split = 3;
  int max_classes = 6;
  int threads = 0;  // 0 picks the hardware concurrency
  bool audit_leakage = true;
};

// The alive-count series every position sees, plus the training-split
// average concurrency used to center the ninth feature.
feat::FeatureContext build_context(const track::BinningConfig& binning,
                                   const std::vector<int>& alive_all,
                                   const std::vector<track::PathBin>& train_bins,
                                   int num_positions);

// One truncated sample per (closed bin, fraction), labeled with the full
// lifespan.
std::vector<feat::SequenceSample> truncated_sequences(
    const std::vector<track::PathBin>& train_bins, const feat::FeatureContext& ctx,
    const std::vector<double>& fractions, int undersample_step);

// Regression rows under the same truncation protocol: each training bin
// contributes one prefix row per fraction so train and test feature
// distributions match. Rows are ordered by (bin id, fraction).
feat::FeatureMatrix truncated_features(const std::vector<track::PathBin>& train_bins,
                                       const feat::FeatureContext& ctx,
                                       const std::vector<double>& fractions);

// Everything one replicate needs for training and evaluation.
struct ReplicateData {
  track::BinningResult binning;
  Split split;
  std::vector<track::PathBin> train_bins;  // closed only
  feat::FeatureContext context;
  feat::FeatureMatrix train_features;
  std::vector<feat::SequenceSample> train_sequences;
  pred::PoissonModel rates;  // estimated on the training bins alone
  int excluded_short = 0;    // closed bins below the test length floor
};

// replicate >= 0 perturbs the source dataset first; -1 uses it as is.
ReplicateData prepare_replicate(const sim::ChannelDataset& dataset, const ExperimentConfig& cfg,
                                int replicate);

struct ModelSet {
  pred::PoissonModel poisson;
  pred::WsModel ws;
  pred::LdaModel lda;
  pred::NbModel nb;
  pred::RfModel rf;
  pred::LstmModel lstm;
  pred::CnnModel cnn;
  std::map<std::string, double> fit_seconds;
};

ModelSet train_models(const ReplicateData& data, const ExperimentConfig& cfg, int replicate);

struct MaeCell {
  double abs_err = 0.0;
  long long samples = 0;
  double mae() const { return samples > 0 ? abs_err / static_cast<double>(samples) : 0.0; }
};

struct ReplicateScores {
  std::map<std::string, std::vector<MaeCell>> cells;  // method -> per fraction
  bool audit_passed = true;
  double max_audit_gap = 0.0;
  std::map<std::string, double> eval_seconds;
  std::map<std::string, long long> eval_operations;
};

// Truncates every test bin at every fraction, extracts features and
// sequences from the prefix against the training-bin context, and
// accumulates |prediction - lifespan| per method. With auditing on, each
// prediction is recomputed in a world where the target's post-prefix
// records never existed and must match exactly.
ReplicateScores evaluate_replicate(const ReplicateData& data, const ModelSet& models,
                                   const ExperimentConfig& cfg);

struct ExperimentResult {
  std::map<std::string, std::vector<MaeCell>> cells;  // pooled over replicates
  std::map<std::string, double> overall;              // unweighted mean over fractions
  pred::PoissonModel pooled_rates;                    // unperturbed dataset, all bins
  track::BinningResult base_binning;                  // unperturbed tracking
  int replicates = 0;
  long long excluded_short = 0;
  bool audit_passed = true;
  double max_audit_gap = 0.0;
  std::map<std::string, double> fit_seconds;
  std::map<std::string, double> eval_seconds;
  std::map<std::string, long long> operations;
};

// Full protocol: simulate once, then per replicate perturb, track, split,
// train all seven predictors and score them. The weighted-sum model is the
// replicate average of the per-replicate least-squares solutions.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Report artifacts: per-bin power series, MAE-by-fraction table, death
// count PMF, deterministic summary JSON and complexity accounting.
void write_report(const ExperimentResult& result, const ExperimentConfig& cfg,
                  const std::filesystem::path& dir);

}  // namespace pathbin::harness
