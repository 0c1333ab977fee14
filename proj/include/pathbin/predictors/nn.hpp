#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "pathbin/features.hpp"

namespace pathbin::pred {

struct TrainConfig {
  double learning_rate = 0.02;
  int epochs = 60;
  int batch_size = 16;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;
};

// Per-column input standardization plus label standardization, estimated
// on the training set and stored with the model.
struct Normalizer {
  Eigen::VectorXd mean;  // per input column
  Eigen::VectorXd scale;
  double label_mean = 0.0;
  double label_scale = 1.0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;    // mean squared error, normalized labels
  double validation_mae = 0.0;  // denormalized, on the training samples
};

// Single-layer LSTM over 13-column sequences with a linear head on the
// final hidden state. Gate rows of W are stacked input, forget, cell,
// output; columns are [input | recurrent | bias].
struct LstmModel {
  int input_size = 0;
  int hidden_size = 0;
  Eigen::MatrixXd W;     // 4H x (I + H + 1)
  Eigen::VectorXd head;  // H weights + bias
  Normalizer norm;
  std::vector<EpochStats> curve;
  long long cell_steps = 0;  // forward cell evaluations during fitting
};

// One valid-convolution layer (filters x channels*kernel), ReLU, average
// pooling over valid positions, linear head. Sequences shorter than the
// kernel are zero-padded on the left.
struct CnnModel {
  int input_channels = 0;
  int filters = 0;
  int kernel = 0;
  Eigen::MatrixXd W;     // filters x (channels*kernel + 1)
  Eigen::VectorXd head;  // filters + 1
  Normalizer norm;
  std::vector<EpochStats> curve;
  long long conv_steps = 0;  // filter-position evaluations during fitting
};

LstmModel fit_lstm(const std::vector<feat::SequenceSample>& samples, const TrainConfig& config,
                   int hidden_size = 120);
CnnModel fit_cnn1d(const std::vector<feat::SequenceSample>& samples, const TrainConfig& config,
                   int filters = 32, int kernel = 5);

// Raw regression outputs. valid_rows limits the CNN to the unpadded part
// of the sequence; negative means all rows.
double predict_lstm_raw(const LstmModel& model, const Eigen::MatrixXd& seq);
double predict_cnn_raw(const CnnModel& model, const Eigen::MatrixXd& seq,
                       Eigen::Index valid_rows = -1);

// Lifespan predictions clamped to at least the covered prefix length.
double predict_lstm(const LstmModel& model, const feat::SequenceSample& sample);
double predict_cnn(const CnnModel& model, const feat::SequenceSample& sample);

// Squared-error loss and its parameter gradients for one sample, in the
// model's normalized space. Exposed for the finite-difference oracle.
struct NetGradients {
  double loss = 0.0;
  Eigen::MatrixXd W;
  Eigen::VectorXd head;
};

NetGradients lstm_loss_gradients(const LstmModel& model, const Eigen::MatrixXd& seq, double label);
NetGradients cnn_loss_gradients(const CnnModel& model, const Eigen::MatrixXd& seq, double label,
                                Eigen::Index valid_rows = -1);

// Central finite differences at step h over at least min_params randomly
// chosen parameters; returns the maximum relative error against backprop.
double numeric_gradient_check(const LstmModel& model, const Eigen::MatrixXd& seq, double label,
                              double h = 1e-5, int min_params = 50, std::uint64_t seed = 0);
double numeric_gradient_check(const CnnModel& model, const Eigen::MatrixXd& seq, double label,
                              double h = 1e-5, int min_params = 50, std::uint64_t seed = 0);

}  // namespace pathbin::pred
