#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "pathbin/predictors/nn.hpp"
#include "pathbin/rng.hpp"

using namespace pathbin;
using namespace pathbin::pred;

namespace {

Normalizer identity_norm(int columns) {
  Normalizer n;
  n.mean = Eigen::VectorXd::Zero(columns);
  n.scale = Eigen::VectorXd::Ones(columns);
  return n;
}

LstmModel make_lstm(int input, int hidden, std::uint64_t seed) {
  LstmModel m;
  m.input_size = input;
  m.hidden_size = hidden;
  m.norm = identity_norm(input);
  RandomStream rng(seed);
  m.W.resize(4 * hidden, input + hidden + 1);
  for (Eigen::Index r = 0; r < m.W.rows(); ++r)
    for (Eigen::Index c = 0; c < m.W.cols(); ++c) m.W(r, c) = 0.4 * rng.gaussian();
  m.head.resize(hidden + 1);
  for (Eigen::Index r = 0; r < m.head.size(); ++r) m.head(r) = 0.4 * rng.gaussian();
  return m;
}

CnnModel make_cnn(int channels, int filters, int kernel, std::uint64_t seed) {
  CnnModel m;
  m.input_channels = channels;
  m.filters = filters;
  m.kernel = kernel;
  m.norm = identity_norm(channels);
  RandomStream rng(seed);
  m.W.resize(filters, channels * kernel + 1);
  for (Eigen::Index r = 0; r < m.W.rows(); ++r)
    for (Eigen::Index c = 0; c < m.W.cols(); ++c) m.W(r, c) = 0.4 * rng.gaussian();
  m.head.resize(filters + 1);
  for (Eigen::Index r = 0; r < m.head.size(); ++r) m.head(r) = 0.4 * rng.gaussian();
  return m;
}

Eigen::MatrixXd random_seq(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  RandomStream rng(seed);
  Eigen::MatrixXd s(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) s(r, c) = rng.gaussian();
  return s;
}

// Thirteen-column sequences whose label is ten times the mean of the last
// column; the last column is constant within a sample, the rest is noise.
std::vector<feat::SequenceSample> planted_fixture(int count, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<feat::SequenceSample> out;
  for (int i = 0; i < count; ++i) {
    auto rows = static_cast<Eigen::Index>(4 + rng.uniform_index(9));
    feat::SequenceSample s;
    s.matrix.resize(rows, 13);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < 12; ++c) s.matrix(r, c) = rng.gaussian();
    double level = static_cast<double>(rng.uniform_index(7));
    s.matrix.col(12).setConstant(level);
    s.label = 10.0 * s.matrix.col(12).mean();
    s.covered = static_cast<int>(rows);
    s.bin_id = i;
    out.push_back(std::move(s));
  }
  return out;
}

double fixture_mae_lstm(const LstmModel& m, const std::vector<feat::SequenceSample>& samples) {
  double mae = 0.0;
  for (const auto& s : samples) mae += std::abs(predict_lstm_raw(m, s.matrix) - s.label);
  return mae / static_cast<double>(samples.size());
}

double fixture_mae_cnn(const CnnModel& m, const std::vector<feat::SequenceSample>& samples) {
  double mae = 0.0;
  for (const auto& s : samples) mae += std::abs(predict_cnn_raw(m, s.matrix) - s.label);
  return mae / static_cast<double>(samples.size());
}

}  // namespace

TEST_CASE("lstm backprop matches central finite differences") {
  auto model = make_lstm(13, 6, 21);
  auto seq = random_seq(8, 13, 22);
  CHECK(numeric_gradient_check(model, seq, 1.5) < 1e-4);
}

TEST_CASE("lstm gradients on an all-zero sequence still match") {
  auto model = make_lstm(5, 4, 31);
  Eigen::MatrixXd seq = Eigen::MatrixXd::Zero(6, 5);
  CHECK(numeric_gradient_check(model, seq, -0.7) < 1e-4);
}

TEST_CASE("cnn backprop matches central finite differences") {
  auto model = make_cnn(5, 4, 3, 41);
  auto seq = random_seq(9, 5, 42);
  CHECK(numeric_gradient_check(model, seq, 2.5) < 1e-4);
}

TEST_CASE("cnn gradients match through the short-sequence padding path") {
  auto model = make_cnn(5, 4, 3, 51);
  auto seq = random_seq(2, 5, 52);  // shorter than the kernel
  CHECK(numeric_gradient_check(model, seq, 0.3) < 1e-4);
}

TEST_CASE("lstm learns the planted function") {
  auto samples = planted_fixture(80, 7);
  TrainConfig cfg{.learning_rate = 0.05, .epochs = 200, .batch_size = 16, .seed = 3};
  auto model = fit_lstm(samples, cfg, 16);
  CHECK(fixture_mae_lstm(model, samples) < 1.0);
  REQUIRE(model.curve.size() == 201);
  CHECK(model.curve.front().epoch == 0);
  CHECK(model.curve.back().train_loss < 0.5 * model.curve.front().train_loss);
}

TEST_CASE("cnn learns the planted function") {
  auto samples = planted_fixture(80, 7);
  TrainConfig cfg{.learning_rate = 0.05, .epochs = 200, .batch_size = 16, .seed = 3};
  auto model = fit_cnn1d(samples, cfg, 32, 5);
  CHECK(fixture_mae_cnn(model, samples) < 1.0);
  CHECK(model.curve.back().train_loss < 0.5 * model.curve.front().train_loss);
}

TEST_CASE("constant labels collapse to a constant predictor") {
  auto samples = planted_fixture(20, 9);
  for (auto& s : samples) s.label = 7.0;
  TrainConfig cfg{.epochs = 1, .seed = 1};
  auto lstm = fit_lstm(samples, cfg, 8);
  auto cnn = fit_cnn1d(samples, cfg, 8, 3);
  for (const auto& s : samples) {
    CHECK(std::abs(predict_lstm_raw(lstm, s.matrix) - 7.0) < 1e-3);
    CHECK(std::abs(predict_cnn_raw(cnn, s.matrix) - 7.0) < 1e-3);
  }
}

TEST_CASE("training rejects bad configs and empty input") {
  auto samples = planted_fixture(4, 2);
  CHECK_THROWS_AS(fit_lstm(samples, {.epochs = 0}, 4), std::invalid_argument);
  CHECK_THROWS_AS(fit_cnn1d(samples, {.epochs = 0}, 4, 3), std::invalid_argument);
  CHECK_THROWS_AS(fit_lstm(samples, {.learning_rate = 0.0}, 4), std::invalid_argument);
  CHECK_THROWS_AS(fit_lstm({}, {}, 4), std::invalid_argument);
  CHECK_THROWS_AS(fit_cnn1d(samples, {}, 0, 3), std::invalid_argument);
}

TEST_CASE("an exploding learning rate aborts with a divergence error") {
  auto samples = planted_fixture(12, 5);
  CHECK_THROWS_AS(fit_lstm(samples, {.learning_rate = 1e300, .epochs = 3}, 4),
                  std::runtime_error);
  CHECK_THROWS_AS(fit_cnn1d(samples, {.learning_rate = 1e300, .epochs = 3}, 4, 3),
                  std::runtime_error);
}

TEST_CASE("retraining with the same seed reproduces identical parameters") {
  auto samples = planted_fixture(24, 13);
  TrainConfig cfg{.learning_rate = 0.03, .epochs = 5, .batch_size = 8, .seed = 77};
  auto a = fit_lstm(samples, cfg, 8);
  auto b = fit_lstm(samples, cfg, 8);
  CHECK(a.W == b.W);
  CHECK(a.head == b.head);
  auto ca = fit_cnn1d(samples, cfg, 8, 3);
  auto cb = fit_cnn1d(samples, cfg, 8, 3);
  CHECK(ca.W == cb.W);
  CHECK(ca.head == cb.head);
  TrainConfig other = cfg;
  other.seed = 78;
  auto c = fit_lstm(samples, other, 8);
  CHECK(a.W != c.W);
}

TEST_CASE("cnn prediction ignores zero rows appended beyond the mask") {
  auto samples = planted_fixture(16, 17);
  auto model = fit_cnn1d(samples, {.epochs = 2, .seed = 4}, 8, 3);
  const Eigen::MatrixXd& orig = samples[0].matrix;
  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(orig.rows() + 5, orig.cols());
  padded.topRows(orig.rows()) = orig;
  CHECK(predict_cnn_raw(model, padded, orig.rows()) == predict_cnn_raw(model, orig));
}

TEST_CASE("lifespan predictions clamp to the covered prefix") {
  auto samples = planted_fixture(16, 19);
  auto lstm = fit_lstm(samples, {.epochs = 1, .seed = 2}, 4);
  auto cnn = fit_cnn1d(samples, {.epochs = 1, .seed = 2}, 4, 3);
  feat::SequenceSample probe = samples[0];
  probe.covered = 500;
  CHECK(predict_lstm(lstm, probe) == doctest::Approx(500.0));
  CHECK(predict_cnn(cnn, probe) == doctest::Approx(500.0));
}

TEST_CASE("prediction rejects mismatched column counts") {
  auto samples = planted_fixture(8, 23);
  auto lstm = fit_lstm(samples, {.epochs = 1}, 4);
  auto cnn = fit_cnn1d(samples, {.epochs = 1}, 4, 3);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(5, 7);
  CHECK_THROWS_AS(predict_lstm_raw(lstm, bad), std::invalid_argument);
  CHECK_THROWS_AS(predict_cnn_raw(cnn, bad), std::invalid_argument);
}

TEST_CASE("training telemetry counts one cell step per sequence row") {
  auto samples = planted_fixture(10, 29);
  long long rows = 0;
  for (const auto& s : samples) rows += s.matrix.rows();
  auto model = fit_lstm(samples, {.epochs = 1, .batch_size = 4}, 4);
  CHECK(model.cell_steps == rows);
}

TEST_CASE("best checkpoint selection never regresses the recorded optimum") {
  auto samples = planted_fixture(40, 37);
  auto model = fit_lstm(samples, {.learning_rate = 0.05, .epochs = 40, .seed = 5}, 8);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : model.curve) best = std::min(best, e.validation_mae);
  double final_mae = 0.0;
  for (const auto& s : samples) final_mae += std::abs(predict_lstm_raw(model, s.matrix) - s.label);
  final_mae /= static_cast<double>(samples.size());
  CHECK(final_mae == doctest::Approx(best).epsilon(1e-9));
}
