#include "pathbin/predictors/nn.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "pathbin/rng.hpp"

namespace pathbin::pred {
namespace {

constexpr double kScaleFloor = 1e-6;

double stable_sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  double e = std::exp(v);
  return e / (1.0 + e);
}

void check_config(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (cfg.epochs < 1) throw std::invalid_argument("need at least one epoch");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(cfg.clip_norm > 0.0)) throw std::invalid_argument("clip norm must be > 0");
}

Normalizer fit_normalizer(const std::vector<feat::SequenceSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("no training samples");
  const Eigen::Index C = samples[0].matrix.cols();
  if (C < 1) throw std::invalid_argument("sequences need at least one column");

  Normalizer norm;
  norm.mean = Eigen::VectorXd::Zero(C);
  norm.scale = Eigen::VectorXd::Ones(C);
  double rows = 0.0;
  for (const auto& s : samples) {
    if (s.matrix.cols() != C) throw std::invalid_argument("sequence column mismatch");
    if (s.matrix.rows() < 1) throw std::invalid_argument("empty sequence");
    if (!s.matrix.allFinite() || !std::isfinite(s.label))
      throw std::invalid_argument("non-finite training data");
    norm.mean += s.matrix.colwise().sum().transpose();
    rows += static_cast<double>(s.matrix.rows());
  }
  norm.mean /= rows;
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(C);
  for (const auto& s : samples)
    for (Eigen::Index c = 0; c < C; ++c)
      ss(c) += (s.matrix.col(c).array() - norm.mean(c)).square().sum();
  for (Eigen::Index c = 0; c < C; ++c)
    norm.scale(c) = std::max(std::sqrt(ss(c) / rows), kScaleFloor);

  double lm = 0.0;
  for (const auto& s : samples) lm += s.label;
  lm /= static_cast<double>(samples.size());
  double lv = 0.0;
  for (const auto& s : samples) lv += (s.label - lm) * (s.label - lm);
  norm.label_mean = lm;
  norm.label_scale = std::max(std::sqrt(lv / static_cast<double>(samples.size())), kScaleFloor);
  return norm;
}

Eigen::MatrixXd normalize_seq(const Normalizer& n, const Eigen::MatrixXd& seq) {
  Eigen::MatrixXd out = seq;
  for (Eigen::Index c = 0; c < out.cols(); ++c)
    out.col(c) = (out.col(c).array() - n.mean(c)) / n.scale(c);
  return out;
}

struct LstmCache {
  Eigen::MatrixXd i, f, g, o, c, tc, h;  // row t holds the step-t vectors
};

// Forward pass over a normalized sequence; returns the normalized output.
double lstm_forward(const LstmModel& m, const Eigen::MatrixXd& xs, LstmCache* cache) {
  const int H = m.hidden_size;
  const int I = m.input_size;
  const Eigen::Index T = xs.rows();
  if (cache) {
    for (auto* mat : {&cache->i, &cache->f, &cache->g, &cache->o, &cache->c, &cache->tc, &cache->h})
      mat->resize(T, H);
  }
  Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd aug(I + H + 1);
  for (Eigen::Index t = 0; t < T; ++t) {
    aug.head(I) = xs.row(t).transpose();
    aug.segment(I, H) = h;
    aug(I + H) = 1.0;
    Eigen::VectorXd z = m.W * aug;
    Eigen::VectorXd ig = z.head(H).unaryExpr([](double v) { return stable_sigmoid(v); });
    Eigen::VectorXd fg = z.segment(H, H).unaryExpr([](double v) { return stable_sigmoid(v); });
    Eigen::VectorXd gg = z.segment(2 * H, H).array().tanh();
    Eigen::VectorXd og = z.tail(H).unaryExpr([](double v) { return stable_sigmoid(v); });
    c = fg.cwiseProduct(c) + ig.cwiseProduct(gg);
    Eigen::VectorXd tc = c.array().tanh();
    h = og.cwiseProduct(tc);
    if (cache) {
      cache->i.row(t) = ig.transpose();
      cache->f.row(t) = fg.transpose();
      cache->g.row(t) = gg.transpose();
      cache->o.row(t) = og.transpose();
      cache->c.row(t) = c.transpose();
      cache->tc.row(t) = tc.transpose();
      cache->h.row(t) = h.transpose();
    }
  }
  return m.head.head(H).dot(h) + m.head(H);
}

// Accumulates parameter gradients of dy * y into dW and dhead.
void lstm_backward(const LstmModel& m, const Eigen::MatrixXd& xs, const LstmCache& cc, double dy,
                   Eigen::MatrixXd& dW, Eigen::VectorXd& dhead) {
  const int H = m.hidden_size;
  const int I = m.input_size;
  const Eigen::Index T = xs.rows();
  dhead.head(H) += dy * cc.h.row(T - 1).transpose();
  dhead(H) += dy;

  Eigen::VectorXd dh = dy * m.head.head(H);
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd aug(I + H + 1);
  Eigen::VectorXd dz(4 * H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    Eigen::VectorXd ig = cc.i.row(t).transpose();
    Eigen::VectorXd fg = cc.f.row(t).transpose();
    Eigen::VectorXd gg = cc.g.row(t).transpose();
    Eigen::VectorXd og = cc.o.row(t).transpose();
    Eigen::VectorXd tc = cc.tc.row(t).transpose();
    Eigen::VectorXd c_prev =
        t > 0 ? Eigen::VectorXd(cc.c.row(t - 1).transpose()) : Eigen::VectorXd::Zero(H);
    Eigen::VectorXd h_prev =
        t > 0 ? Eigen::VectorXd(cc.h.row(t - 1).transpose()) : Eigen::VectorXd::Zero(H);

    Eigen::VectorXd dog = dh.cwiseProduct(tc);
    dc += dh.cwiseProduct(og).cwiseProduct((1.0 - tc.array().square()).matrix());
    Eigen::VectorXd dig = dc.cwiseProduct(gg);
    Eigen::VectorXd dfg = dc.cwiseProduct(c_prev);
    Eigen::VectorXd dgg = dc.cwiseProduct(ig);

    dz.head(H) = dig.cwiseProduct(ig).cwiseProduct((1.0 - ig.array()).matrix());
    dz.segment(H, H) = dfg.cwiseProduct(fg).cwiseProduct((1.0 - fg.array()).matrix());
    dz.segment(2 * H, H) = dgg.cwiseProduct((1.0 - gg.array().square()).matrix());
    dz.tail(H) = dog.cwiseProduct(og).cwiseProduct((1.0 - og.array()).matrix());

    aug.head(I) = xs.row(t).transpose();
    aug.segment(I, H) = h_prev;
    aug(I + H) = 1.0;
    dW += dz * aug.transpose();
    dh = m.W.middleCols(I, H).transpose() * dz;
    dc = dc.cwiseProduct(fg);
  }
}

struct CnnCache {
  Eigen::MatrixXd windows;  // P x (C*k + 1), flattened window plus bias input
  Eigen::MatrixXd act;      // P x F pre-activations
  Eigen::VectorXd pooled;   // F
};

// Forward over the first valid_rows rows of a normalized sequence.
// Sequences shorter than the kernel are zero-padded on the left, which in
// normalized space pads with the per-column training mean.
double cnn_forward(const CnnModel& m, const Eigen::MatrixXd& xs, Eigen::Index valid_rows,
                   CnnCache* cache) {
  const int C = m.input_channels;
  const int k = m.kernel;
  const int F = m.filters;
  Eigen::Index T = valid_rows < 0 ? xs.rows() : valid_rows;
  if (T < 1 || T > xs.rows()) throw std::invalid_argument("bad valid row count");

  Eigen::MatrixXd padded;
  if (T < k) {
    padded = Eigen::MatrixXd::Zero(k, C);
    padded.bottomRows(T) = xs.topRows(T);
  } else {
    padded = xs.topRows(T);
  }
  const Eigen::Index P = padded.rows() - k + 1;

  Eigen::MatrixXd windows(P, C * k + 1);
  for (Eigen::Index p = 0; p < P; ++p) {
    for (int j = 0; j < k; ++j) windows.block(p, j * C, 1, C) = padded.row(p + j);
    windows(p, C * k) = 1.0;
  }
  Eigen::MatrixXd act = windows * m.W.transpose();  // P x F
  Eigen::VectorXd pooled =
      act.array().max(0.0).colwise().sum().matrix().transpose() / static_cast<double>(P);
  if (cache) {
    cache->windows = std::move(windows);
    cache->act = std::move(act);
    cache->pooled = pooled;
  }
  return m.head.head(F).dot(pooled) + m.head(F);
}

void cnn_backward(const CnnModel& m, const CnnCache& cc, double dy, Eigen::MatrixXd& dW,
                  Eigen::VectorXd& dhead) {
  const int F = m.filters;
  const auto P = cc.act.rows();
  dhead.head(F) += dy * cc.pooled;
  dhead(F) += dy;
  Eigen::VectorXd dpooled = dy * m.head.head(F) / static_cast<double>(P);
  // d act(p, f) = dpooled(f) when the unit fired, else 0.
  Eigen::MatrixXd dact = (cc.act.array() > 0.0)
                             .select(dpooled.transpose().replicate(P, 1), Eigen::MatrixXd::Zero(P, F));
  dW += dact.transpose() * cc.windows;
}

// Shared deterministic minibatch loop. grad(idx, dW, dhead) accumulates one
// sample's gradients and returns its loss; loss_mae(loss, mae) evaluates the
// full set with the current parameters.
template <class GradFn, class EvalFn>
std::vector<EpochStats> train_loop(Eigen::MatrixXd& W, Eigen::VectorXd& head, std::size_t n,
                                   const TrainConfig& cfg, GradFn&& grad, EvalFn&& evaluate) {
  std::vector<EpochStats> curve;
  auto record = [&](int epoch) {
    auto [loss, mae] = evaluate();
    if (!std::isfinite(loss)) throw std::runtime_error("training diverged");
    curve.push_back({epoch, loss, mae});
  };
  record(0);
  Eigen::MatrixXd best_W = W;
  Eigen::VectorXd best_head = head;
  double best_mae = curve[0].validation_mae;

  RandomStream rng(cfg.seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Eigen::MatrixXd dW(W.rows(), W.cols());
  Eigen::VectorXd dhead(head.size());

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto erng = rng.derive(static_cast<std::uint64_t>(epoch));
    erng.shuffle(order);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      dW.setZero();
      dhead.setZero();
      for (std::size_t b = start; b < stop; ++b) grad(order[b], dW, dhead);
      double inv = 1.0 / static_cast<double>(stop - start);
      dW *= inv;
      dhead *= inv;
      double nrm = std::sqrt(dW.squaredNorm() + dhead.squaredNorm());
      if (!std::isfinite(nrm)) throw std::runtime_error("training diverged");
      if (nrm > cfg.clip_norm) {
        double s = cfg.clip_norm / nrm;
        dW *= s;
        dhead *= s;
      }
      W -= cfg.learning_rate * dW;
      head -= cfg.learning_rate * dhead;
    }
    record(epoch);
    if (curve.back().validation_mae < best_mae) {
      best_mae = curve.back().validation_mae;
      best_W = W;
      best_head = head;
    }
  }
  W = best_W;
  head = best_head;
  return curve;
}

Eigen::MatrixXd uniform_matrix(RandomStream& rng, Eigen::Index rows, Eigen::Index cols,
                               double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * (2.0 * rng.uniform01() - 1.0);
  return m;
}

// Shared finite-difference check over a flat view of (W, head).
template <class Model, class GradsFn>
double fd_check(const Model& model, const GradsFn& grads_of, double h, int min_params,
                std::uint64_t seed) {
  NetGradients g = grads_of(model);
  const auto wsize = static_cast<std::size_t>(model.W.size());
  const auto total = wsize + static_cast<std::size_t>(model.head.size());

  std::set<std::size_t> picks;
  if (total <= static_cast<std::size_t>(min_params)) {
    for (std::size_t i = 0; i < total; ++i) picks.insert(i);
  } else {
    RandomStream rng(seed);
    while (picks.size() < static_cast<std::size_t>(min_params))
      picks.insert(static_cast<std::size_t>(rng.uniform_index(total)));
  }

  Model probe = model;
  auto* wdata = probe.W.data();
  auto* hdata = probe.head.data();
  auto param = [&](std::size_t i) -> double& {
    return i < wsize ? wdata[i] : hdata[i - wsize];
  };
  double worst = 0.0;
  for (std::size_t i : picks) {
    double saved = param(i);
    param(i) = saved + h;
    double up = grads_of(probe).loss;
    param(i) = saved - h;
    double down = grads_of(probe).loss;
    param(i) = saved;
    double fd = (up - down) / (2.0 * h);
    double an = i < wsize ? g.W.data()[i] : g.head.data()[i - wsize];
    double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace

NetGradients lstm_loss_gradients(const LstmModel& model, const Eigen::MatrixXd& seq,
                                 double label) {
  if (seq.cols() != model.input_size) throw std::invalid_argument("sequence column mismatch");
  Eigen::MatrixXd xs = normalize_seq(model.norm, seq);
  double y = (label - model.norm.label_mean) / model.norm.label_scale;
  NetGradients g;
  g.W = Eigen::MatrixXd::Zero(model.W.rows(), model.W.cols());
  g.head = Eigen::VectorXd::Zero(model.head.size());
  LstmCache cache;
  double out = lstm_forward(model, xs, &cache);
  g.loss = (out - y) * (out - y);
  lstm_backward(model, xs, cache, 2.0 * (out - y), g.W, g.head);
  return g;
}

NetGradients cnn_loss_gradients(const CnnModel& model, const Eigen::MatrixXd& seq, double label,
                                Eigen::Index valid_rows) {
  if (seq.cols() != model.input_channels) throw std::invalid_argument("sequence column mismatch");
  Eigen::MatrixXd xs = normalize_seq(model.norm, seq);
  double y = (label - model.norm.label_mean) / model.norm.label_scale;
  NetGradients g;
  g.W = Eigen::MatrixXd::Zero(model.W.rows(), model.W.cols());
  g.head = Eigen::VectorXd::Zero(model.head.size());
  CnnCache cache;
  double out = cnn_forward(model, xs, valid_rows, &cache);
  g.loss = (out - y) * (out - y);
  cnn_backward(model, cache, 2.0 * (out - y), g.W, g.head);
  return g;
}

LstmModel fit_lstm(const std::vector<feat::SequenceSample>& samples, const TrainConfig& config,
                   int hidden_size) {
  check_config(config);
  if (hidden_size < 1) throw std::invalid_argument("hidden size must be >= 1");

  LstmModel model;
  model.norm = fit_normalizer(samples);
  model.input_size = static_cast<int>(samples[0].matrix.cols());
  model.hidden_size = hidden_size;

  const int I = model.input_size;
  const int H = hidden_size;
  RandomStream rng(config.seed);
  model.W = uniform_matrix(rng, 4 * H, I + H + 1, 1.0 / std::sqrt(static_cast<double>(I + H + 1)));
  model.W.col(I + H).segment(H, H).array() += 1.0;  // open the forget gate initially
  model.head = uniform_matrix(rng, H + 1, 1, 1.0 / std::sqrt(static_cast<double>(H + 1)));
  model.head(H) = 0.0;

  std::vector<Eigen::MatrixXd> xs(samples.size());
  std::vector<double> ys(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    xs[i] = normalize_seq(model.norm, samples[i].matrix);
    ys[i] = (samples[i].label - model.norm.label_mean) / model.norm.label_scale;
  }

  auto grad = [&](std::size_t i, Eigen::MatrixXd& dW, Eigen::VectorXd& dhead) {
    LstmCache cache;
    double out = lstm_forward(model, xs[i], &cache);
    model.cell_steps += xs[i].rows();
    lstm_backward(model, xs[i], cache, 2.0 * (out - ys[i]), dW, dhead);
    return (out - ys[i]) * (out - ys[i]);
  };
  auto evaluate = [&]() {
    double loss = 0.0, mae = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      double out = lstm_forward(model, xs[i], nullptr);
      loss += (out - ys[i]) * (out - ys[i]);
      mae += std::abs(out - ys[i]) * model.norm.label_scale;
    }
    auto n = static_cast<double>(samples.size());
    return std::pair{loss / n, mae / n};
  };
  model.curve = train_loop(model.W, model.head, samples.size(), config, grad, evaluate);
  return model;
}

CnnModel fit_cnn1d(const std::vector<feat::SequenceSample>& samples, const TrainConfig& config,
                   int filters, int kernel) {
  check_config(config);
  if (filters < 1) throw std::invalid_argument("filter count must be >= 1");
  if (kernel < 1) throw std::invalid_argument("kernel size must be >= 1");

  CnnModel model;
  model.norm = fit_normalizer(samples);
  model.input_channels = static_cast<int>(samples[0].matrix.cols());
  model.filters = filters;
  model.kernel = kernel;

  const int C = model.input_channels;
  RandomStream rng(config.seed);
  model.W =
      uniform_matrix(rng, filters, C * kernel + 1, 1.0 / std::sqrt(static_cast<double>(C * kernel + 1)));
  model.head = uniform_matrix(rng, filters + 1, 1, 1.0 / std::sqrt(static_cast<double>(filters + 1)));
  model.head(filters) = 0.0;

  std::vector<Eigen::MatrixXd> xs(samples.size());
  std::vector<double> ys(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    xs[i] = normalize_seq(model.norm, samples[i].matrix);
    ys[i] = (samples[i].label - model.norm.label_mean) / model.norm.label_scale;
  }

  auto grad = [&](std::size_t i, Eigen::MatrixXd& dW, Eigen::VectorXd& dhead) {
    CnnCache cache;
    double out = cnn_forward(model, xs[i], -1, &cache);
    model.conv_steps += cache.act.rows() * model.filters;
    cnn_backward(model, cache, 2.0 * (out - ys[i]), dW, dhead);
    return (out - ys[i]) * (out - ys[i]);
  };
  auto evaluate = [&]() {
    double loss = 0.0, mae = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      double out = cnn_forward(model, xs[i], -1, nullptr);
      loss += (out - ys[i]) * (out - ys[i]);
      mae += std::abs(out - ys[i]) * model.norm.label_scale;
    }
    auto n = static_cast<double>(samples.size());
    return std::pair{loss / n, mae / n};
  };
  model.curve = train_loop(model.W, model.head, samples.size(), config, grad, evaluate);
  return model;
}

double predict_lstm_raw(const LstmModel& model, const Eigen::MatrixXd& seq) {
  if (seq.cols() != model.input_size) throw std::invalid_argument("sequence column mismatch");
  if (seq.rows() < 1) throw std::invalid_argument("empty sequence");
  double out = lstm_forward(model, normalize_seq(model.norm, seq), nullptr);
  return out * model.norm.label_scale + model.norm.label_mean;
}

double predict_cnn_raw(const CnnModel& model, const Eigen::MatrixXd& seq, Eigen::Index valid_rows) {
  if (seq.cols() != model.input_channels) throw std::invalid_argument("sequence column mismatch");
  double out = cnn_forward(model, normalize_seq(model.norm, seq), valid_rows, nullptr);
  return out * model.norm.label_scale + model.norm.label_mean;
}

double predict_lstm(const LstmModel& model, const feat::SequenceSample& sample) {
  return std::max(predict_lstm_raw(model, sample.matrix), static_cast<double>(sample.covered));
}

double predict_cnn(const CnnModel& model, const feat::SequenceSample& sample) {
  return std::max(predict_cnn_raw(model, sample.matrix), static_cast<double>(sample.covered));
}

double numeric_gradient_check(const LstmModel& model, const Eigen::MatrixXd& seq, double label,
                              double h, int min_params, std::uint64_t seed) {
  return fd_check(model, [&](const LstmModel& m) { return lstm_loss_gradients(m, seq, label); }, h,
                  min_params, seed);
}

double numeric_gradient_check(const CnnModel& model, const Eigen::MatrixXd& seq, double label,
                              double h, int min_params, std::uint64_t seed) {
  return fd_check(model, [&](const CnnModel& m) { return cnn_loss_gradients(m, seq, label); }, h,
                  min_params, seed);
}

}  // namespace pathbin::pred
