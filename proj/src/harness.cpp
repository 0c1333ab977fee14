#include "pathbin/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "pathbin/rng.hpp"

namespace pathbin::harness {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

// Stream tags keeping perturbation, split and model seeds independent.
constexpr std::uint64_t kPerturbTag = 0x50455254;  // "PERT"
constexpr std::uint64_t kSplitTag = 0x53504C4954;  // "SPLIT"
constexpr std::uint64_t kForestTag = 0x464F52;     // "FOR"
constexpr std::uint64_t kLstmTag = 0x4C53544D;     // "LSTM"
constexpr std::uint64_t kCnnTag = 0x434E4E;        // "CNN"

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double wrap_azimuth(double a) {
  double t = std::fmod(a, 2.0 * sim::kPi);
  if (t < 0.0) t += 2.0 * sim::kPi;
  return t;
}

std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t tag, int replicate) {
  return RandomStream::hash_combine(RandomStream::hash_combine(base, tag),
                                    static_cast<std::uint64_t>(static_cast<std::int64_t>(replicate)));
}

// Runs body(0..n-1) on up to `threads` workers. Any thread exception is
// rethrown after the join; slot-indexed writes keep results deterministic.
void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (n <= 0) return;
  int workers = std::min(threads, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

int effective_threads(const ExperimentConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<track::PathBin> bins_with_ids(const std::vector<track::PathBin>& bins,
                                          const std::vector<int>& ids) {
  std::unordered_set<int> wanted(ids.begin(), ids.end());
  std::vector<track::PathBin> out;
  out.reserve(ids.size());
  for (const auto& bin : bins) {
    if (wanted.count(bin.id) != 0) out.push_back(bin);
  }
  return out;
}

// Alive series with the target bin's span overridden, for the leakage
// audit: positions past the truncation point lose the target's count.
std::vector<int> alive_with_span(const std::vector<track::PathBin>& bins, int target_id,
                                 int target_len, int num_positions) {
  std::vector<int> alive(static_cast<std::size_t>(num_positions), 0);
  for (const auto& bin : bins) {
    int len = bin.id == target_id ? target_len : bin.lifespan();
    int last = std::min(bin.birth_rx + len, num_positions);
    for (int n = std::max(bin.birth_rx, 0); n < last; ++n) {
      alive[static_cast<std::size_t>(n)] += 1;
    }
  }
  return alive;
}

void check_fractions(const std::vector<double>& fractions) {
  if (fractions.empty()) throw std::invalid_argument("no truncation fractions given");
  for (double f : fractions) {
    if (!(f > 0.0) || f > 1.0) throw std::invalid_argument("truncation fraction outside (0, 1]");
  }
}

struct MethodPredictions {
  std::map<std::string, double> value;
};

MethodPredictions predict_all(const ModelSet& models, const Eigen::VectorXd& row,
                              const feat::SequenceSample& seq, double covered,
                              std::map<std::string, double>* timing) {
  MethodPredictions p;
  auto timed = [&](const char* name, auto&& fn) {
    Clock::time_point start = Clock::now();
    p.value[name] = fn();
    if (timing != nullptr) (*timing)[name] += seconds_since(start);
  };
  timed("poisson", [&] { return pred::predict_lifespan_poisson(models.poisson); });
  timed("ws", [&] { return pred::predict_ws(models.ws, row, covered); });
  timed("lda", [&] { return pred::predict_lda(models.lda, row, covered); });
  timed("nb", [&] { return pred::predict_nb(models.nb, row, covered); });
  timed("rf", [&] { return pred::predict_rf(models.rf, row, covered); });
  timed("lstm", [&] { return pred::predict_lstm(models.lstm, seq); });
  timed("cnn", [&] { return pred::predict_cnn(models.cnn, seq); });
  return p;
}

}  // namespace

sim::ChannelDataset perturb_dataset(const sim::ChannelDataset& source, const McConfig& mc,
                                    int replicate) {
  if (replicate < 0) throw std::invalid_argument("replicate index must be non-negative");
  RandomStream root =
      RandomStream(RandomStream::hash_combine(mc.seed, kPerturbTag)).derive(static_cast<std::uint64_t>(replicate));
  sim::ChannelDataset out;
  out.config = source.config;
  out.snapshots.reserve(source.snapshots.size());
  for (const auto& snapshot : source.snapshots) {
    RandomStream rng = root.derive(static_cast<std::uint64_t>(snapshot.rx_index));
    sim::ChannelSnapshot noisy = snapshot;
    for (auto& m : noisy.mpcs) {
      m.power_dbm += mc.amplitude_scale_db * rng.gaussian();
      m.alpha = std::pow(10.0, m.power_dbm / 20.0);
      m.delay_s += mc.delay_scale_s * rng.gaussian();
      m.aod_elevation_rad = std::clamp(m.aod_elevation_rad + mc.angle_scale_rad * rng.gaussian(),
                                       -0.5 * sim::kPi, 0.5 * sim::kPi);
      m.aod_azimuth_rad = wrap_azimuth(m.aod_azimuth_rad + mc.angle_scale_rad * rng.gaussian());
      m.aoa_elevation_rad = std::clamp(m.aoa_elevation_rad + mc.angle_scale_rad * rng.gaussian(),
                                       -0.5 * sim::kPi, 0.5 * sim::kPi);
      m.aoa_azimuth_rad = wrap_azimuth(m.aoa_azimuth_rad + mc.angle_scale_rad * rng.gaussian());
      m.phase_rad = rng.uniform(0.0, 2.0 * sim::kPi);
    }
    out.snapshots.push_back(sim::apply_power_threshold(noisy, source.config.power_threshold_dbm));
  }
  return out;
}

Split split_bins(const std::vector<track::PathBin>& bins, double train_ratio, std::uint64_t seed,
                 int min_test_lifespan) {
  if (!(train_ratio > 0.0) || !(train_ratio < 1.0)) {
    throw std::invalid_argument("train ratio must be inside (0, 1)");
  }
  std::vector<int> eligible;
  for (const auto& bin : bins) {
    if (bin.closed && bin.lifespan() >= min_test_lifespan) eligible.push_back(bin.id);
  }
  if (eligible.size() < 2) {
    throw std::invalid_argument("need at least two closed bins meeting the lifespan floor");
  }
  RandomStream rng(seed);
  rng.shuffle(eligible);
  auto count = static_cast<long>(eligible.size());
  long n_train = std::lround(train_ratio * static_cast<double>(count));
  n_train = std::clamp(n_train, 1L, count - 1);
  Split split;
  split.train_ids.assign(eligible.begin(), eligible.begin() + n_train);
  split.test_ids.assign(eligible.begin() + n_train, eligible.end());
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

feat::FeatureContext build_context(const track::BinningConfig& binning,
                                   const std::vector<int>& alive_all,
                                   const std::vector<track::PathBin>& train_bins,
                                   int num_positions) {
  feat::FeatureContext ctx;
  ctx.binning = binning;
  ctx.alive_count = alive_all;
  ctx.num_positions = num_positions;
  auto train_alive = track::birth_death_events(train_bins, num_positions).second;
  ctx.mean_alive = feat::mean_alive_count(train_alive);
  return ctx;
}

std::vector<feat::SequenceSample> truncated_sequences(
    const std::vector<track::PathBin>& train_bins, const feat::FeatureContext& ctx,
    const std::vector<double>& fractions, int undersample_step) {
  check_fractions(fractions);
  std::vector<feat::SequenceSample> samples;
  samples.reserve(train_bins.size() * fractions.size());
  for (const auto& bin : train_bins) {
    for (double f : fractions) {
      auto trunc = feat::truncate_bin(bin, f);
      samples.push_back(
          feat::sequence_sample(trunc.prefix, ctx, undersample_step, bin.lifespan()));
    }
  }
  return samples;
}

feat::FeatureMatrix truncated_features(const std::vector<track::PathBin>& train_bins,
                                       const feat::FeatureContext& ctx,
                                       const std::vector<double>& fractions) {
  check_fractions(fractions);
  std::vector<std::size_t> order(train_bins.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return train_bins[a].id < train_bins[b].id; });
  feat::FeatureMatrix out;
  auto rows = static_cast<Eigen::Index>(train_bins.size() * fractions.size());
  out.V.resize(rows, feat::kNumFeatures);
  out.X.resize(rows);
  Eigen::Index row = 0;
  for (std::size_t i : order) {
    const auto& bin = train_bins[i];
    for (double f : fractions) {
      auto trunc = feat::truncate_bin(bin, f);
      out.V.row(row) = feat::feature_row_prefix(trunc.prefix, train_bins, ctx).transpose();
      out.X(row) = bin.lifespan();
      out.bin_ids.push_back(bin.id);
      ++row;
    }
  }
  return out;
}

ReplicateData prepare_replicate(const sim::ChannelDataset& dataset, const ExperimentConfig& cfg,
                                int replicate) {
  check_fractions(cfg.fractions);
  sim::ChannelDataset local;
  const sim::ChannelDataset* source = &dataset;
  if (replicate >= 0) {
    local = perturb_dataset(dataset, cfg.mc, replicate);
    source = &local;
  }
  ReplicateData data;
  data.binning = track::bin_mpcs(*source, cfg.scenario.binning);
  data.split = split_bins(data.binning.bins, cfg.train_ratio,
                          replicate_seed(cfg.mc.seed, kSplitTag, replicate),
                          cfg.min_test_lifespan);
  data.train_bins = bins_with_ids(data.binning.bins, data.split.train_ids);
  for (const auto& bin : data.binning.bins) {
    if (bin.closed && bin.lifespan() < cfg.min_test_lifespan) data.excluded_short += 1;
  }
  int num_positions = dataset.config.num_positions;
  data.context =
      build_context(cfg.scenario.binning, data.binning.alive_count, data.train_bins, num_positions);
  data.train_features = truncated_features(data.train_bins, data.context, cfg.fractions);
  data.train_sequences =
      truncated_sequences(data.train_bins, data.context, cfg.fractions, cfg.undersample_step);
  auto [events, train_alive] = track::birth_death_events(data.train_bins, num_positions);
  data.rates = pred::estimate_rates(events, train_alive, dataset.config.position_spacing());
  return data;
}

ModelSet train_models(const ReplicateData& data, const ExperimentConfig& cfg, int replicate) {
  ModelSet models;
  auto timed = [&](const char* name, auto&& fn) {
    Clock::time_point start = Clock::now();
    fn();
    models.fit_seconds[name] = seconds_since(start);
  };
  timed("poisson", [&] { models.poisson = data.rates; });
  timed("ws", [&] { models.ws = pred::fit_ws(data.train_features.V, data.train_features.X); });
  auto classes = pred::ClassBinning::from_labels(data.train_features.X, cfg.max_classes);
  timed("lda",
        [&] { models.lda = pred::fit_lda(data.train_features.V, data.train_features.X, classes); });
  timed("nb",
        [&] { models.nb = pred::fit_nb(data.train_features.V, data.train_features.X, classes); });
  timed("rf", [&] {
    pred::RfConfig rf_config;
    rf_config.num_trees = cfg.rf_trees;
    rf_config.features_per_split = cfg.rf_features_per_split;
    rf_config.seed = replicate_seed(cfg.mc.seed, kForestTag, replicate);
    models.rf = pred::fit_rf(data.train_features.V, data.train_features.X, classes, rf_config);
  });
  timed("lstm", [&] {
    pred::TrainConfig tc = cfg.lstm_train;
    tc.seed = replicate_seed(cfg.lstm_train.seed, kLstmTag, replicate);
    models.lstm = pred::fit_lstm(data.train_sequences, tc, cfg.lstm_hidden);
  });
  timed("cnn", [&] {
    pred::TrainConfig tc = cfg.cnn_train;
    tc.seed = replicate_seed(cfg.cnn_train.seed, kCnnTag, replicate);
    models.cnn = pred::fit_cnn1d(data.train_sequences, tc, cfg.cnn_filters, cfg.cnn_kernel);
  });
  return models;
}

ReplicateScores evaluate_replicate(const ReplicateData& data, const ModelSet& models,
                                   const ExperimentConfig& cfg) {
  check_fractions(cfg.fractions);
  ReplicateScores scores;
  for (const auto& method : kMethods) {
    scores.cells[method].assign(cfg.fractions.size(), MaeCell{});
  }
  auto test_bins = bins_with_ids(data.binning.bins, data.split.test_ids);
  for (const auto& bin : test_bins) {
    double truth = bin.lifespan();
    for (std::size_t fi = 0; fi < cfg.fractions.size(); ++fi) {
      auto trunc = feat::truncate_bin(bin, cfg.fractions[fi]);
      Eigen::VectorXd row = feat::feature_row_prefix(trunc.prefix, data.train_bins, data.context);
      feat::SequenceSample seq =
          feat::sequence_sample(trunc.prefix, data.context, cfg.undersample_step, 0.0);
      double covered = trunc.prefix.lifespan();
      MethodPredictions p = predict_all(models, row, seq, covered, &scores.eval_seconds);
      for (const auto& method : kMethods) {
        auto& cell = scores.cells[method][fi];
        cell.abs_err += std::abs(p.value[method] - truth);
        cell.samples += 1;
      }
      if (cfg.audit_leakage) {
        // Re-predict in a world where the records past the truncation
        // point never existed; any difference means test-time leakage.
        feat::FeatureContext ctx = data.context;
        ctx.alive_count = alive_with_span(data.binning.bins, bin.id, trunc.prefix.lifespan(),
                                          data.context.num_positions);
        Eigen::VectorXd audit_row = feat::feature_row_prefix(trunc.prefix, data.train_bins, ctx);
        feat::SequenceSample audit_seq =
            feat::sequence_sample(trunc.prefix, ctx, cfg.undersample_step, 0.0);
        MethodPredictions q = predict_all(models, audit_row, audit_seq, covered, nullptr);
        for (const auto& method : kMethods) {
          double gap = std::abs(q.value[method] - p.value[method]);
          scores.max_audit_gap = std::max(scores.max_audit_gap, gap);
          if (gap != 0.0) scores.audit_passed = false;
        }
      }
    }
  }
  return scores;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.scenario.config.validate();
  cfg.scenario.binning.validate();
  check_fractions(cfg.fractions);
  if (cfg.mc.replicates < 1) throw std::invalid_argument("need at least one replicate");

  sim::ChannelDataset base = sim::simulate(cfg.scenario.config);
  ExperimentResult result;
  result.base_binning = track::bin_mpcs(base, cfg.scenario.binning);
  result.pooled_rates =
      pred::estimate_rates(result.base_binning.events, result.base_binning.alive_count,
                           cfg.scenario.config.position_spacing());
  result.replicates = cfg.mc.replicates;

  int threads = effective_threads(cfg);
  int n = cfg.mc.replicates;
  std::vector<ReplicateData> data(static_cast<std::size_t>(n));
  std::vector<pred::WsModel> ws_fits(static_cast<std::size_t>(n));
  std::vector<double> ws_seconds(static_cast<std::size_t>(n), 0.0);
  parallel_for(n, threads, [&](int r) {
    auto idx = static_cast<std::size_t>(r);
    data[idx] = prepare_replicate(base, cfg, r);
    Clock::time_point start = Clock::now();
    ws_fits[idx] = pred::fit_ws(data[idx].train_features.V, data[idx].train_features.X);
    ws_seconds[idx] = seconds_since(start);
  });

  // The deployed weighted-sum model averages the per-replicate solutions.
  pred::WsModel ws_avg;
  ws_avg.weights = Eigen::VectorXd::Zero(ws_fits.front().weights.size());
  double lambda_sum = 0.0;
  for (const auto& fit : ws_fits) {
    ws_avg.weights += fit.weights;
    ws_avg.ridge_used = ws_avg.ridge_used || fit.ridge_used;
    lambda_sum += fit.ridge_lambda;
  }
  ws_avg.weights /= static_cast<double>(n);
  ws_avg.ridge_lambda = lambda_sum / static_cast<double>(n);
  ws_avg.replicates = n;

  std::vector<ReplicateScores> scores(static_cast<std::size_t>(n));
  std::vector<std::map<std::string, double>> fit_seconds(static_cast<std::size_t>(n));
  std::vector<std::map<std::string, long long>> train_ops(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](int r) {
    auto idx = static_cast<std::size_t>(r);
    ModelSet models = train_models(data[idx], cfg, r);
    models.ws = ws_avg;
    models.fit_seconds["ws"] = ws_seconds[idx];
    fit_seconds[idx] = models.fit_seconds;
    auto rows = static_cast<long long>(data[idx].train_features.V.rows());
    train_ops[idx]["poisson"] = data[idx].rates.positions;
    train_ops[idx]["ws"] = rows;
    train_ops[idx]["lda"] = rows;
    train_ops[idx]["nb"] = rows;
    train_ops[idx]["rf"] = models.rf.split_evaluations;
    train_ops[idx]["lstm"] = models.lstm.cell_steps;
    train_ops[idx]["cnn"] = models.cnn.conv_steps;
    scores[idx] = evaluate_replicate(data[idx], models, cfg);
  });

  for (const auto& method : kMethods) {
    result.cells[method].assign(cfg.fractions.size(), MaeCell{});
  }
  for (int r = 0; r < n; ++r) {
    auto idx = static_cast<std::size_t>(r);
    result.excluded_short += data[idx].excluded_short;
    result.audit_passed = result.audit_passed && scores[idx].audit_passed;
    result.max_audit_gap = std::max(result.max_audit_gap, scores[idx].max_audit_gap);
    for (const auto& method : kMethods) {
      for (std::size_t fi = 0; fi < cfg.fractions.size(); ++fi) {
        result.cells[method][fi].abs_err += scores[idx].cells[method][fi].abs_err;
        result.cells[method][fi].samples += scores[idx].cells[method][fi].samples;
      }
      result.fit_seconds[method] += fit_seconds[idx][method];
      result.eval_seconds[method] += scores[idx].eval_seconds[method];
      result.operations[method] += train_ops[idx][method];
    }
  }
  for (const auto& method : kMethods) {
    double sum = 0.0;
    for (const auto& cell : result.cells.at(method)) sum += cell.mae();
    result.overall[method] = sum / static_cast<double>(cfg.fractions.size());
  }
  return result;
}

void write_report(const ExperimentResult& result, const ExperimentConfig& cfg,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  {
    std::ofstream out(dir / "bin_power.csv");
    out << "bin_id,rx_index,power_dbm\n";
    for (const auto& bin : result.base_binning.bins) {
      for (int i = 0; i < bin.lifespan(); ++i) {
        out << bin.id << ',' << bin.birth_rx + i << ','
            << io::format_double(bin.records[static_cast<std::size_t>(i)].power_dbm) << '\n';
      }
    }
  }

  {
    std::ofstream out(dir / "mae_by_fraction.csv");
    out << "method,fraction,mae,samples\n";
    for (const auto& method : kMethods) {
      const auto& cells = result.cells.at(method);
      for (std::size_t fi = 0; fi < cfg.fractions.size(); ++fi) {
        out << method << ',' << io::format_double(cfg.fractions[fi]) << ','
            << io::format_double(cells[fi].mae()) << ',' << cells[fi].samples << '\n';
      }
    }
  }

  {
    // Honest partial sum: the tail beyond the cutoff is far below the
    // normalization tolerance for the small means this model produces.
    std::ofstream out(dir / "death_pmf.csv");
    out << "deaths,probability\n";
    double cumulative = 0.0;
    for (int k = 0; k <= 500; ++k) {
      double p = pred::death_pmf(k, result.pooled_rates);
      out << k << ',' << io::format_double(p) << '\n';
      cumulative += p;
      if (k >= 20 && 1.0 - cumulative < 1e-12) break;
    }
  }

  {
    json j;
    j["schema_version"] = io::kSchemaVersion;
    j["config_hash"] = io::scenario_fingerprint(cfg.scenario);
    j["seed"] = cfg.mc.seed;
    j["replicates"] = result.replicates;
    j["fractions"] = cfg.fractions;
    j["train_ratio"] = cfg.train_ratio;
    j["min_test_lifespan"] = cfg.min_test_lifespan;
    j["mu_hat"] = result.pooled_rates.death_rate;
    j["nu_hat"] = result.pooled_rates.birth_rate;
    j["death_rate_per_position"] = result.pooled_rates.death_rate_per_position;
    j["births"] = result.pooled_rates.births;
    j["deaths"] = result.pooled_rates.deaths;
    j["excluded_short_bins"] = result.excluded_short;
    j["audit"] = {{"passed", result.audit_passed}, {"max_gap", result.max_audit_gap}};
    for (const auto& method : kMethods) {
      const auto& cells = result.cells.at(method);
      for (std::size_t fi = 0; fi < cfg.fractions.size(); ++fi) {
        auto key = io::format_double(cfg.fractions[fi]);
        j["mae"][method][key] = {{"mae", cells[fi].mae()}, {"samples", cells[fi].samples}};
      }
      j["overall_mae"][method] = result.overall.at(method);
    }
    std::ofstream out(dir / "summary.json");
    out << j.dump(2) << '\n';
  }

  {
    static const std::map<std::string, std::pair<const char*, const char*>> kComplexity = {
        {"poisson", {"positions scanned", "O(N) fit, O(1) predict"}},
        {"ws", {"design rows", "O(F^2 M) fit, O(F) predict"}},
        {"lda", {"design rows", "O(F^2 M + F^3) fit, O(C F^2) predict"}},
        {"nb", {"design rows", "O(C F M) fit, O(C F) predict"}},
        {"rf", {"split evaluations", "O(T M log M) fit, O(T depth) predict"}},
        {"lstm", {"cell forward steps", "O(E M T H (I+H)) fit, O(T H (I+H)) predict"}},
        {"cnn", {"filter window products", "O(E M P K C F) fit, O(P K C F) predict"}},
    };
    std::ofstream out(dir / "complexity.csv");
    out << "method,fit_seconds,eval_seconds,train_operations,operation_kind,predictions,scaling\n";
    for (const auto& method : kMethods) {
      long long predictions = 0;
      for (const auto& cell : result.cells.at(method)) predictions += cell.samples;
      const auto& info = kComplexity.at(method);
      out << method << ',' << io::format_double(result.fit_seconds.at(method)) << ','
          << io::format_double(result.eval_seconds.at(method)) << ','
          << result.operations.at(method) << ',' << info.first << ',' << predictions << ','
          << "\"" << info.second << "\"" << '\n';
    }
  }
}

}  // namespace pathbin::harness
