#include "pathbin/features.hpp"

#include <cmath>
#include <stdexcept>

namespace pathbin::feat {

double parameter_variation(const track::PathBin& bin, int u, const track::BinningConfig& cfg) {
  if (bin.records.empty()) throw std::invalid_argument("bin has no records");
  if (bin.records.size() < 2) return 0.0;
  double sum = 0.0;
  auto prev = track::standardize_mpc(bin.records[0], cfg);
  for (std::size_t i = 1; i < bin.records.size(); ++i) {
    auto cur = track::standardize_mpc(bin.records[i], cfg);
    sum += std::abs(cur[static_cast<std::size_t>(u)] - prev[static_cast<std::size_t>(u)]);
    prev = cur;
  }
  return sum / static_cast<double>(bin.records.size() - 1);
}

std::pair<int, int> correlation_counts(int bin_id, const track::CorrelationMatrix& R,
                                       double rho_min) {
  int pos = 0, neg = 0;
  for (const auto& [key, c] : R.entries()) {
    if (key.first != bin_id && key.second != bin_id) continue;
    for (double v : c) {
      if (v > rho_min) ++pos;
      if (v < -rho_min) ++neg;
    }
  }
  return {pos, neg};
}

int other_bins_alive(const track::PathBin& bin, const std::vector<track::PathBin>& all_bins) {
  int count = 0;
  for (const auto& other : all_bins) {
    if (other.id == bin.id) continue;
    if (other.birth_rx <= bin.last_rx() && other.last_rx() >= bin.birth_rx) ++count;
  }
  return count;
}

double mean_alive_count(const std::vector<int>& alive_count) {
  if (alive_count.empty()) return 0.0;
  double sum = 0.0;
  for (int c : alive_count) sum += c;
  return sum / static_cast<double>(alive_count.size());
}

namespace {

Eigen::VectorXd assemble_row(const track::PathBin& bin, int c_pos, int c_neg,
                             const std::vector<track::PathBin>& context_bins,
                             const FeatureContext& ctx) {
  Eigen::VectorXd row(kNumFeatures);
  for (int u = 0; u < 6; ++u) row(u) = parameter_variation(bin, u, ctx.binning);
  row(6) = c_pos;
  row(7) = c_neg;
  row(8) = other_bins_alive(bin, context_bins) - ctx.mean_alive;
  return row;
}

}  // namespace

Eigen::VectorXd feature_row(const track::PathBin& bin, const track::CorrelationMatrix& R,
                            const std::vector<track::PathBin>& all_bins,
                            const FeatureContext& ctx) {
  auto [pos, neg] = correlation_counts(bin.id, R, ctx.binning.rho_min);
  return assemble_row(bin, pos, neg, all_bins, ctx);
}

Eigen::VectorXd feature_row_prefix(const track::PathBin& prefix,
                                   const std::vector<track::PathBin>& context_bins,
                                   const FeatureContext& ctx) {
  int pos = 0, neg = 0;
  for (const auto& other : context_bins) {
    if (other.id == prefix.id) continue;
    if (auto c = track::pairwise_bin_correlation(prefix, other, ctx.binning)) {
      for (double v : *c) {
        if (v > ctx.binning.rho_min) ++pos;
        if (v < -ctx.binning.rho_min) ++neg;
      }
    }
  }
  return assemble_row(prefix, pos, neg, context_bins, ctx);
}

FeatureMatrix feature_matrix(const std::vector<track::PathBin>& bins,
                             const track::CorrelationMatrix& R, const FeatureContext& ctx) {
  FeatureMatrix out;
  out.V.resize(static_cast<Eigen::Index>(bins.size()), kNumFeatures);
  out.X.resize(static_cast<Eigen::Index>(bins.size()));
  std::vector<std::size_t> order(bins.size());
  for (std::size_t i = 0; i < bins.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return bins[a].id < bins[b].id; });
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& bin = bins[order[r]];
    out.V.row(static_cast<Eigen::Index>(r)) = feature_row(bin, R, bins, ctx).transpose();
    out.X(static_cast<Eigen::Index>(r)) = bin.lifespan();
    out.bin_ids.push_back(bin.id);
  }
  return out;
}

std::vector<double> linear_trend(const track::PathBin& bin, int u,
                                 const track::BinningConfig& cfg) {
  const auto n = bin.records.size();
  if (n == 0) throw std::invalid_argument("bin has no records");
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = track::standardize_mpc(bin.records[i], cfg)[static_cast<std::size_t>(u)];
  if (n == 1) return y;

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double x = static_cast<double>(i);
    sx += x;
    sy += y[i];
    sxx += x * x;
    sxy += x * y[i];
  }
  double denom = static_cast<double>(n) * sxx - sx * sx;
  double slope = denom == 0.0 ? 0.0 : (static_cast<double>(n) * sxy - sx * sy) / denom;
  double intercept = (sy - slope * sx) / static_cast<double>(n);
  std::vector<double> fitted(n);
  for (std::size_t i = 0; i < n; ++i) fitted[i] = intercept + slope * static_cast<double>(i);
  return fitted;
}

SequenceSample sequence_sample(const track::PathBin& bin, const FeatureContext& ctx,
                               int undersample_step, double label) {
  if (undersample_step < 1) throw std::invalid_argument("undersample_step must be >= 1");
  if (bin.records.empty()) throw std::invalid_argument("bin has no records");

  const auto n = bin.records.size();
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(undersample_step)) keep.push_back(i);
  if (keep.back() != n - 1) keep.push_back(n - 1);

  std::vector<std::vector<double>> trends(6);
  for (int u = 0; u < 6; ++u) trends[static_cast<std::size_t>(u)] = linear_trend(bin, u, ctx.binning);

  SequenceSample s;
  s.matrix.resize(static_cast<Eigen::Index>(keep.size()), kSeqColumns);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    std::size_t i = keep[r];
    auto params = track::standardize_mpc(bin.records[i], ctx.binning);
    int rx = bin.birth_rx + static_cast<int>(i);
    for (int u = 0; u < 6; ++u) {
      s.matrix(static_cast<Eigen::Index>(r), u) = params[static_cast<std::size_t>(u)];
      s.matrix(static_cast<Eigen::Index>(r), 6 + u) = trends[static_cast<std::size_t>(u)][i];
    }
    int alive = (rx >= 0 && rx < static_cast<int>(ctx.alive_count.size()))
                    ? ctx.alive_count[static_cast<std::size_t>(rx)]
                    : 1;
    s.matrix(static_cast<Eigen::Index>(r), 12) = alive - 1;
  }
  s.label = label;
  s.covered = static_cast<int>(n);
  s.bin_id = bin.id;
  return s;
}

TruncatedBin truncate_bin(const track::PathBin& bin, double fraction) {
  if (!bin.closed) throw std::invalid_argument("cannot truncate an open bin");
  if (!(fraction > 0.0) || !(fraction < 1.0))
    throw std::invalid_argument("fraction must be in (0, 1)");
  const int n = bin.lifespan();
  const int prefix_len = static_cast<int>(std::max<long>(1, std::lround(fraction * n)));
  TruncatedBin t;
  t.prefix = bin;
  t.prefix.closed = false;
  t.prefix.death_rx = 0;
  t.prefix.records.resize(static_cast<std::size_t>(std::min(prefix_len, n)));
  t.true_lifespan = n;
  t.fraction = fraction;
  return t;
}

}  // namespace pathbin::feat
