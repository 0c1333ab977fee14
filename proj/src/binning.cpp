#include "pathbin/binning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pathbin::track {

void BinningConfig::validate() const {
  for (double s : scales)
    if (s == 0.0) throw std::invalid_argument("parameter scale must be nonzero");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  if (!(d_max > 0.0)) throw std::invalid_argument("d_max must be > 0");
  if (lookback < 1) throw std::invalid_argument("lookback must be >= 1");
  if (min_overlap < 2) throw std::invalid_argument("min_overlap must be >= 2");
  if (rho_min < 0.0) throw std::invalid_argument("rho_min must be >= 0");
}

void CorrelationMatrix::set(int a, int b, const StdParams& c) {
  entries_[{std::min(a, b), std::max(a, b)}] = c;
}

std::optional<StdParams> CorrelationMatrix::get(int a, int b) const {
  auto it = entries_.find({std::min(a, b), std::max(a, b)});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

StdParams standardize_mpc(const sim::MpcRecord& m, const BinningConfig& config) {
  for (double s : config.scales)
    if (s == 0.0) throw std::invalid_argument("parameter scale must be nonzero");
  return {m.power_dbm / config.scales[0],       m.delay_s / config.scales[1],
          m.aod_elevation_rad / config.scales[2], m.aod_azimuth_rad / config.scales[3],
          m.aoa_elevation_rad / config.scales[4], m.aoa_azimuth_rad / config.scales[5]};
}

std::vector<std::vector<StdParams>> standardize_parameters(const sim::ChannelDataset& dataset,
                                                           const BinningConfig& config) {
  if (dataset.snapshots.empty()) throw std::invalid_argument("dataset is empty");
  std::vector<std::vector<StdParams>> out;
  out.reserve(dataset.snapshots.size());
  for (const auto& snap : dataset.snapshots) {
    std::vector<StdParams> row;
    row.reserve(snap.mpcs.size());
    for (const auto& m : snap.mpcs) row.push_back(standardize_mpc(m, config));
    out.push_back(std::move(row));
  }
  return out;
}

double mpc_distance(const StdParams& a, const StdParams& b, const BinningConfig& config) {
  double sum = 0.0;
  for (int u = 0; u < 6; ++u) sum += std::abs(a[u] - b[u]);
  return sum / config.gamma;
}

double mpc_distance(const sim::MpcRecord& a, const sim::MpcRecord& b,
                    const BinningConfig& config) {
  return mpc_distance(standardize_mpc(a, config), standardize_mpc(b, config), config);
}

BinningResult bin_mpcs(const sim::ChannelDataset& dataset, const BinningConfig& config) {
  config.validate();
  BinningResult res;
  if (dataset.snapshots.empty()) return res;

  auto view = standardize_parameters(dataset, config);
  const int num_positions = static_cast<int>(dataset.snapshots.size());
  res.alive_count.assign(static_cast<std::size_t>(num_positions), 0);

  std::vector<int> open;  // indices into res.bins whose last record is at n-1
  for (int n = 0; n < num_positions; ++n) {
    const auto& snap = dataset.snapshots[n];
    const int m_count = static_cast<int>(snap.mpcs.size());

    struct Candidate {
      double dist;
      int open_slot;
      int mpc;
    };
    std::vector<Candidate> cands;
    for (int s = 0; s < static_cast<int>(open.size()); ++s) {
      const PathBin& bin = res.bins[static_cast<std::size_t>(open[s])];
      StdParams last = standardize_mpc(bin.records.back(), config);
      for (int i = 0; i < m_count; ++i) {
        double d = mpc_distance(last, view[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)],
                                config);
        if (d <= config.d_max) cands.push_back({d, s, i});
      }
    }
    std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.dist != b.dist) return a.dist < b.dist;
      if (a.open_slot != b.open_slot) return a.open_slot < b.open_slot;
      return a.mpc < b.mpc;
    });

    std::vector<bool> slot_used(open.size(), false);
    std::vector<int> mpc_bin(static_cast<std::size_t>(m_count), -1);
    for (const Candidate& c : cands) {
      if (slot_used[static_cast<std::size_t>(c.open_slot)] ||
          mpc_bin[static_cast<std::size_t>(c.mpc)] >= 0)
        continue;
      slot_used[static_cast<std::size_t>(c.open_slot)] = true;
      mpc_bin[static_cast<std::size_t>(c.mpc)] = open[static_cast<std::size_t>(c.open_slot)];
    }

    // Unmatched open bins die: span ends at n-1, event lands at n.
    std::vector<int> next_open;
    for (int s = 0; s < static_cast<int>(open.size()); ++s) {
      PathBin& bin = res.bins[static_cast<std::size_t>(open[s])];
      if (slot_used[static_cast<std::size_t>(s)]) {
        next_open.push_back(open[static_cast<std::size_t>(s)]);
      } else {
        bin.closed = true;
        bin.death_rx = bin.last_rx();
        res.events.push_back({EventKind::kDeath, n, bin.id});
      }
    }

    for (int i = 0; i < m_count; ++i) {
      if (mpc_bin[static_cast<std::size_t>(i)] >= 0) {
        res.bins[static_cast<std::size_t>(mpc_bin[static_cast<std::size_t>(i)])].records.push_back(
            snap.mpcs[static_cast<std::size_t>(i)]);
      } else {
        PathBin fresh;
        fresh.id = static_cast<int>(res.bins.size());
        fresh.birth_rx = n;
        fresh.records.push_back(snap.mpcs[static_cast<std::size_t>(i)]);
        res.events.push_back({EventKind::kBirth, n, fresh.id});
        next_open.push_back(fresh.id);
        res.bins.push_back(std::move(fresh));
        mpc_bin[static_cast<std::size_t>(i)] = res.bins.back().id;
      }
    }
    open = std::move(next_open);
    res.alive_count[static_cast<std::size_t>(n)] = static_cast<int>(open.size());
  }

  std::stable_sort(res.events.begin(), res.events.end(),
                   [](const BirthDeathEvent& a, const BirthDeathEvent& b) {
                     return a.rx_index < b.rx_index;
                   });
  return res;
}

namespace {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx < 1e-300 || syy < 1e-300) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

std::optional<StdParams> pairwise_bin_correlation(const PathBin& a, const PathBin& b,
                                                  const BinningConfig& config) {
  int lo = std::max(a.birth_rx, b.birth_rx);
  int hi = std::min(a.last_rx(), b.last_rx());
  int overlap = hi - lo + 1;
  if (overlap < config.min_overlap) return std::nullopt;

  StdParams c{};
  for (int u = 0; u < 6; ++u) {
    std::vector<double> xs, ys;
    xs.reserve(static_cast<std::size_t>(overlap));
    ys.reserve(static_cast<std::size_t>(overlap));
    for (int rx = lo; rx <= hi; ++rx) {
      xs.push_back(standardize_mpc(a.records[static_cast<std::size_t>(rx - a.birth_rx)], config)[
          static_cast<std::size_t>(u)]);
      ys.push_back(standardize_mpc(b.records[static_cast<std::size_t>(rx - b.birth_rx)], config)[
          static_cast<std::size_t>(u)]);
    }
    c[static_cast<std::size_t>(u)] = pearson(xs, ys);
  }
  return c;
}

CorrelationMatrix correlation_matrix(const std::vector<PathBin>& bins,
                                     const BinningConfig& config) {
  CorrelationMatrix R;
  for (std::size_t i = 0; i < bins.size(); ++i)
    for (std::size_t j = i + 1; j < bins.size(); ++j)
      if (auto c = pairwise_bin_correlation(bins[i], bins[j], config))
        R.set(bins[i].id, bins[j].id, *c);
  return R;
}

std::pair<std::vector<BirthDeathEvent>, std::vector<int>> birth_death_events(
    const std::vector<PathBin>& bins, int num_positions) {
  std::vector<BirthDeathEvent> events;
  std::vector<int> alive(static_cast<std::size_t>(std::max(num_positions, 0)), 0);
  for (const PathBin& bin : bins) {
    events.push_back({EventKind::kBirth, bin.birth_rx, bin.id});
    if (bin.closed) events.push_back({EventKind::kDeath, bin.last_rx() + 1, bin.id});
    for (int rx = bin.birth_rx; rx <= bin.last_rx(); ++rx)
      if (rx >= 0 && rx < num_positions) ++alive[static_cast<std::size_t>(rx)];
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const BirthDeathEvent& a, const BirthDeathEvent& b) {
                     if (a.rx_index != b.rx_index) return a.rx_index < b.rx_index;
                     return a.bin_id < b.bin_id;
                   });
  return {std::move(events), std::move(alive)};
}

}  // namespace pathbin::track
