#pragma once

#include <array>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "pathbin/raysim.hpp"

namespace pathbin::track {

// Standardized view of the six channel parameters, in order:
// amplitude (dB), delay, AoD elevation, AoD azimuth, AoA elevation,
// AoA azimuth.
using StdParams = std::array<double, 6>;

struct BinningConfig {
  // Division scales per parameter. Defaults: 1 dB amplitude, 10 ns delay,
  // 1 degree per angle.
  StdParams scales{1.0, 1e-8, sim::kPi / 180.0, sim::kPi / 180.0, sim::kPi / 180.0,
                   sim::kPi / 180.0};
  double gamma = 6.0;     // distance normalizer
  double d_max = 1.0;     // assignment threshold in normalized units
  int lookback = 1;       // matching depth; gapless bins restrict this to 1
  int min_overlap = 3;    // positions required before correlating two bins
  double rho_min = 0.5;   // significance cut for correlation counts

  void validate() const;
};

// Time series of one tracked multipath component over consecutive positions.
struct PathBin {
  int id = 0;
  int birth_rx = 0;
  int death_rx = 0;   // last covered position; meaningful when closed
  bool closed = false;
  std::vector<sim::MpcRecord> records;

  int lifespan() const { return static_cast<int>(records.size()); }
  int last_rx() const { return birth_rx + lifespan() - 1; }
  bool covers(int rx) const { return rx >= birth_rx && rx <= last_rx(); }
};

enum class EventKind { kBirth, kDeath };

// Death events carry the first position the bin no longer covers, so that
// alive(n+1) - alive(n) = births(n+1) - deaths(n+1) holds exactly.
struct BirthDeathEvent {
  EventKind kind = EventKind::kBirth;
  int rx_index = 0;
  int bin_id = 0;
};

struct BinningResult {
  std::vector<PathBin> bins;
  std::vector<BirthDeathEvent> events;
  std::vector<int> alive_count;  // per rx position
};

// Per-bin-pair Pearson correlation of the six parameters over the overlap.
// Pairs with overlap below min_overlap are absent.
class CorrelationMatrix {
 public:
  void set(int a, int b, const StdParams& c);
  std::optional<StdParams> get(int a, int b) const;
  const std::map<std::pair<int, int>, StdParams>& entries() const { return entries_; }

 private:
  std::map<std::pair<int, int>, StdParams> entries_;  // keyed by (min, max)
};

StdParams standardize_mpc(const sim::MpcRecord& m, const BinningConfig& config);

// Scaled parameter view aligned with dataset.snapshots[n].mpcs[i].
std::vector<std::vector<StdParams>> standardize_parameters(const sim::ChannelDataset& dataset,
                                                           const BinningConfig& config);

// Normalized sum of absolute per-parameter differences, Eq. style
// d = (1/gamma) * sum_u |a_u - b_u| on standardized records.
double mpc_distance(const StdParams& a, const StdParams& b, const BinningConfig& config);
double mpc_distance(const sim::MpcRecord& a, const sim::MpcRecord& b,
                    const BinningConfig& config);

// Greedy sequential tracker. Each MPC joins the open bin minimizing the
// parameter distance to that bin's latest record when within d_max, with
// one-to-one matching per position resolved by ascending distance; losers
// open new bins and unmatched bins close at the previous position.
BinningResult bin_mpcs(const sim::ChannelDataset& dataset, const BinningConfig& config);

std::optional<StdParams> pairwise_bin_correlation(const PathBin& a, const PathBin& b,
                                                  const BinningConfig& config);

CorrelationMatrix correlation_matrix(const std::vector<PathBin>& bins,
                                     const BinningConfig& config);

// Rebuilds the event list and alive-count series from bin spans alone.
// num_positions extends the alive-count series to the dataset length.
std::pair<std::vector<BirthDeathEvent>, std::vector<int>> birth_death_events(
    const std::vector<PathBin>& bins, int num_positions);

}  // namespace pathbin::track
