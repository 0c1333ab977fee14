#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pathbin/binning.hpp"
#include "pathbin/features.hpp"
#include "pathbin/predictors/ml.hpp"
#include "pathbin/predictors/nn.hpp"
#include "pathbin/predictors/poisson.hpp"
#include "pathbin/predictors/ws.hpp"
#include "pathbin/raysim.hpp"

namespace pathbin::io {

inline constexpr int kSchemaVersion = 1;

// Shortest text form of a double that parses back to the same value.
std::string format_double(double value);

// A scene file: the simulation parameters plus the tracker settings that
// live under its "binning" key.
struct Scenario {
  sim::ScenarioConfig config;
  track::BinningConfig binning;
};

Scenario load_scenario(const std::filesystem::path& file);
void save_scenario(const Scenario& scenario, const std::filesystem::path& file);

// Stable hex digest of the canonical scenario serialization, echoed into
// report summaries for provenance.
std::string scenario_fingerprint(const Scenario& scenario);

// Dataset directory: mpcs.csv plus a meta.json sidecar carrying the full
// scenario and seed.
void save_dataset(const sim::ChannelDataset& dataset, const track::BinningConfig& binning,
                  const std::filesystem::path& dir);
struct LoadedDataset {
  sim::ChannelDataset dataset;
  track::BinningConfig binning;
};
LoadedDataset load_dataset(const std::filesystem::path& dir);

// Bins directory: bins.csv, events.csv and meta.json. The CSV drops phase
// and ray identity; open bins are listed in the sidecar.
void save_bins(const track::BinningResult& result, const Scenario& scenario,
               const std::filesystem::path& dir);
struct LoadedBins {
  track::BinningResult result;
  Scenario scenario;
};
LoadedBins load_bins(const std::filesystem::path& dir);

void save_feature_matrix(const feat::FeatureMatrix& matrix, const std::filesystem::path& file);
feat::FeatureMatrix load_feature_matrix(const std::filesystem::path& file);

// Sequence samples as JSON lines, one sample per line.
void save_sequences(const std::vector<feat::SequenceSample>& samples,
                    const std::filesystem::path& file);
std::vector<feat::SequenceSample> load_sequences(const std::filesystem::path& file);

void save_ws(const pred::WsModel& model, const std::filesystem::path& file);
pred::WsModel load_ws(const std::filesystem::path& file);

void save_poisson(const pred::PoissonModel& model, const std::filesystem::path& file);
pred::PoissonModel load_poisson(const std::filesystem::path& file);

void save_lda(const pred::LdaModel& model, const std::filesystem::path& file);
pred::LdaModel load_lda(const std::filesystem::path& file);

void save_nb(const pred::NbModel& model, const std::filesystem::path& file);
pred::NbModel load_nb(const std::filesystem::path& file);

void save_rf(const pred::RfModel& model, const std::filesystem::path& file);
pred::RfModel load_rf(const std::filesystem::path& file);

// Network checkpoints: a JSON shape manifest at the given path and the
// flat 64-bit-float parameter block in a sibling .bin file.
void save_lstm(const pred::LstmModel& model, const std::filesystem::path& manifest);
pred::LstmModel load_lstm(const std::filesystem::path& manifest);

void save_cnn(const pred::CnnModel& model, const std::filesystem::path& manifest);
pred::CnnModel load_cnn(const std::filesystem::path& manifest);

void save_training_curve(const std::vector<pred::EpochStats>& curve,
                         const std::filesystem::path& file);

}  // namespace pathbin::io
