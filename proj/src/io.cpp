#include "pathbin/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace pathbin::io {
namespace {

using nlohmann::json;

// Priors of empty classes are -inf, which JSON cannot carry.
constexpr double kLogFloor = -1e300;

std::ifstream open_in(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& file, bool binary = false) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  return out;
}

json parse_file(const std::filesystem::path& file) {
  auto in = open_in(file);
  json j;
  in >> j;
  return j;
}

void check_schema(const json& j, const std::filesystem::path& file) {
  if (j.value("schema_version", -1) != kSchemaVersion)
    throw std::runtime_error("unsupported schema version in " + file.string());
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double to_double(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return {};
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    m.row(r) = vector_from(j.at(static_cast<std::size_t>(r))).transpose();
  return m;
}

json binning_json(const track::BinningConfig& b) {
  return {{"scales", b.scales}, {"gamma", b.gamma},           {"d_max", b.d_max},
          {"lookback", b.lookback}, {"min_overlap", b.min_overlap}, {"rho_min", b.rho_min}};
}

track::BinningConfig binning_from(const json& j) {
  track::BinningConfig b;
  if (j.contains("scales")) b.scales = j.at("scales").get<track::StdParams>();
  b.gamma = j.value("gamma", b.gamma);
  b.d_max = j.value("d_max", b.d_max);
  b.lookback = j.value("lookback", b.lookback);
  b.min_overlap = j.value("min_overlap", b.min_overlap);
  b.rho_min = j.value("rho_min", b.rho_min);
  return b;
}

json scenario_json(const Scenario& s) {
  json scatterers = json::array();
  for (const auto& sc : s.config.scatterers)
    scatterers.push_back({{"center", vec3_json(sc.center)}, {"extents", vec3_json(sc.extents)}});
  return {{"schema_version", kSchemaVersion},
          {"carrier_frequency_hz", s.config.carrier_frequency_hz},
          {"tx_position", vec3_json(s.config.tx_position)},
          {"trajectory_start", vec3_json(s.config.trajectory_start)},
          {"trajectory_end", vec3_json(s.config.trajectory_end)},
          {"num_positions", s.config.num_positions},
          {"uav_velocity_mps", s.config.uav_velocity_mps},
          {"ground_permittivity", s.config.ground_permittivity},
          {"scatterer_permittivity", s.config.scatterer_permittivity},
          {"power_threshold_dbm", s.config.power_threshold_dbm},
          {"tx_power_dbm", s.config.tx_power_dbm},
          {"rng_seed", s.config.rng_seed},
          {"scatterers", scatterers},
          {"binning", binning_json(s.binning)}};
}

Scenario scenario_from(const json& j) {
  Scenario s;
  auto& c = s.config;
  c.carrier_frequency_hz = j.value("carrier_frequency_hz", c.carrier_frequency_hz);
  if (j.contains("tx_position")) c.tx_position = vec3_from(j.at("tx_position"));
  if (j.contains("trajectory_start")) c.trajectory_start = vec3_from(j.at("trajectory_start"));
  if (j.contains("trajectory_end")) c.trajectory_end = vec3_from(j.at("trajectory_end"));
  c.num_positions = j.value("num_positions", c.num_positions);
  c.uav_velocity_mps = j.value("uav_velocity_mps", c.uav_velocity_mps);
  c.ground_permittivity = j.value("ground_permittivity", c.ground_permittivity);
  c.scatterer_permittivity = j.value("scatterer_permittivity", c.scatterer_permittivity);
  c.power_threshold_dbm = j.value("power_threshold_dbm", c.power_threshold_dbm);
  c.tx_power_dbm = j.value("tx_power_dbm", c.tx_power_dbm);
  c.rng_seed = j.value("rng_seed", c.rng_seed);
  for (const auto& sc : j.value("scatterers", json::array()))
    c.scatterers.push_back({vec3_from(sc.at("center")), vec3_from(sc.at("extents"))});
  if (j.contains("binning")) s.binning = binning_from(j.at("binning"));
  return s;
}

json class_binning_json(const pred::ClassBinning& cb) {
  return {{"width", cb.width()}, {"values", cb.values()}, {"keys", cb.keys()}};
}

pred::ClassBinning class_binning_from(const json& j) {
  return pred::ClassBinning::restore(j.at("width").get<double>(),
                                     j.at("values").get<std::vector<double>>(),
                                     j.at("keys").get<std::vector<long>>());
}

json priors_json(const Eigen::VectorXd& log_priors) {
  json a = json::array();
  for (Eigen::Index i = 0; i < log_priors.size(); ++i)
    a.push_back(std::max(log_priors(i), kLogFloor));
  return a;
}

void check_method(const json& j, const char* method, const std::filesystem::path& file) {
  check_schema(j, file);
  if (j.value("method", "") != method)
    throw std::runtime_error(std::string("expected a ") + method + " model in " + file.string());
}

void write_params_bin(const std::filesystem::path& file, const Eigen::MatrixXd& W,
                      const Eigen::VectorXd& head) {
  auto out = open_out(file, true);
  out.write(reinterpret_cast<const char*>(W.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(W.size())));
  out.write(reinterpret_cast<const char*>(head.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(head.size())));
}

void read_params_bin(const std::filesystem::path& file, Eigen::MatrixXd& W,
                     Eigen::VectorXd& head) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  in.read(reinterpret_cast<char*>(W.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(W.size())));
  in.read(reinterpret_cast<char*>(head.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(head.size())));
  if (!in) throw std::runtime_error("short parameter file " + file.string());
}

json normalizer_json(const pred::Normalizer& n) {
  return {{"mean", vector_json(n.mean)},
          {"scale", vector_json(n.scale)},
          {"label_mean", n.label_mean},
          {"label_scale", n.label_scale}};
}

pred::Normalizer normalizer_from(const json& j) {
  pred::Normalizer n;
  n.mean = vector_from(j.at("mean"));
  n.scale = vector_from(j.at("scale"));
  n.label_mean = j.at("label_mean").get<double>();
  n.label_scale = j.at("label_scale").get<double>();
  return n;
}

std::filesystem::path sibling_bin(const std::filesystem::path& manifest) {
  auto p = manifest;
  p.replace_extension(".bin");
  return p;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

Scenario load_scenario(const std::filesystem::path& file) {
  json j = parse_file(file);
  check_schema(j, file);
  Scenario s = scenario_from(j);
  s.config.validate();
  s.binning.validate();
  return s;
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& file) {
  open_out(file) << scenario_json(scenario).dump(2) << "\n";
}

std::string scenario_fingerprint(const Scenario& scenario) {
  std::string canon = scenario_json(scenario).dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_dataset(const sim::ChannelDataset& dataset, const track::BinningConfig& binning,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto csv = open_out(dir / "mpcs.csv");
  csv << "rx_index,path_id,power_dbm,alpha,tau_s,theta_t,phi_t,theta_r,phi_r,phase\n";
  for (const auto& snap : dataset.snapshots) {
    for (const auto& m : snap.mpcs) {
      csv << m.rx_index << ',' << m.true_ray_id << ',' << format_double(m.power_dbm) << ','
          << format_double(m.alpha) << ',' << format_double(m.delay_s) << ','
          << format_double(m.aod_elevation_rad) << ',' << format_double(m.aod_azimuth_rad) << ','
          << format_double(m.aoa_elevation_rad) << ',' << format_double(m.aoa_azimuth_rad) << ','
          << format_double(m.phase_rad) << "\n";
    }
  }
  json meta = {{"schema_version", kSchemaVersion},
               {"scenario", scenario_json({dataset.config, binning})}};
  open_out(dir / "meta.json") << meta.dump(2) << "\n";
}

LoadedDataset load_dataset(const std::filesystem::path& dir) {
  json meta = parse_file(dir / "meta.json");
  check_schema(meta, dir / "meta.json");
  Scenario scenario = scenario_from(meta.at("scenario"));
  scenario.config.validate();

  LoadedDataset out;
  out.binning = scenario.binning;
  out.dataset.config = scenario.config;
  auto positions = sim::build_rx_positions(scenario.config);
  out.dataset.snapshots.resize(positions.size());
  for (std::size_t n = 0; n < positions.size(); ++n) {
    out.dataset.snapshots[n].rx_index = static_cast<int>(n);
    out.dataset.snapshots[n].rx_position = positions[n];
  }

  auto in = open_in(dir / "mpcs.csv");
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != 10) throw std::runtime_error("malformed mpcs.csv row");
    sim::MpcRecord m;
    m.rx_index = std::stoi(cells[0]);
    m.true_ray_id = std::stoull(cells[1]);
    m.power_dbm = to_double(cells[2]);
    m.alpha = to_double(cells[3]);
    m.delay_s = to_double(cells[4]);
    m.aod_elevation_rad = to_double(cells[5]);
    m.aod_azimuth_rad = to_double(cells[6]);
    m.aoa_elevation_rad = to_double(cells[7]);
    m.aoa_azimuth_rad = to_double(cells[8]);
    m.phase_rad = to_double(cells[9]);
    if (m.rx_index < 0 || m.rx_index >= static_cast<int>(positions.size()))
      throw std::runtime_error("rx_index out of range in mpcs.csv");
    out.dataset.snapshots[static_cast<std::size_t>(m.rx_index)].mpcs.push_back(m);
  }
  return out;
}

void save_bins(const track::BinningResult& result, const Scenario& scenario,
               const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto csv = open_out(dir / "bins.csv");
  csv << "bin_id,rx_index,power_dbm,alpha,tau_s,theta_t,phi_t,theta_r,phi_r\n";
  json open_bins = json::array();
  for (const auto& bin : result.bins) {
    if (!bin.closed) open_bins.push_back(bin.id);
    for (const auto& m : bin.records) {
      csv << bin.id << ',' << m.rx_index << ',' << format_double(m.power_dbm) << ','
          << format_double(m.alpha) << ',' << format_double(m.delay_s) << ','
          << format_double(m.aod_elevation_rad) << ',' << format_double(m.aod_azimuth_rad) << ','
          << format_double(m.aoa_elevation_rad) << ',' << format_double(m.aoa_azimuth_rad)
          << "\n";
    }
  }
  auto events = open_out(dir / "events.csv");
  events << "kind,rx_index,bin_id\n";
  for (const auto& e : result.events)
    events << (e.kind == track::EventKind::kBirth ? "birth" : "death") << ',' << e.rx_index << ','
           << e.bin_id << "\n";
  json meta = {{"schema_version", kSchemaVersion},
               {"scenario", scenario_json(scenario)},
               {"open_bins", open_bins},
               {"alive_count", result.alive_count}};
  open_out(dir / "meta.json") << meta.dump(2) << "\n";
}

LoadedBins load_bins(const std::filesystem::path& dir) {
  json meta = parse_file(dir / "meta.json");
  check_schema(meta, dir / "meta.json");
  LoadedBins out;
  out.scenario = scenario_from(meta.at("scenario"));
  out.result.alive_count = meta.at("alive_count").get<std::vector<int>>();
  std::set<int> open(meta.at("open_bins").begin(), meta.at("open_bins").end());

  auto in = open_in(dir / "bins.csv");
  std::string line;
  std::getline(in, line);
  std::map<int, track::PathBin> bins;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != 9) throw std::runtime_error("malformed bins.csv row");
    int id = std::stoi(cells[0]);
    sim::MpcRecord m;
    m.rx_index = std::stoi(cells[1]);
    m.power_dbm = to_double(cells[2]);
    m.alpha = to_double(cells[3]);
    m.delay_s = to_double(cells[4]);
    m.aod_elevation_rad = to_double(cells[5]);
    m.aod_azimuth_rad = to_double(cells[6]);
    m.aoa_elevation_rad = to_double(cells[7]);
    m.aoa_azimuth_rad = to_double(cells[8]);
    auto [it, fresh] = bins.try_emplace(id);
    if (fresh) {
      it->second.id = id;
      it->second.birth_rx = m.rx_index;
    }
    it->second.records.push_back(m);
  }
  for (auto& [id, bin] : bins) {
    bin.closed = open.find(id) == open.end();
    bin.death_rx = bin.last_rx();
    out.result.bins.push_back(std::move(bin));
  }

  auto ev = open_in(dir / "events.csv");
  std::getline(ev, line);
  while (std::getline(ev, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != 3) throw std::runtime_error("malformed events.csv row");
    track::BirthDeathEvent e;
    e.kind = cells[0] == "birth" ? track::EventKind::kBirth : track::EventKind::kDeath;
    e.rx_index = std::stoi(cells[1]);
    e.bin_id = std::stoi(cells[2]);
    out.result.events.push_back(e);
  }
  return out;
}

void save_feature_matrix(const feat::FeatureMatrix& matrix, const std::filesystem::path& file) {
  auto csv = open_out(file);
  csv << "var_power,var_delay,var_theta_t,var_phi_t,var_theta_r,var_phi_r,"
         "n_pos_corr,n_neg_corr,rel_concurrency,lifespan\n";
  for (Eigen::Index r = 0; r < matrix.V.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.V.cols(); ++c) csv << format_double(matrix.V(r, c)) << ',';
    csv << format_double(matrix.X(r)) << "\n";
  }
}

feat::FeatureMatrix load_feature_matrix(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::string line;
  std::getline(in, line);
  std::vector<std::array<double, 10>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != 10) throw std::runtime_error("malformed feature row");
    std::array<double, 10> row{};
    for (std::size_t i = 0; i < 10; ++i) row[i] = to_double(cells[i]);
    rows.push_back(row);
  }
  feat::FeatureMatrix out;
  out.V.resize(static_cast<Eigen::Index>(rows.size()), feat::kNumFeatures);
  out.X.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < feat::kNumFeatures; ++c)
      out.V(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    out.X(static_cast<Eigen::Index>(r)) = rows[r][9];
    out.bin_ids.push_back(static_cast<int>(r));
  }
  return out;
}

void save_sequences(const std::vector<feat::SequenceSample>& samples,
                    const std::filesystem::path& file) {
  auto out = open_out(file);
  for (const auto& s : samples) {
    json j = {{"bin_id", s.bin_id},
              {"label", s.label},
              {"covered", s.covered},
              {"matrix", matrix_json(s.matrix)}};
    out << j.dump() << "\n";
  }
}

std::vector<feat::SequenceSample> load_sequences(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::vector<feat::SequenceSample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    feat::SequenceSample s;
    s.bin_id = j.at("bin_id").get<int>();
    s.label = j.at("label").get<double>();
    s.covered = j.at("covered").get<int>();
    s.matrix = matrix_from(j.at("matrix"));
    out.push_back(std::move(s));
  }
  return out;
}

void save_ws(const pred::WsModel& model, const std::filesystem::path& file) {
  json j = {{"schema_version", kSchemaVersion},
            {"method", "ws"},
            {"weights", vector_json(model.weights)},
            {"ridge_used", model.ridge_used},
            {"ridge_lambda", model.ridge_lambda},
            {"replicates", model.replicates}};
  open_out(file) << j.dump(2) << "\n";
}

pred::WsModel load_ws(const std::filesystem::path& file) {
  json j = parse_file(file);
  check_method(j, "ws", file);
  pred::WsModel m;
  m.weights = vector_from(j.at("weights"));
  m.ridge_used = j.at("ridge_used").get<bool>();
  m.ridge_lambda = j.at("ridge_lambda").get<double>();
  m.replicates = j.at("replicates").get<int>();
  return m;
}

void save_poisson(const pred::PoissonModel& model, const std::filesystem::path& file) {
  json j = {{"schema_version", kSchemaVersion},
            {"method", "poisson"},
            {"birth_rate", model.birth_rate},
            {"death_rate", model.death_rate},
            {"death_rate_per_position", model.death_rate_per_position},
            {"delta_n", model.delta_n},
            {"births", model.births},
            {"deaths", model.deaths},
            {"exposure", model.exposure},
            {"positions", model.positions}};
  open_out(file) << j.dump(2) << "\n";
}

pred::PoissonModel load_poisson(const std::filesystem::path& file) {
  json j = parse_file(file);
  check_method(j, "poisson", file);
  pred::PoissonModel m;
  m.birth_rate = j.at("birth_rate").get<double>();
  m.death_rate = j.at("death_rate").get<double>();
  m.death_rate_per_position = j.at("death_rate_per_position").get<double>();
  m.delta_n = j.at("delta_n").get<double>();
  m.births = j.at("births").get<long long>();
  m.deaths = j.at("deaths").get<long long>();
  m.exposure = j.at("exposure").get<long long>();
  m.positions = j.at("positions").get<int>();
  return m;
}

void save_lda(const pred::LdaModel& model, const std::filesystem::path& file) {
  json j = {{"schema_version", kSchemaVersion},
            {"method", "lda"},
            {"classes", class_binning_json(model.classes)},
            {"means", matrix_json(model.means)},
            {"cov_inv", matrix_json(model.cov_inv)},
            {"log_priors", priors_json(model.log_priors)},
            {"regularized", model.regularized},
            {"single_class", model.single_class}};
  open_out(file) << j.dump(2) << "\n";
}

pred::LdaModel load_lda(const std::filesystem::path& file) {
  json j = parse_file(file);
  check_method(j, "lda", file);
  pred::LdaModel m;
  m.classes = class_binning_from(j.at("classes"));
  m.means = matrix_from(j.at("means"));
  m.cov_inv = matrix_from(j.at("cov_inv"));
  m.log_priors = vector_from(j.at("log_priors"));
  m.regularized = j.at("regularized").get<bool>();
  m.single_class = j.at("single_class").get<bool>();
  return m;
}

void save_nb(const pred::NbModel& model, const std::filesystem::path& file) {
  json j = {{"schema_version", kSchemaVersion},
            {"method", "nb"},
            {"classes", class_binning_json(model.classes)},
            {"means", matrix_json(model.means)},
            {"variances", matrix_json(model.variances)},
            {"log_priors", priors_json(model.log_priors)},
            {"single_class", model.single_class}};
  open_out(file) << j.dump(2) << "\n";
}

pred::NbModel load_nb(const std::filesystem::path& file) {
  json j = parse_file(file);
  check_method(j, "nb", file);
  pred::NbModel m;
  m.classes = class_binning_from(j.at("classes"));
  m.means = matrix_from(j.at("means"));
  m.variances = matrix_from(j.at("variances"));
  m.log_priors = vector_from(j.at("log_priors"));
  m.single_class = j.at("single_class").get<bool>();
  return m;
}

void save_rf(const pred::RfModel& model, const std::filesystem::path& file) {
  json trees = json::array();
  for (const auto& tree : model.trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes)
      nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.class_idx}));
    trees.push_back(nodes);
  }
  json j = {{"schema_version", kSchemaVersion},
            {"method", "rf"},
            {"classes", class_binning_json(model.classes)},
            {"num_trees", model.config.num_trees},
            {"features_per_split", model.config.features_per_split},
            {"min_leaf", model.config.min_leaf},
            {"seed", model.config.seed},
            {"split_evaluations", model.split_evaluations},
            {"trees", trees},
            {"oob_indices", model.oob_indices}};
  open_out(file) << j.dump() << "\n";
}

pred::RfModel load_rf(const std::filesystem::path& file) {
  json j = parse_file(file);
  check_method(j, "rf", file);
  pred::RfModel m;
  m.classes = class_binning_from(j.at("classes"));
  m.config.num_trees = j.at("num_trees").get<int>();
  m.config.features_per_split = j.at("features_per_split").get<int>();
  m.config.min_leaf = j.at("min_leaf").get<int>();
  m.config.seed = j.at("seed").get<std::uint64_t>();
  m.split_evaluations = j.at("split_evaluations").get<long long>();
  for (const auto& tj : j.at("trees")) {
    pred::RfTree tree;
    for (const auto& nj : tj) {
      pred::RfNode n;
      n.feature = nj.at(0).get<int>();
      n.threshold = nj.at(1).get<double>();
      n.left = nj.at(2).get<int>();
      n.right = nj.at(3).get<int>();
      n.class_idx = nj.at(4).get<int>();
      tree.nodes.push_back(n);
    }
    m.trees.push_back(std::move(tree));
  }
  m.oob_indices = j.at("oob_indices").get<std::vector<std::vector<int>>>();
  return m;
}

void save_lstm(const pred::LstmModel& model, const std::filesystem::path& manifest) {
  auto bin = sibling_bin(manifest);
  write_params_bin(bin, model.W, model.head);
  json j = {{"schema_version", kSchemaVersion},
            {"method", "lstm"},
            {"input_size", model.input_size},
            {"hidden_size", model.hidden_size},
            {"w_rows", model.W.rows()},
            {"w_cols", model.W.cols()},
            {"head_size", model.head.size()},
            {"norm", normalizer_json(model.norm)},
            {"cell_steps", model.cell_steps},
            {"params_file", bin.filename().string()}};
  open_out(manifest) << j.dump(2) << "\n";
}

pred::LstmModel load_lstm(const std::filesystem::path& manifest) {
  json j = parse_file(manifest);
  check_method(j, "lstm", manifest);
  pred::LstmModel m;
  m.input_size = j.at("input_size").get<int>();
  m.hidden_size = j.at("hidden_size").get<int>();
  m.W.resize(j.at("w_rows").get<Eigen::Index>(), j.at("w_cols").get<Eigen::Index>());
  m.head.resize(j.at("head_size").get<Eigen::Index>());
  m.norm = normalizer_from(j.at("norm"));
  m.cell_steps = j.at("cell_steps").get<long long>();
  read_params_bin(manifest.parent_path() / j.at("params_file").get<std::string>(), m.W, m.head);
  return m;
}

void save_cnn(const pred::CnnModel& model, const std::filesystem::path& manifest) {
  auto bin = sibling_bin(manifest);
  write_params_bin(bin, model.W, model.head);
  json j = {{"schema_version", kSchemaVersion},
            {"method", "cnn"},
            {"input_channels", model.input_channels},
            {"filters", model.filters},
            {"kernel", model.kernel},
            {"w_rows", model.W.rows()},
            {"w_cols", model.W.cols()},
            {"head_size", model.head.size()},
            {"norm", normalizer_json(model.norm)},
            {"conv_steps", model.conv_steps},
            {"params_file", bin.filename().string()}};
  open_out(manifest) << j.dump(2) << "\n";
}

pred::CnnModel load_cnn(const std::filesystem::path& manifest) {
  json j = parse_file(manifest);
  check_method(j, "cnn", manifest);
  pred::CnnModel m;
  m.input_channels = j.at("input_channels").get<int>();
  m.filters = j.at("filters").get<int>();
  m.kernel = j.at("kernel").get<int>();
  m.W.resize(j.at("w_rows").get<Eigen::Index>(), j.at("w_cols").get<Eigen::Index>());
  m.head.resize(j.at("head_size").get<Eigen::Index>());
  m.norm = normalizer_from(j.at("norm"));
  m.conv_steps = j.at("conv_steps").get<long long>();
  read_params_bin(manifest.parent_path() / j.at("params_file").get<std::string>(), m.W, m.head);
  return m;
}

void save_training_curve(const std::vector<pred::EpochStats>& curve,
                         const std::filesystem::path& file) {
  auto csv = open_out(file);
  csv << "epoch,train_loss,validation_mae\n";
  for (const auto& e : curve)
    csv << e.epoch << ',' << format_double(e.train_loss) << ','
        << format_double(e.validation_mae) << "\n";
}

}  // namespace pathbin::io
