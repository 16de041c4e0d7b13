#pragma once

// JSON scenario documents.
//
//   {
//     "geometry": {"num_antennas": 12, "spacing_over_wavelength": 0.5},
//     "num_rf_chains": 8,
//     "channel": {"num_ue_antennas": 4, "noise_variance": 0.01,
//                 "seed": 7 | "explicit_matrix": [[[re, im], ...], ...]},
//     "desired": {"grid_start_deg": -90, "grid_step_deg": 1, "grid_points": 181,
//                 "mainlobes": [{"center_deg": -30, "beamwidth_deg": 15, "level": 1}],
//                 "weights_default": 1, "cross_corr_weight": 1,
//                 "target_angles_deg": [-30, 30],
//                 "values": [...], "weights": [...]},
//     "power": 1.0,
//     "mu": 0.01 | [0, 0.0001, ...]
//   }
//
// `explicit_matrix` is row-major: either a list of M rows of N [re, im]
// pairs, or a flat list of M*N pairs. It takes precedence over `seed`.
// `values` / `weights` optionally replace the lobe description and the
// uniform weight with explicit per-grid-point arrays. Unknown keys are
// rejected.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "isac/error.hpp"
#include "isac/model.hpp"

namespace isac {

/// A parsed scenario document: the validated Scenario for the first μ, plus
/// the pieces a sweep needs to re-instantiate it.
struct ScenarioFile {
  Scenario scenario;
  std::vector<double> mu_values;
  std::optional<std::uint64_t> seed;
  bool explicit_channel = false;

  /// Scenario at the given μ. Seeded channels are redrawn for `seed`; an
  /// explicit matrix is used as-is.
  Scenario instantiate(double mu, std::optional<std::uint64_t> seed_override = std::nullopt) const {
    Scenario s = scenario;
    s.tradeoff = mu;
    if (!explicit_channel && seed_override && seed_override != seed) s = with_channel_seed(std::move(s), *seed_override);
    s.validate();
    return s;
  }
};

namespace detail {

using json = nlohmann::json;

inline void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError(path + ": expected an object");
}

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (std::string_view a : allowed) known = known || item.key() == a;
    if (!known) throw ParseError((path.empty() ? "" : path + ".") + item.key() + ": unknown field");
  }
}

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path + ": expected a number");
  return j.get<double>();
}

inline std::int64_t get_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path + ": expected an integer");
  return j.get<std::int64_t>();
}

inline const json& member(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(path + (path.empty() ? "" : ".") + key + ": required field missing");
  return *it;
}

inline std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

inline std::vector<double> get_number_list(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) throw ParseError(path + ": expected a number or a list of numbers");
  std::vector<double> out;
  for (size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline cdouble get_complex(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ParseError(path + ": expected an [re, im] pair");
  return {get_number(j[0], path), get_number(j[1], path)};
}

inline bool is_pair(const json& j) { return j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(); }

inline CMatrix parse_explicit_matrix(const json& j, int rows, int cols) {
  const std::string path = "channel.explicit_matrix";
  if (!j.is_array()) throw ParseError(path + ": expected an array");
  CMatrix H(rows, cols);
  if (!j.empty() && is_pair(j[0])) {
    if (static_cast<int>(j.size()) != rows * cols)
      throw ValidationError(path, "flat matrix must hold num_ue_antennas * num_antennas pairs");
    for (int m = 0; m < rows; ++m)
      for (int n = 0; n < cols; ++n) H(m, n) = get_complex(j[static_cast<size_t>(m * cols + n)], path);
    return H;
  }
  if (static_cast<int>(j.size()) != rows) throw ValidationError(path, "row count must equal num_ue_antennas");
  for (int m = 0; m < rows; ++m) {
    const json& row = j[static_cast<size_t>(m)];
    if (!row.is_array()) throw ParseError(path + ": rows must be arrays");
    if (static_cast<int>(row.size()) != cols) throw ValidationError(path, "column count must equal num_antennas");
    for (int n = 0; n < cols; ++n) H(m, n) = get_complex(row[static_cast<size_t>(n)], path);
  }
  return H;
}

inline RVector to_rvector(const std::vector<double>& v) {
  RVector out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

}  // namespace detail

inline ScenarioFile parse_scenario(const nlohmann::json& doc) {
  using namespace detail;
  require_object(doc, "scenario");
  reject_unknown(doc, "", {"geometry", "num_rf_chains", "channel", "desired", "power", "mu"});

  ScenarioFile file;
  Scenario& s = file.scenario;

  const json& geom = member(doc, "geometry", "");
  require_object(geom, "geometry");
  reject_unknown(geom, "geometry", {"num_antennas", "spacing_over_wavelength"});
  s.geometry.num_antennas = static_cast<int>(get_integer(member(geom, "num_antennas", "geometry"), "geometry.num_antennas"));
  if (geom.contains("spacing_over_wavelength"))
    s.geometry.spacing_over_wavelength = get_number(geom["spacing_over_wavelength"], "geometry.spacing_over_wavelength");
  s.geometry.validate();

  s.num_rf_chains = static_cast<int>(get_integer(member(doc, "num_rf_chains", ""), "num_rf_chains"));

  const json& ch = member(doc, "channel", "");
  require_object(ch, "channel");
  reject_unknown(ch, "channel", {"num_ue_antennas", "noise_variance", "seed", "explicit_matrix"});
  const int m = static_cast<int>(get_integer(member(ch, "num_ue_antennas", "channel"), "channel.num_ue_antennas"));
  if (m < 1) throw ValidationError("channel.num_ue_antennas", "must be >= 1");
  const double noise = get_number(member(ch, "noise_variance", "channel"), "channel.noise_variance");
  if (!(noise > 0.0)) throw ValidationError("channel.noise_variance", "must be positive");
  if (ch.contains("seed")) {
    const std::int64_t seed = get_integer(ch["seed"], "channel.seed");
    if (seed < 0) throw ValidationError("channel.seed", "must be nonnegative");
    file.seed = static_cast<std::uint64_t>(seed);
  }
  if (ch.contains("explicit_matrix")) {
    s.channel.H = parse_explicit_matrix(ch["explicit_matrix"], m, s.geometry.num_antennas);
    s.channel.noise_variance = noise;
    file.explicit_channel = true;
  } else if (file.seed) {
    s.channel = generate_rayleigh_channel(m, s.geometry.num_antennas, *file.seed, noise);
  } else {
    throw ValidationError("channel", "either seed or explicit_matrix is required");
  }

  const json empty = json::object();
  const json& des = doc.contains("desired") ? doc["desired"] : empty;
  require_object(des, "desired");
  reject_unknown(des, "desired",
                 {"grid_start_deg", "grid_step_deg", "grid_points", "mainlobes", "weights_default",
                  "cross_corr_weight", "target_angles_deg", "values", "weights"});
  AngularGrid grid;
  if (des.contains("grid_start_deg")) grid.start_deg = get_number(des["grid_start_deg"], "desired.grid_start_deg");
  if (des.contains("grid_step_deg")) grid.step_deg = get_number(des["grid_step_deg"], "desired.grid_step_deg");
  if (des.contains("grid_points")) grid.points = static_cast<int>(get_integer(des["grid_points"], "desired.grid_points"));
  if (grid.points < 1) throw ValidationError("desired.grid_points", "must be >= 1");
  std::vector<Mainlobe> lobes;
  if (des.contains("mainlobes")) {
    const json& jl = des["mainlobes"];
    if (!jl.is_array()) throw ParseError("desired.mainlobes: expected an array");
    for (size_t i = 0; i < jl.size(); ++i) {
      const std::string path = "desired.mainlobes[" + std::to_string(i) + "]";
      require_object(jl[i], path);
      reject_unknown(jl[i], path, {"center_deg", "beamwidth_deg", "level"});
      Mainlobe lobe;
      lobe.center_deg = get_number(member(jl[i], "center_deg", path), join(path, "center_deg"));
      lobe.beamwidth_deg = get_number(member(jl[i], "beamwidth_deg", path), join(path, "beamwidth_deg"));
      if (jl[i].contains("level")) lobe.level = get_number(jl[i]["level"], join(path, "level"));
      if (lobe.beamwidth_deg < 0.0) throw ValidationError(join(path, "beamwidth_deg"), "must be nonnegative");
      if (lobe.level < 0.0) throw ValidationError(join(path, "level"), "must be nonnegative");
      lobes.push_back(lobe);
    }
  }
  const double weight = des.contains("weights_default") ? get_number(des["weights_default"], "desired.weights_default") : 1.0;
  if (weight < 0.0) throw ValidationError("desired.weights_default", "must be nonnegative");
  const double omega = des.contains("cross_corr_weight") ? get_number(des["cross_corr_weight"], "desired.cross_corr_weight") : 1.0;
  std::vector<double> targets;
  if (des.contains("target_angles_deg")) {
    if (!des["target_angles_deg"].is_array()) throw ParseError("desired.target_angles_deg: expected an array");
    targets = get_number_list(des["target_angles_deg"], "desired.target_angles_deg");
  }
  s.desired = make_desired_beampattern(grid, lobes, weight, omega, std::move(targets));
  if (des.contains("values")) {
    if (!lobes.empty()) throw ValidationError("desired.values", "cannot be combined with mainlobes");
    s.desired.values = to_rvector(get_number_list(des["values"], "desired.values"));
  }
  if (des.contains("weights")) s.desired.weights = to_rvector(get_number_list(des["weights"], "desired.weights"));

  s.total_power = get_number(member(doc, "power", ""), "power");

  file.mu_values = doc.contains("mu") ? get_number_list(doc["mu"], "mu") : std::vector<double>{0.0};
  if (file.mu_values.empty()) throw ValidationError("mu", "list must not be empty");
  for (double mu : file.mu_values)
    if (!(mu >= 0.0)) throw ValidationError("mu", "values must be >= 0");
  s.tradeoff = file.mu_values.front();

  s.validate();
  return file;
}

inline ScenarioFile parse_scenario_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  return parse_scenario(doc);
}

inline ScenarioFile load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

inline Scenario load_scenario(const std::string& path) { return load_scenario_file(path).scenario; }

/// Self-contained document for `s`: the channel is written explicitly and
/// the desired pattern as per-point arrays, so parsing it yields `s` again.
inline nlohmann::json scenario_to_json(const Scenario& s) {
  using nlohmann::json;
  json H = json::array();
  for (Eigen::Index m = 0; m < s.channel.H.rows(); ++m) {
    json row = json::array();
    for (Eigen::Index n = 0; n < s.channel.H.cols(); ++n) row.push_back({s.channel.H(m, n).real(), s.channel.H(m, n).imag()});
    H.push_back(std::move(row));
  }
  auto to_list = [](const RVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return json{
      {"geometry", {{"num_antennas", s.geometry.num_antennas}, {"spacing_over_wavelength", s.geometry.spacing_over_wavelength}}},
      {"num_rf_chains", s.num_rf_chains},
      {"channel", {{"num_ue_antennas", s.channel.num_ue_antennas()}, {"noise_variance", s.channel.noise_variance}, {"explicit_matrix", H}}},
      {"desired",
       {{"grid_start_deg", s.desired.grid.start_deg},
        {"grid_step_deg", s.desired.grid.step_deg},
        {"grid_points", s.desired.grid.points},
        {"cross_corr_weight", s.desired.cross_corr_weight},
        {"target_angles_deg", s.desired.target_angles_deg},
        {"values", to_list(s.desired.values)},
        {"weights", to_list(s.desired.weights)}}},
      {"power", s.total_power},
      {"mu", s.tradeoff}};
}

inline std::string serialize_scenario(const Scenario& s) { return scenario_to_json(s).dump(2); }

}  // namespace isac
