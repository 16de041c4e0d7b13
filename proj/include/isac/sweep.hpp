#pragma once

// Trade-off sweeps and plot-ready tables.
//
// A sweep runs one selection method per (μ, method, seed) cell and reports a
// TradeoffPoint per cell. Tables are written as CSV or JSON under the
// versioned schema tag "isac-select v1"; numbers carry 17 significant
// digits so they read back exactly.

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "isac/dp_select.hpp"
#include "isac/error.hpp"
#include "isac/inner_solver.hpp"
#include "isac/metrics.hpp"
#include "isac/model.hpp"
#include "isac/parallel.hpp"
#include "isac/scenario_io.hpp"
#include "isac/search.hpp"

namespace isac {

inline constexpr const char* kSchemaTag = "isac-select v1";

enum class Method { dp, es, ula };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::dp: return "dp";
    case Method::es: return "es";
    case Method::ula: return "ula";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  if (name == "dp") return Method::dp;
  if (name == "es") return Method::es;
  if (name == "ula") return Method::ula;
  throw ParseError("unknown method '" + std::string(name) + "' (expected dp, es or ula)");
}

struct TradeoffPoint {
  double mu = 0.0;
  Method method = Method::dp;
  std::uint64_t seed = 0;
  double rate_bpcu = 0.0;
  double beampattern_mse = 0.0;
  double cross_corr = 0.0;
  double objective = 0.0;
  double wall_time_s = 0.0;
  long long inner_solves = 0;
  std::vector<int> selection;  // antenna per RF chain
  bool ok = true;
  std::string reason;  // failure message when !ok

  bool operator==(const TradeoffPoint&) const = default;
};

struct RunOptions {
  SolverConfig solver;
  long long es_budget = kDefaultSearchBudget;
  int workers = 1;  // threads inside one DP / ES run
};

/// Runs one method on `s`. ULA results refer to fixed_ula_scenario(s).
inline SelectionResult run_method(const Scenario& s, Method m, const RunOptions& opt = {}) {
  switch (m) {
    case Method::dp: return dp_select(s, opt.solver, nullptr, opt.workers);
    case Method::es: return exhaustive_search(s, opt.solver, opt.es_budget, opt.workers);
    case Method::ula: return fixed_ula_baseline(s, opt.solver);
  }
  throw Error("unreachable");
}

struct SweepRequest {
  ScenarioFile scenario;
  std::vector<double> mu_values;
  std::vector<Method> methods;
  /// Channel seeds; empty means the scenario's own channel.
  std::vector<std::uint64_t> seeds;
  RunOptions run;
  /// Concurrent cells.
  int jobs = 1;
  bool record_time = true;
};

/// One row per (μ, method, seed), in that nesting order. A failing cell
/// becomes a row with ok = false and the run continues.
inline std::vector<TradeoffPoint> run_sweep(const SweepRequest& req) {
  if (req.mu_values.empty()) throw ValidationError("mu", "sweep needs at least one value");
  if (req.methods.empty()) throw ValidationError("method", "sweep needs at least one method");
  const std::vector<std::optional<std::uint64_t>> seeds = [&] {
    std::vector<std::optional<std::uint64_t>> out;
    for (std::uint64_t s : req.seeds) out.emplace_back(s);
    if (out.empty()) out.emplace_back(std::nullopt);
    return out;
  }();

  std::vector<TradeoffPoint> rows;
  for (double mu : req.mu_values)
    for (Method m : req.methods)
      for (const auto& seed : seeds) {
        TradeoffPoint row;
        row.mu = mu;
        row.method = m;
        row.seed = seed.value_or(req.scenario.seed.value_or(0));
        rows.push_back(row);
      }

  parallel_for(static_cast<int>(rows.size()), req.jobs, [&](int i) {
    TradeoffPoint& row = rows[static_cast<size_t>(i)];
    const size_t seed_slot = static_cast<size_t>(i) % seeds.size();
    const auto start = std::chrono::steady_clock::now();
    try {
      const Scenario s = req.scenario.instantiate(row.mu, seeds[seed_slot]);
      const SelectionResult res = run_method(s, row.method, req.run);
      const ObjectiveBreakdown& b = res.inner.breakdown;
      row.rate_bpcu = b.rate_bpcu;
      row.beampattern_mse = b.mse_term;
      row.cross_corr = b.cross_corr_term;
      row.objective = b.scalarized;
      row.inner_solves = res.inner_solve_count;
      row.selection = res.r;
    } catch (const std::exception& e) {
      row.ok = false;
      row.reason = e.what();
    }
    if (req.record_time) row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  return rows;
}

struct BeampatternRow {
  double theta_deg = 0.0;
  double power = 0.0;           // P(θ)
  double scaled_desired = 0.0;  // α P_d(θ)
};

/// P(θ_g) and α P_d(θ_g) over the desired-pattern grid. A fixed-ULA result
/// (selection over K antennas) is evaluated on fixed_ula_scenario(s).
inline std::vector<BeampatternRow> export_beampattern(const SelectionResult& res, const Scenario& s) {
  const Scenario eval = res.p.size() == s.num_antennas() ? s : fixed_ula_scenario(s);
  if (res.p.size() != eval.num_antennas()) throw DimensionError("export_beampattern: result does not match scenario");
  const RVector P = beampattern(res.p, res.inner.R.matrix(), eval.desired, eval.geometry);
  std::vector<BeampatternRow> rows(static_cast<size_t>(eval.desired.size()));
  for (int g = 0; g < eval.desired.size(); ++g) {
    rows[static_cast<size_t>(g)] = {eval.desired.grid.angle_deg(g), P(g), res.inner.alpha * eval.desired.values(g)};
  }
  return rows;
}

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string join_selection(const std::vector<int>& sel) {
  std::string out;
  for (size_t i = 0; i < sel.size(); ++i) out += (i ? " " : "") + std::to_string(sel[i]);
  return out;
}

inline std::vector<int> split_selection(const std::string& text) {
  std::vector<int> out;
  std::istringstream in(text);
  for (int v; in >> v;) out.push_back(v);
  return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  out.push_back(std::move(field));
  return out;
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

inline double db(double power) { return 10.0 * std::log10(std::max(power, 1e-30)); }

}  // namespace detail

inline constexpr const char* kTradeoffHeader =
    "mu,method,seed,rate_bpcu,beampattern_mse,cross_corr,objective,wall_time_s,inner_solves,selection,status,reason";

inline void write_tradeoff_csv(std::ostream& os, const std::vector<TradeoffPoint>& rows, bool timestamp = true) {
  os << "# " << kSchemaTag << '\n';
  if (timestamp) os << "# generated " << detail::utc_timestamp() << '\n';
  os << kTradeoffHeader << '\n';
  using detail::fmt17;
  for (const TradeoffPoint& r : rows) {
    os << fmt17(r.mu) << ',' << to_string(r.method) << ',' << r.seed << ',' << fmt17(r.rate_bpcu) << ','
       << fmt17(r.beampattern_mse) << ',' << fmt17(r.cross_corr) << ',' << fmt17(r.objective) << ','
       << fmt17(r.wall_time_s) << ',' << r.inner_solves << ',' << detail::join_selection(r.selection) << ','
       << (r.ok ? "ok" : "failed") << ',' << detail::csv_quote(r.reason) << '\n';
  }
}

inline std::vector<TradeoffPoint> read_tradeoff_csv(std::istream& in) {
  std::vector<TradeoffPoint> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kTradeoffHeader) throw ParseError("trade-off CSV: unexpected header");
      header_seen = true;
      continue;
    }
    const std::vector<std::string> f = detail::split_csv_line(line);
    if (f.size() != 12) throw ParseError("trade-off CSV: expected 12 columns");
    TradeoffPoint r;
    r.mu = std::stod(f[0]);
    r.method = parse_method(f[1]);
    r.seed = std::stoull(f[2]);
    r.rate_bpcu = std::stod(f[3]);
    r.beampattern_mse = std::stod(f[4]);
    r.cross_corr = std::stod(f[5]);
    r.objective = std::stod(f[6]);
    r.wall_time_s = std::stod(f[7]);
    r.inner_solves = std::stoll(f[8]);
    r.selection = detail::split_selection(f[9]);
    r.ok = f[10] == "ok";
    r.reason = f[11];
    rows.push_back(std::move(r));
  }
  return rows;
}

inline nlohmann::json tradeoff_to_json(const std::vector<TradeoffPoint>& rows, bool timestamp = true) {
  nlohmann::json out = {{"schema", kSchemaTag}};
  if (timestamp) out["generated"] = detail::utc_timestamp();
  nlohmann::json list = nlohmann::json::array();
  for (const TradeoffPoint& r : rows) {
    list.push_back({{"mu", r.mu},
                    {"method", to_string(r.method)},
                    {"seed", r.seed},
                    {"rate_bpcu", r.rate_bpcu},
                    {"beampattern_mse", r.beampattern_mse},
                    {"cross_corr", r.cross_corr},
                    {"objective", r.objective},
                    {"wall_time_s", r.wall_time_s},
                    {"inner_solves", r.inner_solves},
                    {"selection", r.selection},
                    {"status", r.ok ? "ok" : "failed"},
                    {"reason", r.reason}});
  }
  out["rows"] = std::move(list);
  return out;
}

inline std::vector<TradeoffPoint> tradeoff_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("schema", "") != kSchemaTag) throw ParseError("trade-off JSON: missing schema tag");
  std::vector<TradeoffPoint> rows;
  try {
    for (const auto& j : doc.at("rows")) {
      TradeoffPoint r;
      r.mu = j.at("mu").get<double>();
      r.method = parse_method(j.at("method").get<std::string>());
      r.seed = j.at("seed").get<std::uint64_t>();
      r.rate_bpcu = j.at("rate_bpcu").get<double>();
      r.beampattern_mse = j.at("beampattern_mse").get<double>();
      r.cross_corr = j.at("cross_corr").get<double>();
      r.objective = j.at("objective").get<double>();
      r.wall_time_s = j.at("wall_time_s").get<double>();
      r.inner_solves = j.at("inner_solves").get<long long>();
      r.selection = j.at("selection").get<std::vector<int>>();
      r.ok = j.at("status").get<std::string>() == "ok";
      r.reason = j.at("reason").get<std::string>();
      rows.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("trade-off JSON: ") + e.what());
  }
  return rows;
}

inline void write_beampattern_csv(std::ostream& os, const std::vector<BeampatternRow>& rows, bool in_db = false,
                                  bool timestamp = true) {
  os << "# " << kSchemaTag << '\n';
  if (timestamp) os << "# generated " << detail::utc_timestamp() << '\n';
  os << (in_db ? "theta_deg,power_db,scaled_desired_db\n" : "theta_deg,power,scaled_desired\n");
  for (const BeampatternRow& r : rows) {
    const double p = in_db ? detail::db(r.power) : r.power;
    const double d = in_db ? detail::db(r.scaled_desired) : r.scaled_desired;
    os << detail::fmt17(r.theta_deg) << ',' << detail::fmt17(p) << ',' << detail::fmt17(d) << '\n';
  }
}

inline nlohmann::json beampattern_to_json(const std::vector<BeampatternRow>& rows, bool in_db = false,
                                          bool timestamp = true) {
  nlohmann::json out = {{"schema", kSchemaTag}, {"units", in_db ? "dB" : "linear"}};
  if (timestamp) out["generated"] = detail::utc_timestamp();
  nlohmann::json list = nlohmann::json::array();
  for (const BeampatternRow& r : rows) {
    list.push_back({{"theta_deg", r.theta_deg},
                    {"power", in_db ? detail::db(r.power) : r.power},
                    {"scaled_desired", in_db ? detail::db(r.scaled_desired) : r.scaled_desired}});
  }
  out["rows"] = std::move(list);
  return out;
}

}  // namespace isac
