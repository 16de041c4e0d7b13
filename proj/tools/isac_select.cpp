// isac-select: joint antenna selection and transmit covariance design.
//
//   isac_select solve       --scenario s.json --mu 0.01 --method dp
//   isac_select sweep       --scenario s.json --mu 0,1e-4,1e-3 --method dp,es --seed 1,2,3
//   isac_select beampattern --scenario s.json --mu 0 --method dp --db
//   isac_select validate    --scenario s.json
//
// Exit codes: 0 success, 2 usage, 3 invalid scenario, 4 search budget
// exceeded, 5 some sweep cells failed.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "isac/isac.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 2, kInvalid = 3, kBudget = 4, kPartial = 5 };

struct Options {
  std::string scenario;
  std::vector<double> mu;
  std::vector<std::string> methods{"dp"};
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::string format = "csv";
  bool rate_only = false;
  bool db = false;
  long long es_budget = isac::kDefaultSearchBudget;
  bool no_timestamp = false;
  int jobs = 1;
  std::string dump_table;
  std::optional<double> tolerance;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path);
    if (!file_) throw isac::Error("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

isac::RunOptions run_options(const Options& o) {
  isac::RunOptions run;
  run.solver.rate_only = o.rate_only;
  run.solver.grad_tolerance = o.tolerance;
  run.es_budget = o.es_budget;
  return run;
}

std::vector<isac::Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<isac::Method> out;
  for (const std::string& n : names) {
    try {
      out.push_back(isac::parse_method(n));
    } catch (const isac::ParseError& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

std::vector<double> mu_list(const Options& o, const isac::ScenarioFile& file) {
  return o.mu.empty() ? file.mu_values : o.mu;
}

void write_rows(const Options& o, const std::vector<isac::TradeoffPoint>& rows) {
  Output out(o.out);
  if (o.format == "json")
    out.stream() << isac::tradeoff_to_json(rows, !o.no_timestamp).dump(2) << '\n';
  else
    isac::write_tradeoff_csv(out.stream(), rows, !o.no_timestamp);
}

int cmd_validate(const Options& o) {
  const isac::ScenarioFile file = isac::load_scenario_file(o.scenario);
  const isac::Scenario& s = file.scenario;
  std::printf("ok: N=%d K=%d M=%d grid=%d targets=%d mu_values=%zu channel=%s\n", s.num_antennas(), s.num_rf_chains,
              s.channel.num_ue_antennas(), s.desired.size(), s.desired.num_targets(), file.mu_values.size(),
              file.explicit_channel ? "explicit" : "seeded");
  return kOk;
}

int cmd_solve(const Options& o) {
  const isac::ScenarioFile file = isac::load_scenario_file(o.scenario);
  const std::vector<double> mus = mu_list(o, file);
  if (mus.size() != 1 && !o.mu.empty()) throw UsageError("solve takes a single --mu value");
  if (o.methods.size() != 1) throw UsageError("solve takes a single --method");
  if (o.seeds.size() > 1) throw UsageError("solve takes at most one --seed");
  const isac::Method method = parse_methods(o.methods).front();
  const std::optional<std::uint64_t> seed = o.seeds.empty() ? file.seed : std::optional(o.seeds.front());
  const isac::Scenario s = file.instantiate(mus.front(), seed);
  const isac::RunOptions run = run_options(o);

  isac::TradeoffPoint row;
  row.mu = s.tradeoff;
  row.method = method;
  row.seed = seed.value_or(0);
  const auto start = std::chrono::steady_clock::now();
  isac::DpTable table;
  const isac::SelectionResult res = method == isac::Method::dp && !o.dump_table.empty()
                                        ? isac::dp_select(s, run.solver, &table, o.jobs)
                                        : isac::run_method(s, method, {run.solver, run.es_budget, o.jobs});
  if (!o.no_timestamp) row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  row.rate_bpcu = res.inner.breakdown.rate_bpcu;
  row.beampattern_mse = res.inner.breakdown.mse_term;
  row.cross_corr = res.inner.breakdown.cross_corr_term;
  row.objective = res.inner.breakdown.scalarized;
  row.inner_solves = res.inner_solve_count;
  row.selection = res.r;
  if (res.duplicate_warning) std::cerr << "warning: selection uses an antenna on more than one RF chain\n";

  if (!o.dump_table.empty()) {
    if (method != isac::Method::dp) throw UsageError("--dump-table needs --method dp");
    Output t(o.dump_table);
    isac::write_dp_table_csv(t.stream(), table);
  }
  write_rows(o, {row});
  return kOk;
}

int cmd_sweep(const Options& o) {
  isac::SweepRequest req;
  req.scenario = isac::load_scenario_file(o.scenario);
  req.mu_values = mu_list(o, req.scenario);
  if (req.mu_values.empty()) throw UsageError("empty mu list");
  req.methods = parse_methods(o.methods);
  req.seeds = o.seeds;
  req.run = run_options(o);
  req.jobs = o.jobs;
  req.record_time = !o.no_timestamp;
  const std::vector<isac::TradeoffPoint> rows = isac::run_sweep(req);
  write_rows(o, rows);
  int failed = 0;
  for (const auto& r : rows)
    if (!r.ok) {
      ++failed;
      std::cerr << "cell mu=" << r.mu << " method=" << isac::to_string(r.method) << " seed=" << r.seed
                << " failed: " << r.reason << '\n';
    }
  return failed ? kPartial : kOk;
}

int cmd_beampattern(const Options& o) {
  const isac::ScenarioFile file = isac::load_scenario_file(o.scenario);
  const std::vector<double> mus = mu_list(o, file);
  if (mus.size() != 1 && !o.mu.empty()) throw UsageError("beampattern takes a single --mu value");
  if (o.methods.size() != 1) throw UsageError("beampattern takes a single --method");
  if (o.seeds.size() > 1) throw UsageError("beampattern takes at most one --seed");
  const std::optional<std::uint64_t> seed = o.seeds.empty() ? file.seed : std::optional(o.seeds.front());
  const isac::Scenario s = file.instantiate(mus.front(), seed);
  isac::RunOptions run = run_options(o);
  run.workers = o.jobs;
  const isac::SelectionResult res = isac::run_method(s, parse_methods(o.methods).front(), run);
  const std::vector<isac::BeampatternRow> rows = isac::export_beampattern(res, s);
  Output out(o.out);
  if (o.format == "json")
    out.stream() << isac::beampattern_to_json(rows, o.db, !o.no_timestamp).dump(2) << '\n';
  else
    isac::write_beampattern_csv(out.stream(), rows, o.db, !o.no_timestamp);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint antenna selection and covariance design for ISAC transmitters"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool multi) {
    sub->add_option("--scenario", o.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--mu", o.mu, "Trade-off weight(s); defaults to the file's mu")->delimiter(',');
    sub->add_option("--method", o.methods, multi ? "dp, es or ula (comma list)" : "dp, es or ula")->delimiter(',');
    sub->add_option("--seed", o.seeds, "Channel seed(s) overriding the file")->delimiter(',');
    sub->add_option("--out", o.out, "Output file (default stdout)");
    sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--rate-only", o.rate_only, "Minimize -mu*C only (needs mu > 0)");
    sub->add_option("--es-budget", o.es_budget, "Maximum subsets for exhaustive search")->check(CLI::PositiveNumber);
    sub->add_flag("--no-timestamp", o.no_timestamp, "Omit the timestamp line and zero wall times");
    sub->add_option("--jobs", o.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--tolerance", o.tolerance, "Inner solver stationarity threshold")->check(CLI::PositiveNumber);
  };

  CLI::App* solve = app.add_subcommand("solve", "Solve one scenario with one method");
  add_common(solve, false);
  solve->add_option("--dump-table", o.dump_table, "Write the DP table as CSV");
  CLI::App* sweep = app.add_subcommand("sweep", "Trade-off table over mu, methods and seeds");
  add_common(sweep, true);
  CLI::App* bp = app.add_subcommand("beampattern", "Beampattern table of one solution");
  add_common(bp, false);
  bp->add_flag("--db", o.db, "Power columns in dB");
  CLI::App* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("--scenario", o.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*solve) return cmd_solve(o);
    if (*sweep) return cmd_sweep(o);
    return cmd_beampattern(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const isac::BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return kBudget;
  } catch (const isac::ParseError& e) {
    std::cerr << "invalid scenario: " << e.what() << '\n';
    return kInvalid;
  } catch (const isac::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
