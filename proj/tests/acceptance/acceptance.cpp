// Acceptance batch: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Every threshold is a named constant below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "isac/isac.hpp"
#include "test_support.hpp"

using namespace isac;
using namespace isac::testing;

namespace {

const std::vector<double> kMuValues{0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0};
constexpr int kSeeds = 20;
constexpr std::uint64_t kFirstSeed = 1;

// 1
constexpr long long kSetup1DpSolves = 144 * 7 + 1;
constexpr long long kSetup1EsSolves = 495;
constexpr double kCountRuntimeLimitS = 600.0;
// 2
constexpr double kDominanceSlack = 1e-9;  // relative, ES ≤ DP
constexpr double kMedianGapLimit = 0.01;
constexpr double kSupportMatchFraction = 0.5;
// 3
constexpr double kBeatsUlaFraction = 0.9;
// 4
constexpr double kWaterFillingTolBpcu = 1e-3;
constexpr int kRateOnlyFixtures = 20;
// 5
constexpr int kGradientDirections = 50;
constexpr int kGradientFixturesPerMu = 3;
constexpr double kFdStep = 1e-5;
constexpr double kFdRelTol = 1e-4;
// 6
constexpr int kProjectionInputs = 100;
constexpr double kProjectionTol = 1e-8;
constexpr double kIdempotenceTol = 1e-12;
// 7
constexpr int kMonotoneSeeds = 5;
constexpr double kMonotoneSlack = 1e-6;
constexpr double kMonotoneSolverTol = 1e-10;
// 8
constexpr double kMainlobePowerFraction = 0.6;
constexpr double kMseBeatsUlaFraction = 0.9;
// 9
constexpr double kRateBeatsUlaFraction = 0.9;
constexpr double kMedianRateGapBpcu = 0.1;
// 10
constexpr long long kSetup2DpSolves = 400 * 11 + 1;
constexpr double kSetup2RuntimeLimitS = 1800.0;

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<int> support(const SelectionResult& r) { return r.p.selected_indices(); }

struct Cell {
  std::uint64_t seed;
  double mu;
  SelectionResult dp, es, ula;
};

// Shared by criteria 2, 3, 8 and 9.
std::vector<Cell> run_batch() {
  std::vector<Cell> cells;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < kSeeds; ++i) {
    const std::uint64_t seed = kFirstSeed + static_cast<std::uint64_t>(i);
    for (double mu : kMuValues) {
      const Scenario s = make_setup1(seed, mu);
      cells.push_back({seed, mu, dp_select(s), exhaustive_search(s), fixed_ula_baseline(s)});
    }
    std::fprintf(stderr, "  batch: seed %llu done (%.0f s)\n", static_cast<unsigned long long>(seed), seconds_since(t0));
  }
  return cells;
}

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = make_setup1(kFirstSeed, 0.01);
  const long long dp = dp_select(s).inner_solve_count;
  const long long es = exhaustive_search(s).inner_solve_count;
  const double t = seconds_since(t0);
  report(1, "solve-count exactness", dp == kSetup1DpSolves && es == kSetup1EsSolves && t < kCountRuntimeLimitS,
         fmt("dp=%lld (want %lld), es=%lld (want %lld), %.1f s (limit %.0f s)", dp, kSetup1DpSolves, es,
             kSetup1EsSolves, t, kCountRuntimeLimitS));
}

void criterion2(const std::vector<Cell>& cells) {
  int violations = 0, matches = 0;
  std::vector<double> gaps;
  double worst = 0.0;
  for (const Cell& c : cells) {
    const double dp = c.dp.inner.breakdown.scalarized, es = c.es.inner.breakdown.scalarized;
    const double scale = std::max(1.0, std::abs(es));
    if (es > dp + kDominanceSlack * scale) ++violations;
    const double gap = (dp - es) / std::abs(es);
    gaps.push_back(gap);
    worst = std::max(worst, gap);
    matches += support(c.dp) == support(c.es);
  }
  const double med = median(gaps);
  const double match_frac = static_cast<double>(matches) / cells.size();
  report(2, "DP close to ES", violations == 0 && med <= kMedianGapLimit && match_frac >= kSupportMatchFraction,
         fmt("%zu cells, dominance violations=%d, median rel gap=%.3g (limit %.2g), max gap=%.3g, "
             "support match=%.1f%% (need %.0f%%)",
             cells.size(), violations, med, kMedianGapLimit, worst, 100 * match_frac, 100 * kSupportMatchFraction));
}

void criterion3(const std::vector<Cell>& cells) {
  int wins = 0;
  for (const Cell& c : cells) wins += c.dp.inner.breakdown.scalarized < c.ula.inner.breakdown.scalarized;
  const double frac = static_cast<double>(wins) / cells.size();
  report(3, "selection beats fixed ULA", frac >= kBeatsUlaFraction,
         fmt("DP strictly better in %d/%zu cells = %.1f%% (need %.0f%%)", wins, cells.size(), 100 * frac,
             100 * kBeatsUlaFraction));
}

void criterion4() {
  std::mt19937_64 rng(404);
  const int Ms[] = {2, 4, 6}, Ks[] = {4, 8, 12};
  double worst = 0.0;
  for (int i = 0; i < kRateOnlyFixtures; ++i) {
    const int M = Ms[i % 3], K = Ks[(i / 3) % 3];
    const Scenario s = make_reference_scenario(12, K, M, 15.0, 4000 + static_cast<std::uint64_t>(i), 1.0);
    const SelectionVector p = SelectionVector::from_indices(12, random_subset(12, K, rng));
    SolverConfig cfg;
    cfg.rate_only = true;
    const double got = solve_inner(p, s, cfg).breakdown.rate_bpcu;
    worst = std::max(worst, std::abs(got - water_filling_rate(p, s.channel, s.total_power).rate_bpcu));
  }
  report(4, "rate-only vs water-filling", worst <= kWaterFillingTolBpcu,
         fmt("%d fixtures, max |rate - capacity| = %.3g bpcu (limit %.0e)", kRateOnlyFixtures, worst,
             kWaterFillingTolBpcu));
}

void criterion5() {
  std::mt19937_64 rng(505);
  double worst = 0.0;
  int checks = 0;
  for (double mu : {0.0, 0.01, 1.0}) {
    for (int f = 0; f < kGradientFixturesPerMu; ++f) {
      const Scenario s = make_setup1(500 + static_cast<std::uint64_t>(f), mu);
      const SelectionVector p = SelectionVector::from_indices(12, random_subset(12, 8, rng));
      const CMatrix R = random_psd(12, s.total_power, rng);
      const double alpha = alpha_star(p, R, s.desired, s.geometry);
      const CMatrix G = objective_gradient(p, alpha, R, s);
      auto value = [&](const CMatrix& X) { return scalarized_objective(p, alpha, X, s).scalarized; };
      for (int d = 0; d < kGradientDirections; ++d) {
        CMatrix D = random_hermitian(12, rng);
        D /= D.norm();
        const double fd = (value(R + kFdStep * D) - value(R - kFdStep * D)) / (2 * kFdStep);
        const double an = (G.conjugate().cwiseProduct(D)).sum().real();
        worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-300}));
        ++checks;
      }
    }
  }
  report(5, "gradient vs finite differences", worst <= kFdRelTol,
         fmt("%d directional checks, mu in {0, 0.01, 1}, h=%.0e, max rel err = %.3g (limit %.0e)", checks, kFdStep,
             worst, kFdRelTol));
}

void criterion6() {
  std::mt19937_64 rng(606);
  double worst = 0.0, worst_idem = 0.0;
  for (int i = 0; i < kProjectionInputs; ++i) {
    const int n = 2 + i % 19;
    const double budget = 0.5 + (i % 4);
    const CMatrix M = random_hermitian(n, rng) * (0.1 + (i % 7) * 0.5);
    const CMatrix P = project_feasible(M, budget).matrix();
    worst = std::max(worst, (P - bisection_projection(M, budget)).norm());
    worst_idem = std::max(worst_idem, (project_feasible(P, budget).matrix() - P).norm());
  }
  report(6, "projection", worst <= kProjectionTol && worst_idem <= kIdempotenceTol,
         fmt("%d inputs, max ||proj - bisection||_F = %.3g (limit %.0e), max idempotence err = %.3g (limit %.0e)",
             kProjectionInputs, worst, kProjectionTol, worst_idem, kIdempotenceTol));
}

void criterion7() {
  SolverConfig cfg;
  cfg.grad_tolerance = kMonotoneSolverTol;
  cfg.max_iterations = 100000;
  const SelectionVector p = SelectionVector::prefix(12, 8);
  double worst_rate = 0.0, worst_f = 0.0;
  for (int i = 0; i < kMonotoneSeeds; ++i) {
    double rate = -INFINITY, F = -INFINITY;
    for (double mu : kMuValues) {
      const InnerSolution sol = solve_inner(p, make_setup1(700 + static_cast<std::uint64_t>(i), mu), cfg);
      const double f = sol.breakdown.mse_term + sol.breakdown.cross_corr_term;
      worst_rate = std::max(worst_rate, rate - sol.breakdown.rate_bpcu);
      worst_f = std::max(worst_f, F - f);
      rate = sol.breakdown.rate_bpcu;
      F = f;
    }
  }
  report(7, "scalarization monotonicity", worst_rate <= kMonotoneSlack && worst_f <= kMonotoneSlack,
         fmt("%d seeds x %zu mu, largest rate decrease = %.3g, largest F decrease = %.3g (slack %.0e)",
             kMonotoneSeeds, kMuValues.size(), std::max(worst_rate, 0.0), std::max(worst_f, 0.0), kMonotoneSlack));
}

void criterion8(const std::vector<Cell>& cells) {
  double min_frac = 1.0;
  int mse_wins = 0, n = 0;
  for (const Cell& c : cells) {
    if (c.mu != 0.0) continue;
    const Scenario s = make_setup1(c.seed, 0.0);
    const auto rows = export_beampattern(c.dp, s);
    double in = 0.0, total = 0.0;
    for (const auto& r : rows) {
      const bool lobe = (r.theta_deg >= -37 && r.theta_deg <= -23) || (r.theta_deg >= 23 && r.theta_deg <= 37);
      total += r.power;
      if (lobe) in += r.power;
    }
    min_frac = std::min(min_frac, in / total);
    mse_wins += c.dp.inner.breakdown.mse_term <= c.ula.inner.breakdown.mse_term;
    ++n;
  }
  const double win_frac = static_cast<double>(mse_wins) / n;
  report(8, "radar-mode reproduction", min_frac >= kMainlobePowerFraction && win_frac >= kMseBeatsUlaFraction,
         fmt("mu=0, %d seeds: min mainlobe power share = %.1f%% (need %.0f%%), DP MSE <= ULA MSE in %.1f%% "
             "(need %.0f%%)",
             n, 100 * min_frac, 100 * kMainlobePowerFraction, 100 * win_frac, 100 * kMseBeatsUlaFraction));
}

void criterion9(const std::vector<Cell>& cells) {
  int wins = 0, n = 0;
  std::vector<double> gaps;
  double dp_mean = 0, es_mean = 0, ula_mean = 0;
  for (const Cell& c : cells) {
    if (c.mu != 1.0) continue;
    const double dp = c.dp.inner.breakdown.rate_bpcu, es = c.es.inner.breakdown.rate_bpcu,
                 ula = c.ula.inner.breakdown.rate_bpcu;
    wins += dp >= ula;
    gaps.push_back(std::abs(dp - es));
    dp_mean += dp / kSeeds;
    es_mean += es / kSeeds;
    ula_mean += ula / kSeeds;
    ++n;
  }
  const double frac = static_cast<double>(wins) / n, med = median(gaps);
  report(9, "rate-mode reproduction", frac >= kRateBeatsUlaFraction && med <= kMedianRateGapBpcu,
         fmt("mu=1, %d seeds: DP rate >= ULA rate in %.1f%% (need %.0f%%), median |DP-ES| rate = %.3g bpcu "
             "(limit %.1f); mean rates ES %.3f, DP %.3f, ULA %.3f",
             n, 100 * frac, 100 * kRateBeatsUlaFraction, med, kMedianRateGapBpcu, es_mean, dp_mean, ula_mean));
}

void criterion10() {
  bool counts_ok = true;
  double slowest = 0.0;
  std::string times;
  for (double mu : kMuValues) {
    const auto t0 = std::chrono::steady_clock::now();
    const SelectionResult r = dp_select(make_setup2(kFirstSeed, mu));
    const double t = seconds_since(t0);
    counts_ok = counts_ok && r.inner_solve_count == kSetup2DpSolves;
    slowest = std::max(slowest, t);
    times += fmt("%s%g:%.0fs", times.empty() ? "" : " ", mu, t);
  }
  report(10, "setup-2 DP feasibility", counts_ok && slowest < kSetup2RuntimeLimitS,
         fmt("solve count %s %lld at every mu; per-run time (mu:time) %s; slowest %.0f s (limit %.0f s)",
             counts_ok ? "=" : "!=", kSetup2DpSolves, times.c_str(), slowest, kSetup2RuntimeLimitS));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion1();
  std::fprintf(stderr, "running the setup-1 batch (%d seeds x %zu mu, DP + ES + ULA)\n", kSeeds, kMuValues.size());
  const std::vector<Cell> cells = run_batch();
  criterion2(cells);
  criterion3(cells);
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8(cells);
  criterion9(cells);
  criterion10();
  std::printf("%d of 10 criteria passed (%.0f s)\n", 10 - failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
