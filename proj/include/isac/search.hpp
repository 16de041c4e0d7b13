#pragma once

// Baselines for the selection problem: exhaustive search over every
// K-subset (the global optimum, up to the inner solver's accuracy) and a
// fixed K-element ULA without selection.

#include <limits>
#include <mutex>
#include <numeric>
#include <vector>

#include "isac/dp_select.hpp"
#include "isac/error.hpp"
#include "isac/inner_solver.hpp"
#include "isac/model.hpp"
#include "isac/parallel.hpp"

namespace isac {

inline constexpr long long kDefaultSearchBudget = 1'000'000;

/// C(n, k), saturating at LLONG_MAX.
inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long out = 1;
  for (int i = 1; i <= k; ++i) {
    const long long num = n - k + i;
    if (out > std::numeric_limits<long long>::max() / num) return std::numeric_limits<long long>::max();
    out = out * num / i;
  }
  return out;
}

/// All K-subsets of {0..N-1} in lexicographic order.
inline std::vector<std::vector<int>> enumerate_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  if (k < 0 || k > n) return out;
  std::vector<int> idx(static_cast<size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  for (;;) {
    out.push_back(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
  }
  return out;
}

/// Solves every K-subset and keeps the smallest objective; ties go to the
/// lexicographically first subset.
inline SelectionResult exhaustive_search(const Scenario& s, const SolverConfig& cfg = {},
                                         long long budget = kDefaultSearchBudget, int workers = 1) {
  s.validate();
  const int N = s.num_antennas();
  const int K = s.num_rf_chains;
  const long long total = binomial(N, K);
  if (total > budget)
    throw BudgetExceeded("exhaustive search needs C(" + std::to_string(N) + ", " + std::to_string(K) +
                         ") = " + std::to_string(total) + " solves, budget is " + std::to_string(budget));

  const std::vector<std::vector<int>> subsets = enumerate_subsets(N, K);
  std::mutex best_mutex;
  long long best_index = -1;
  InnerSolution best;
  parallel_for(static_cast<int>(subsets.size()), workers, [&](int i) {
    InnerSolution sol = solve_inner(SelectionVector::from_indices(N, subsets[static_cast<size_t>(i)]), s, cfg);
    std::lock_guard lock(best_mutex);
    const double v = sol.breakdown.scalarized;
    const double b = best.breakdown.scalarized;
    if (best_index < 0 || v < b || (v == b && i < best_index)) {
      best_index = i;
      best = std::move(sol);
    }
  });
  return detail::make_result(subsets[static_cast<size_t>(best_index)], N, std::move(best), total);
}

/// The K-antenna contiguous array at the same spacing. Its channel is the
/// first K columns of the N-antenna draw, which pairs baseline and selection
/// results on the same channel realization.
inline Scenario fixed_ula_scenario(const Scenario& s) {
  s.validate();
  Scenario out = s;
  out.geometry.num_antennas = s.num_rf_chains;
  out.channel.H = s.channel.H.leftCols(s.num_rf_chains);
  return out;
}

/// All K elements of the fixed array active; only the covariance is optimized.
inline SelectionResult fixed_ula_baseline(const Scenario& s, const SolverConfig& cfg = {}) {
  const Scenario ula = fixed_ula_scenario(s);
  const int K = ula.num_rf_chains;
  std::vector<int> r(static_cast<size_t>(K));
  std::iota(r.begin(), r.end(), 0);
  InnerSolution sol = solve_inner(SelectionVector::all_ones(K), ula, cfg);
  return detail::make_result(std::move(r), K, std::move(sol), 1);
}

}  // namespace isac
