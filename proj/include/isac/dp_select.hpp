#pragma once

// Antenna selection by dynamic programming over RF chains.
//
// Column c of the table (chains are 0-based, c = 1..K-1) answers: if chain c
// uses antenna n, which antenna should chain c-1 use? It is filled by trying
// every antenna n' for chain c-1, completing chains c-2..0 by walking back
// through the columns already filled, and solving the covariance problem on
// the resulting support. The last column also records the best objective per
// antenna of the final chain; the selection is recovered by backtracking from
// the overall best. This costs N²(K-1) inner solves plus one for the final
// support.

#include <Eigen/Dense>

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "isac/error.hpp"
#include "isac/inner_solver.hpp"
#include "isac/model.hpp"
#include "isac/parallel.hpp"

namespace isac {

struct DpTable {
  /// N x K, 0-based antenna indices. Column 0 is unused; -1 marks an
  /// unfilled cell.
  Eigen::MatrixXi pi;
  /// Best objective for each antenna of the last chain.
  RVector f_prime;

  int num_antennas() const { return static_cast<int>(pi.rows()); }
  int num_chains() const { return static_cast<int>(pi.cols()); }
};

struct SelectionResult {
  /// Antenna used by each RF chain (0-based). May repeat, see duplicate_warning.
  std::vector<int> r;
  SelectionVector p;
  InnerSolution inner;
  long long inner_solve_count = 0;
  /// Two chains ended up on the same antenna, so p has fewer than K ones.
  bool duplicate_warning = false;
};

/// r[K-1] = last; r[c-1] = Π(r[c], c) for c = K-1..1.
inline std::vector<int> backtrack(const DpTable& table, int last) {
  const int N = table.num_antennas();
  const int K = table.num_chains();
  if (K < 1) throw DimensionError("backtrack: empty table");
  if (last < 0 || last >= N) throw DimensionError("backtrack: antenna index out of range");
  std::vector<int> r(static_cast<size_t>(K));
  r[static_cast<size_t>(K - 1)] = last;
  for (int c = K - 1; c >= 1; --c) {
    const int prev = table.pi(r[static_cast<size_t>(c)], c);
    if (prev < 0 || prev >= N) throw Error("backtrack: table column " + std::to_string(c) + " is not filled");
    r[static_cast<size_t>(c - 1)] = prev;
  }
  return r;
}

namespace detail {

inline int argmin_lowest(const std::vector<double>& f) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(f.size()); ++i)
    if (f[static_cast<size_t>(i)] < f[static_cast<size_t>(best)]) best = i;
  return best;
}

inline SelectionResult make_result(std::vector<int> r, int num_antennas, InnerSolution inner, long long solves) {
  SelectionResult out;
  out.p = SelectionVector::from_indices(num_antennas, r);
  out.duplicate_warning = out.p.count() < static_cast<int>(r.size());
  out.r = std::move(r);
  out.inner = std::move(inner);
  out.inner_solve_count = solves;
  return out;
}

}  // namespace detail

/// `workers` > 1 solves the N candidates of each table cell concurrently;
/// the result is identical to the sequential run.
inline SelectionResult dp_select(const Scenario& s, const SolverConfig& cfg = {}, DpTable* table_out = nullptr,
                                 int workers = 1) {
  s.validate();
  const int N = s.num_antennas();
  const int K = s.num_rf_chains;
  long long solves = 0;

  DpTable table;
  table.pi = Eigen::MatrixXi::Constant(N, K, -1);
  table.f_prime = RVector::Zero(N);

  if (K == 1) {
    // No chain pairs to associate: pick the best single antenna directly.
    std::vector<InnerSolution> sols(static_cast<size_t>(N));
    parallel_for(N, workers, [&](int n) {
      const int idx[] = {n};
      sols[static_cast<size_t>(n)] = solve_inner(SelectionVector::from_indices(N, idx), s, cfg);
    });
    std::vector<double> f(static_cast<size_t>(N));
    for (int n = 0; n < N; ++n) f[static_cast<size_t>(n)] = table.f_prime(n) = sols[static_cast<size_t>(n)].breakdown.scalarized;
    solves = N;
    const int best = detail::argmin_lowest(f);
    if (table_out) *table_out = table;
    return detail::make_result({best}, N, std::move(sols[static_cast<size_t>(best)]), solves);
  }

  std::vector<double> f(static_cast<size_t>(N));
  for (int c = 1; c < K; ++c) {
    for (int n = 0; n < N; ++n) {
      parallel_for(N, workers, [&](int n_prev) {
        std::vector<int> r(static_cast<size_t>(c + 1));
        r[static_cast<size_t>(c)] = n;
        r[static_cast<size_t>(c - 1)] = n_prev;
        for (int i = c - 1; i >= 1; --i) r[static_cast<size_t>(i - 1)] = table.pi(r[static_cast<size_t>(i)], i);
        f[static_cast<size_t>(n_prev)] = solve_inner(SelectionVector::from_indices(N, r), s, cfg).breakdown.scalarized;
      });
      solves += N;
      const int best = detail::argmin_lowest(f);
      table.pi(n, c) = best;
      if (c == K - 1) table.f_prime(n) = f[static_cast<size_t>(best)];
    }
  }

  std::vector<double> fp(table.f_prime.data(), table.f_prime.data() + N);
  std::vector<int> r = backtrack(table, detail::argmin_lowest(fp));
  InnerSolution final_solution = solve_inner(SelectionVector::from_indices(N, r), s, cfg);
  ++solves;
  if (table_out) *table_out = table;
  return detail::make_result(std::move(r), N, std::move(final_solution), solves);
}

/// Π and f' as CSV: one row per antenna, columns pi_0..pi_{K-1}, f_prime.
/// Unfilled cells are written as -1.
inline void write_dp_table_csv(std::ostream& os, const DpTable& table) {
  os << "antenna";
  for (int c = 0; c < table.num_chains(); ++c) os << ",pi_" << c;
  os << ",f_prime\n";
  char buf[32];
  for (int n = 0; n < table.num_antennas(); ++n) {
    os << n;
    for (int c = 0; c < table.num_chains(); ++c) os << ',' << table.pi(n, c);
    std::snprintf(buf, sizeof buf, "%.17g", table.f_prime(n));
    os << ',' << buf << '\n';
  }
}

}  // namespace isac
