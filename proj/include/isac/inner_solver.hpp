#pragma once

// Covariance optimization for a fixed antenna selection p:
//
//   min_{R, α}  F(p, α, R) - μ C(Δ(p), R)   s.t.  R ⪰ 0,  tr R = P_Tx
//
// The budget is spent in full by default. With tr R ≤ P_Tx the sensing term
// alone is minimized by R = 0, α = 0, so that set is only available as an
// option (PowerConstraint::at_most). The problem is convex in (R, α).
//
// α is eliminated in closed form at every iterate (exact coordinate
// minimization), so the solvers below work on R alone. Both are projected
// gradient methods: every accepted iterate is feasible and the objective
// never increases.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "isac/detail/subset_objective.hpp"
#include "isac/error.hpp"
#include "isac/metrics.hpp"
#include "isac/model.hpp"

namespace isac {

/// Transmit covariance. Construction does not check feasibility; call
/// violation() / is_feasible() where the invariants matter.
class CovarianceMatrix {
 public:
  CovarianceMatrix() = default;
  explicit CovarianceMatrix(CMatrix R) : R_(std::move(R)) {}

  const CMatrix& matrix() const { return R_; }
  int size() const { return static_cast<int>(R_.rows()); }
  double trace() const { return R_.trace().real(); }

  /// First violated invariant (Hermitian, PSD, power budget), if any.
  std::optional<std::string> violation(double total_power) const {
    if (R_.rows() != R_.cols()) return "not square";
    const double scale = std::max(R_.norm(), 1e-300);
    if ((R_ - R_.adjoint()).norm() > 1e-10 * scale) return "not Hermitian";
    if (R_.size() == 0) return std::nullopt;
    const CMatrix H = 0.5 * (R_ + R_.adjoint());
    const double min_eig = Eigen::SelfAdjointEigenSolver<CMatrix>(H, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (min_eig < -1e-8 * std::max(trace(), 0.0)) return "not positive semidefinite";
    if (trace() > total_power + 1e-8) return "trace exceeds the power budget";
    return std::nullopt;
  }

  bool is_feasible(double total_power) const { return !violation(total_power); }

 private:
  CMatrix R_;
};

enum class InnerMethod {
  accelerated,  // monotone FISTA with restarts
  spectral,     // Barzilai-Borwein step + Armijo backtracking
};

enum class PowerConstraint {
  full,     // tr R = P_Tx
  at_most,  // tr R ≤ P_Tx
};

struct SolverConfig {
  /// Stationarity threshold on the projected-gradient residual; unset means
  /// 1e-6 · P_Tx.
  std::optional<double> grad_tolerance;
  int max_iterations = 5000;
  double armijo_shrink = 0.5;
  double armijo_slope = 1e-4;
  /// First trial step, and the fixed probe step of the stationarity residual.
  double initial_step = 1.0;
  /// Drop F from the objective and minimize -μC only.
  bool rate_only = false;
  PowerConstraint power = PowerConstraint::full;
  InnerMethod method = InnerMethod::accelerated;
  /// Called with (iteration, full N x N iterate, objective) after each accepted step.
  std::function<void(int, const CMatrix&, double)> observer;

  double tolerance_for(double total_power) const { return grad_tolerance.value_or(1e-6 * total_power); }

  void validate() const {
    if (grad_tolerance && !(*grad_tolerance > 0.0)) throw ValidationError("grad_tolerance", "must be positive");
    if (max_iterations < 1) throw ValidationError("max_iterations", "must be >= 1");
    if (!(armijo_shrink > 0.0 && armijo_shrink < 1.0)) throw ValidationError("armijo_shrink", "must lie in (0, 1)");
    if (!(armijo_slope > 0.0 && armijo_slope < 1.0)) throw ValidationError("armijo_slope", "must lie in (0, 1)");
    if (!(initial_step > 0.0)) throw ValidationError("initial_step", "must be positive");
  }
};

struct InnerSolution {
  CovarianceMatrix R;
  double alpha = 0.0;
  ObjectiveBreakdown breakdown;
  int iterations = 0;
  bool converged = false;
  double projected_grad_norm = 0.0;
};

/// Euclidean projection of an eigenvalue vector onto {λ ≥ 0, Σλ ≤ budget}
/// (at_most) or {λ ≥ 0, Σλ = budget} (full).
inline RVector project_eigenvalues(const RVector& eig, double budget,
                                   PowerConstraint constraint = PowerConstraint::at_most) {
  if (constraint == PowerConstraint::at_most) {
    RVector clipped = eig.cwiseMax(0.0);
    if (clipped.sum() <= budget) return clipped;
  }
  // Simplex: λ_i = max(eig_i - τ, 0) with τ chosen so Σλ = budget.
  std::vector<double> sorted(eig.data(), eig.data() + eig.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0;
  double tau = 0.0;
  for (size_t j = 0; j < sorted.size(); ++j) {
    prefix += sorted[j];
    const double candidate = (prefix - budget) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) tau = candidate;
  }
  return (eig.array() - tau).cwiseMax(0.0).matrix();
}

namespace detail {

inline CMatrix project_hermitian(const CMatrix& M, double budget, PowerConstraint constraint) {
  if (!M.allFinite()) throw NumericalError("project_feasible: non-finite input");
  const CMatrix H = 0.5 * (M + M.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
  if (es.info() != Eigen::Success) throw NumericalError("project_feasible: eigendecomposition failed");
  const RVector lam = project_eigenvalues(es.eigenvalues(), budget, constraint);
  const CMatrix& V = es.eigenvectors();
  CMatrix out = V * lam.cast<cdouble>().asDiagonal() * V.adjoint();
  return 0.5 * (out + out.adjoint());
}

/// Re tr(Aᴴ B), the Frobenius inner product.
inline double inner(const CMatrix& A, const CMatrix& B) { return (A.conjugate().cwiseProduct(B)).sum().real(); }

}  // namespace detail

/// Frobenius-nearest R with R ⪰ 0 and tr R ≤ budget (or = budget). The
/// input is symmetrized as (M + Mᴴ)/2 first.
inline CovarianceMatrix project_feasible(const CMatrix& M, double budget,
                                         PowerConstraint constraint = PowerConstraint::at_most) {
  if (M.rows() != M.cols()) throw DimensionError("project_feasible: matrix must be square");
  return CovarianceMatrix(detail::project_hermitian(M, budget, constraint));
}

namespace detail {

/// State shared by both step rules: the subset objective, the current
/// feasible iterate and its value/gradient.
struct InnerRun {
  const SubsetObjective& objective;
  const SolverConfig& cfg;
  double budget;
  double tol;
  int num_antennas;

  CMatrix R;
  CMatrix grad;
  SubsetValue current;
  InnerSolution sol;

  /// Stationarity residual at R; true once it is within tolerance. Returns
  /// the probe point so a caller using the same step can reuse it.
  bool stationary(CMatrix* probe_point = nullptr) {
    CMatrix pp = project_hermitian(R - cfg.initial_step * grad, budget, cfg.power);
    sol.projected_grad_norm = (R - pp).norm() / cfg.initial_step;
    if (probe_point) *probe_point = std::move(pp);
    return sol.projected_grad_norm <= tol;
  }

  void accept(CMatrix next, CMatrix& next_grad, const SubsetValue& value) {
    R = std::move(next);
    grad.swap(next_grad);
    current = value;
    ++sol.iterations;
    if (cfg.observer) cfg.observer(sol.iterations, objective.embed(R, num_antennas), current.value);
  }
};

/// Projected gradient: Barzilai-Borwein trial step, one projection, Armijo
/// backtracking along the feasible direction.
inline void run_spectral(InnerRun& run) {
  const SolverConfig& cfg = run.cfg;
  double step = cfg.initial_step;
  CMatrix next_grad;
  CMatrix probe_point;
  for (;;) {
    if (run.stationary(&probe_point)) {
      run.sol.converged = true;
      return;
    }
    if (run.sol.iterations >= cfg.max_iterations) return;

    const CMatrix D =
        (step == cfg.initial_step ? probe_point : project_hermitian(run.R - step * run.grad, run.budget, cfg.power)) -
        run.R;
    const double slope = inner(run.grad, D);
    if (!(slope < 0.0)) return;  // no descent left at working precision

    double lambda = 1.0;
    for (;; lambda *= cfg.armijo_shrink) {
      if (lambda < 1e-20) return;
      CMatrix trial = run.R + lambda * D;
      const SubsetValue next = run.objective.evaluate(trial, next_grad);
      if (next.value <= run.current.value + cfg.armijo_slope * lambda * slope) {
        const CMatrix S = trial - run.R;
        const double sy = inner(S, next_grad - run.grad);
        step = sy > 0.0 ? std::clamp(S.squaredNorm() / sy, 1e-10, 1e10) : 1e10;
        run.accept(std::move(trial), next_grad, next);
        break;
      }
    }
  }
}

/// Monotone accelerated projected gradient (MFISTA) with function and
/// gradient restarts. The step shrinks by armijo_shrink until the quadratic
/// upper bound holds at the projected point and regrows slowly afterwards.
/// Accepted iterates are feasible and never increase the objective; the
/// extrapolated point may leave the feasible set, in which case momentum is
/// dropped.
inline void run_accelerated(InnerRun& run) {
  const SolverConfig& cfg = run.cfg;
  constexpr double kGrowth = 1.1;
  constexpr int kCheckEvery = 10;
  double step = cfg.initial_step;
  double t = 1.0;
  CMatrix Y = run.R;
  CMatrix grad_y = run.grad;
  SubsetValue at_y = run.current;
  CMatrix grad_z;
  double mapping_norm = std::numeric_limits<double>::infinity();

  for (int since_check = 0;; ++since_check) {
    if (mapping_norm <= run.tol || since_check >= kCheckEvery || run.sol.iterations >= cfg.max_iterations) {
      since_check = 0;
      if (run.stationary()) {
        run.sol.converged = true;
        return;
      }
      if (run.sol.iterations >= cfg.max_iterations) return;
    }

    CMatrix Z;
    SubsetValue at_z;
    for (;;) {
      Z = project_hermitian(Y - step * grad_y, run.budget, cfg.power);
      const CMatrix D = Z - Y;
      at_z = run.objective.evaluate(Z, grad_z);
      const double bound = at_y.value + inner(grad_y, D) + D.squaredNorm() / (2.0 * step);
      if (at_z.value <= bound + 1e-15 * std::abs(at_y.value)) {
        mapping_norm = D.norm() / step;
        break;
      }
      step *= cfg.armijo_shrink;
      if (step < 1e-14) return;
    }

    const CMatrix previous = run.R;
    const bool improved = at_z.value <= run.current.value;
    const bool moving_uphill = inner(grad_y, Z - previous) > 0.0;
    if (improved) run.accept(Z, grad_z, at_z);
    else if (t == 1.0) return;  // a plain projected step from R failed to descend: precision floor

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    std::optional<SubsetValue> extrapolated;
    if (improved && !moving_uphill) {
      Y = run.R + (t / t_next) * (Z - run.R) + ((t - 1.0) / t_next) * (run.R - previous);
      extrapolated = run.objective.try_evaluate(Y, grad_y);
    }
    if (extrapolated) {
      at_y = *extrapolated;
      t = t_next;
    } else {
      Y = run.R;
      grad_y = run.grad;
      at_y = run.current;
      t = 1.0;
    }
    step *= kGrowth;
  }
}

}  // namespace detail

inline InnerSolution solve_inner(const SelectionVector& p, const Scenario& s, const SolverConfig& cfg = {}) {
  cfg.validate();
  if (p.size() != s.num_antennas()) throw DimensionError("solve_inner: selection length does not match num_antennas");
  if (p.count() < 1) throw ValidationError("p", "no antenna selected");
  if (p.count() > s.num_rf_chains) throw ValidationError("p", "more antennas selected than RF chains");
  if (cfg.rate_only && !(s.tradeoff > 0.0)) throw ValidationError("mu", "rate-only mode needs mu > 0");

  const ObjectiveMode mode = cfg.rate_only ? ObjectiveMode::rate_only : ObjectiveMode::joint;
  const detail::SubsetObjective objective(s, p, mode);
  const int k = objective.dim();
  const int N = s.num_antennas();

  // Uniform power over the active antennas: P/k each on the full budget,
  // P/N each (the share of a full array) under tr R ≤ P.
  const double start_power = cfg.power == PowerConstraint::full ? s.total_power / k : s.total_power / N;
  detail::InnerRun run{objective, cfg, s.total_power, cfg.tolerance_for(s.total_power), N,
                       CMatrix::Identity(k, k) * cdouble(start_power), CMatrix(), {}, {}};
  run.current = objective.evaluate(run.R, run.grad);

  if (cfg.method == InnerMethod::accelerated) detail::run_accelerated(run);
  else detail::run_spectral(run);

  InnerSolution sol = std::move(run.sol);
  sol.R = CovarianceMatrix(objective.embed(run.R, N));
  sol.alpha = run.current.alpha;
  ObjectiveBreakdown& b = sol.breakdown;
  b.mse_term = run.current.mse;
  b.cross_corr_term = run.current.cross;
  b.rate_bpcu = run.current.rate;
  b.alpha = run.current.alpha;
  b.mu = s.tradeoff;
  b.sensing_weight = mode == ObjectiveMode::joint ? 1.0 : 0.0;
  b.scalarized = run.current.value;
  return sol;
}

struct WaterFillingResult {
  double rate_bpcu = 0.0;
  CovarianceMatrix R;
};

/// Capacity-achieving covariance for the selected columns of H under
/// tr R ≤ budget: power q_i = max(ν - σ²/s_i², 0) on the right singular
/// vectors of H_S.
inline WaterFillingResult water_filling_rate(const SelectionVector& p, const ChannelMatrix& ch, double budget) {
  if (p.size() != ch.num_tx_antennas()) throw DimensionError("water_filling_rate: selection length mismatch");
  if (p.count() < 1) throw ValidationError("p", "no antenna selected");
  const std::vector<int>& idx = p.selected_indices();
  const int k = p.count();
  CMatrix Hs(ch.H.rows(), k);
  for (int i = 0; i < k; ++i) Hs.col(i) = ch.H.col(idx[static_cast<size_t>(i)]);

  Eigen::JacobiSVD<CMatrix> svd(Hs, Eigen::ComputeThinV);
  const RVector& sv = svd.singularValues();  // descending
  std::vector<double> inv_gain;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-12 * std::max(sv(0), 1e-300)) inv_gain.push_back(ch.noise_variance / (sv(i) * sv(i)));

  const int r = static_cast<int>(inv_gain.size());
  WaterFillingResult out;
  RVector power = RVector::Zero(sv.size());
  if (r > 0) {
    int active = r;
    double level = 0.0;
    for (; active >= 1; --active) {
      double sum = 0.0;
      for (int i = 0; i < active; ++i) sum += inv_gain[static_cast<size_t>(i)];
      level = (budget + sum) / active;
      if (level > inv_gain[static_cast<size_t>(active - 1)]) break;
    }
    for (int i = 0; i < active; ++i) {
      power(i) = level - inv_gain[static_cast<size_t>(i)];
      out.rate_bpcu += std::log2(1.0 + power(i) / inv_gain[static_cast<size_t>(i)]);
    }
  }
  const CMatrix& V = svd.matrixV();
  const CMatrix Rs = V * power.cast<cdouble>().asDiagonal() * V.adjoint();
  CMatrix R = CMatrix::Zero(p.size(), p.size());
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) R(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]) = Rs(i, j);
  out.R = CovarianceMatrix(0.5 * (R + R.adjoint()));
  return out;
}

}  // namespace isac
