#pragma once

// Sensing and communication metrics of a transmit covariance R under an
// antenna selection p, evaluated directly on the full N x N matrices:
//
//   P(θ)   = (p⊙a(θ))ᴴ R (p⊙a(θ))
//   F      = (1/G) Σ_g γ_g (P(θ_g) - α P_d(θ_g))²
//            + 2ω/(Q²-Q) Σ_{q<q'} |(p⊙a(θ_q))ᴴ R (p⊙a(θ_q'))|²
//   C      = log2 det(I + H Δ R Δᴴ Hᴴ / σ²),  Δ = diag(p)
//   f      = F - μ C
//
// The inner solver uses a faster subset-reduced evaluation of the same
// quantities (detail/subset_objective.hpp); these functions are the
// reference it is tested against.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "isac/error.hpp"
#include "isac/model.hpp"

namespace isac {

/// Which terms enter the scalarized objective. `rate_only` drops F and
/// minimizes -μC alone.
enum class ObjectiveMode { joint, rate_only };

struct SensingTerms {
  double mse_term = 0.0;
  double cross_corr_term = 0.0;
};

struct ObjectiveBreakdown {
  double mse_term = 0.0;
  double cross_corr_term = 0.0;
  double rate_bpcu = 0.0;
  double alpha = 0.0;
  double mu = 0.0;
  double sensing_weight = 1.0;  // 0 in rate-only mode
  double scalarized = 0.0;      // sensing_weight (mse + cross) - μ rate
};

namespace detail {

inline void check_dims(const SelectionVector& p, const CMatrix& R) {
  if (R.rows() != R.cols()) throw DimensionError("covariance must be square");
  if (R.rows() != p.size()) throw DimensionError("selection length does not match covariance size");
}

/// Imaginary residue of an analytically real quadratic form: checked, then dropped.
inline double real_part_checked(cdouble v, const CMatrix& R) {
  const double scale = std::max(std::abs(R.trace().real()), R.norm());
  if (std::abs(v.imag()) > 1e-8 * scale + 1e-300)
    throw NumericalError("quadratic form has a non-negligible imaginary part; covariance is not Hermitian");
  return v.real();
}

inline CMatrix masked_steering(const SelectionVector& p, std::span<const double> angles_deg, const ArrayGeometry& geom) {
  CMatrix A = steering_matrix(angles_deg, geom);
  for (int n = 0; n < p.size(); ++n)
    if (!p[n]) A.row(n).setZero();
  return A;
}

inline std::vector<double> grid_angles(const DesiredBeampattern& d) {
  std::vector<double> angles(static_cast<size_t>(d.grid.points));
  for (int g = 0; g < d.grid.points; ++g) angles[static_cast<size_t>(g)] = d.grid.angle_deg(g);
  return angles;
}

inline ArrayGeometry geometry_for(const CMatrix& R, double spacing) {
  return ArrayGeometry{static_cast<int>(R.rows()), spacing};
}

}  // namespace detail

inline double beampattern_power(const SelectionVector& p, const CMatrix& R, double theta_deg, const ArrayGeometry& geom) {
  detail::check_dims(p, R);
  if (geom.num_antennas != R.rows()) throw DimensionError("geometry does not match covariance size");
  const CVector a = p.mask(steering_vector(theta_deg, geom));
  return detail::real_part_checked(a.dot(R * a), R);
}

/// P(θ_g) over the whole grid of `desired`.
inline RVector beampattern(const SelectionVector& p, const CMatrix& R, const DesiredBeampattern& desired,
                           const ArrayGeometry& geom) {
  detail::check_dims(p, R);
  const std::vector<double> angles = detail::grid_angles(desired);
  const CMatrix A = detail::masked_steering(p, angles, geom);
  const CMatrix RA = R * A;
  RVector P(desired.size());
  for (int g = 0; g < desired.size(); ++g) P(g) = detail::real_part_checked(A.col(g).dot(RA.col(g)), R);
  return P;
}

/// 2ω/(Q²-Q) Σ_{q<q'} |ã_qᴴ R ã_q'|²; zero for a single target.
inline double cross_correlation_term(const SelectionVector& p, const CMatrix& R, const DesiredBeampattern& desired,
                                     const ArrayGeometry& geom) {
  const int Q = desired.num_targets();
  if (Q < 2) return 0.0;
  const CMatrix T = detail::masked_steering(p, desired.target_angles_deg, geom);
  const CMatrix RT = R * T;
  double sum = 0.0;
  for (int q = 0; q < Q; ++q)
    for (int q2 = q + 1; q2 < Q; ++q2) sum += std::norm(T.col(q).dot(RT.col(q2)));
  return 2.0 * desired.cross_corr_weight / (Q * Q - Q) * sum;
}

inline SensingTerms sensing_objective(const SelectionVector& p, double alpha, const CMatrix& R,
                                      const DesiredBeampattern& desired, const ArrayGeometry& geom) {
  const RVector P = beampattern(p, R, desired, geom);
  const RVector dev = P - alpha * desired.values;
  SensingTerms t;
  t.mse_term = (desired.weights.array() * dev.array().square()).sum() / desired.size();
  t.cross_corr_term = cross_correlation_term(p, R, desired, geom);
  return t;
}

/// argmin_α of the MSE term for fixed (p, R).
inline double alpha_star(const SelectionVector& p, const CMatrix& R, const DesiredBeampattern& desired,
                         const ArrayGeometry& geom) {
  const double den = desired.weighted_energy();
  if (!(den > 0.0)) throw ValidationError("desired.values", "desired pattern has zero weighted energy; scale factor undefined");
  const RVector P = beampattern(p, R, desired, geom);
  return (desired.weights.array() * P.array() * desired.values.array()).sum() / den;
}

/// Scale factor used by the solvers: alpha_star, or 0 when the desired
/// pattern is identically zero (every α is then optimal).
inline double alpha_or_zero(const SelectionVector& p, const CMatrix& R, const DesiredBeampattern& desired,
                            const ArrayGeometry& geom) {
  return desired.weighted_energy() > 0.0 ? alpha_star(p, R, desired, geom) : 0.0;
}

/// log2 det(I + H Δ R Δᴴ Hᴴ / σ²) in bits per channel use.
inline double achievable_rate(const SelectionVector& p, const CMatrix& R, const ChannelMatrix& ch) {
  detail::check_dims(p, R);
  if (ch.H.cols() != R.rows()) throw DimensionError("channel column count does not match covariance size");
  CMatrix HD = ch.H;
  for (int n = 0; n < p.size(); ++n)
    if (!p[n]) HD.col(n).setZero();
  const Eigen::Index M = ch.H.rows();
  CMatrix X = CMatrix::Identity(M, M) + HD * R * HD.adjoint() / ch.noise_variance;
  X = 0.5 * (X + X.adjoint()).eval();
  Eigen::LLT<CMatrix> llt(X);
  if (llt.info() != Eigen::Success) throw NumericalError("achievable_rate: I + HΔRΔᴴHᴴ/σ² is not positive definite");
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < M; ++i) log_det += 2.0 * std::log(llt.matrixLLT()(i, i).real());
  const double rate = log_det / std::numbers::ln2;
  if (!std::isfinite(rate)) throw NumericalError("achievable_rate: non-finite result");
  return rate;
}

inline ObjectiveBreakdown scalarized_objective(const SelectionVector& p, double alpha, const CMatrix& R,
                                               const Scenario& s, ObjectiveMode mode = ObjectiveMode::joint) {
  const SensingTerms t = sensing_objective(p, alpha, R, s.desired, s.geometry);
  ObjectiveBreakdown b;
  b.mse_term = t.mse_term;
  b.cross_corr_term = t.cross_corr_term;
  b.rate_bpcu = achievable_rate(p, R, s.channel);
  b.alpha = alpha;
  b.mu = s.tradeoff;
  b.sensing_weight = mode == ObjectiveMode::joint ? 1.0 : 0.0;
  b.scalarized = b.sensing_weight * (b.mse_term + b.cross_corr_term) - b.mu * b.rate_bpcu;
  return b;
}

/// Hermitian gradient of F - μC with respect to R at fixed (p, α), in the
/// sense d f(R + tD)/dt = tr(∇ D) for Hermitian D.
inline CMatrix objective_gradient(const SelectionVector& p, double alpha, const CMatrix& R, const Scenario& s,
                                  ObjectiveMode mode = ObjectiveMode::joint) {
  detail::check_dims(p, R);
  const Eigen::Index N = R.rows();
  CMatrix grad = CMatrix::Zero(N, N);

  if (mode == ObjectiveMode::joint) {
    const DesiredBeampattern& d = s.desired;
    const std::vector<double> angles = detail::grid_angles(d);
    const CMatrix A = detail::masked_steering(p, angles, s.geometry);
    const RVector P = beampattern(p, R, d, s.geometry);
    const RVector w = (2.0 / d.size()) * (d.weights.array() * (P - alpha * d.values).array()).matrix();
    grad += A * w.cast<cdouble>().asDiagonal() * A.adjoint();

    const int Q = d.num_targets();
    if (Q >= 2) {
      const CMatrix T = detail::masked_steering(p, d.target_angles_deg, s.geometry);
      const double scale = 2.0 * d.cross_corr_weight / (Q * Q - Q);
      for (int q = 0; q < Q; ++q) {
        for (int q2 = q + 1; q2 < Q; ++q2) {
          const cdouble c = T.col(q).dot(R * T.col(q2));
          grad += scale * (std::conj(c) * T.col(q2) * T.col(q).adjoint() + c * T.col(q) * T.col(q2).adjoint());
        }
      }
    }
  }

  if (s.tradeoff != 0.0) {
    CMatrix HD = s.channel.H;
    for (int n = 0; n < p.size(); ++n)
      if (!p[n]) HD.col(n).setZero();
    const Eigen::Index M = HD.rows();
    CMatrix X = s.channel.noise_variance * CMatrix::Identity(M, M) + HD * R * HD.adjoint();
    X = 0.5 * (X + X.adjoint()).eval();
    Eigen::LLT<CMatrix> llt(X);
    if (llt.info() != Eigen::Success) throw NumericalError("objective_gradient: rate term is not positive definite");
    grad -= (s.tradeoff / std::numbers::ln2) * (HD.adjoint() * llt.solve(HD));
  }
  return 0.5 * (grad + grad.adjoint());
}

}  // namespace isac
