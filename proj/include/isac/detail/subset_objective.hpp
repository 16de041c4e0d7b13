#pragma once

// Objective restricted to the active antennas of a selection.
//
// With Δ = diag(p) every metric depends on R only through the k x k
// principal block R_S on the active set S, so the solver works on R_S.
// For a ULA the beampattern further depends on R_S only through its
// coarray sums c_l = Σ_{pos_m - pos_n = l} R_mn:
//
//   P(θ) = c_0 + 2 Σ_{l>0} [Re c_l cos(φ l sinθ) - Im c_l sin(φ l sinθ)],
//
// with φ = 2π d/λ, and Σ_g w_g ã_g ã_gᴴ has entries h(pos_m - pos_n) with
// h(l) = Σ_g w_g e^{-jφ l sinθ_g}. Both are a G x N real product instead
// of a G x k² complex one.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "isac/error.hpp"
#include "isac/metrics.hpp"
#include "isac/model.hpp"

namespace isac::detail {

struct SubsetValue {
  double value = 0.0;
  double alpha = 0.0;
  double mse = 0.0;
  double cross = 0.0;
  double rate = 0.0;
};

class SubsetObjective {
 public:
  SubsetObjective(const Scenario& s, const SelectionVector& p, ObjectiveMode mode)
      : positions_(p.selected_indices()),
        sensing_(mode == ObjectiveMode::joint ? 1.0 : 0.0),
        mu_(s.tradeoff),
        noise_(s.channel.noise_variance) {
    const int k = dim();
    const int G = s.desired.size();
    const int lags = s.num_antennas();
    const double phi = 2.0 * kPi * s.geometry.spacing_over_wavelength;

    cos_table_.resize(G, lags);
    sin_table_.resize(G, lags);
    for (int g = 0; g < G; ++g) {
      const double u = std::sin(deg_to_rad(s.desired.grid.angle_deg(g)));
      for (int l = 0; l < lags; ++l) {
        cos_table_(g, l) = std::cos(phi * l * u);
        sin_table_(g, l) = std::sin(phi * l * u);
      }
    }
    desired_ = s.desired.values;
    weights_ = s.desired.weights;
    energy_ = s.desired.weighted_energy();
    inv_grid_ = 1.0 / G;

    const int Q = s.desired.num_targets();
    targets_.resize(k, Q);
    for (int q = 0; q < Q; ++q) {
      const CVector a = steering_vector(s.desired.target_angles_deg[static_cast<size_t>(q)], s.geometry);
      for (int i = 0; i < k; ++i) targets_(i, q) = a(positions_[static_cast<size_t>(i)]);
    }
    cross_scale_ = Q >= 2 ? 2.0 * s.desired.cross_corr_weight / (Q * Q - Q) : 0.0;

    channel_.resize(s.channel.H.rows(), k);
    for (int i = 0; i < k; ++i) channel_.col(i) = s.channel.H.col(positions_[static_cast<size_t>(i)]);
  }

  int dim() const { return static_cast<int>(positions_.size()); }
  const std::vector<int>& positions() const { return positions_; }

  SubsetValue evaluate(const CMatrix& R) const { return checked(R, nullptr); }
  SubsetValue evaluate(const CMatrix& R, CMatrix& grad) const { return checked(R, &grad); }

  /// As evaluate(), but reports a non-PSD rate argument (possible at
  /// extrapolated points outside the feasible set) by returning nullopt.
  std::optional<SubsetValue> try_evaluate(const CMatrix& R, CMatrix& grad) const {
    SubsetValue out;
    if (!compute(R, &grad, out)) return std::nullopt;
    return out;
  }

  /// Places R_S into an N x N matrix at the active positions.
  CMatrix embed(const CMatrix& Rs, int num_antennas) const {
    CMatrix R = CMatrix::Zero(num_antennas, num_antennas);
    for (int i = 0; i < dim(); ++i)
      for (int j = 0; j < dim(); ++j) R(positions_[static_cast<size_t>(i)], positions_[static_cast<size_t>(j)]) = Rs(i, j);
    return R;
  }

 private:
  SubsetValue checked(const CMatrix& R, CMatrix* grad) const {
    SubsetValue out;
    if (!compute(R, grad, out)) throw NumericalError("rate term is not positive definite");
    return out;
  }

  bool compute(const CMatrix& R, CMatrix* grad, SubsetValue& out) const {
    const int k = dim();
    const Eigen::Index lags = cos_table_.cols();

    if (grad) grad->setZero(k, k);

    // Beampattern via coarray sums.
    RVector cre = RVector::Zero(lags);
    RVector cim = RVector::Zero(lags);
    for (int m = 0; m < k; ++m) {
      cre(0) += R(m, m).real();
      for (int n = 0; n < m; ++n) {
        const int l = positions_[static_cast<size_t>(m)] - positions_[static_cast<size_t>(n)];
        cre(l) += 2.0 * R(m, n).real();
        cim(l) += 2.0 * R(m, n).imag();
      }
    }
    const RVector P = cos_table_ * cre - sin_table_ * cim;

    out.alpha = energy_ > 0.0 ? (weights_.array() * P.array() * desired_.array()).sum() / energy_ : 0.0;
    const RVector dev = P - out.alpha * desired_;
    out.mse = (weights_.array() * dev.array().square()).sum() * inv_grid_;

    if (grad && sensing_ != 0.0) {
      const RVector w = (2.0 * inv_grid_) * (weights_.array() * dev.array()).matrix();
      const RVector hc = cos_table_.transpose() * w;
      const RVector hs = sin_table_.transpose() * w;
      for (int m = 0; m < k; ++m) {
        for (int n = 0; n < k; ++n) {
          const int l = positions_[static_cast<size_t>(m)] - positions_[static_cast<size_t>(n)];
          (*grad)(m, n) = l >= 0 ? cdouble(hc(l), -hs(l)) : cdouble(hc(-l), hs(-l));
        }
      }
    }

    // Cross-correlation between target directions.
    const Eigen::Index Q = targets_.cols();
    if (cross_scale_ != 0.0) {
      const CMatrix RT = R * targets_;
      double sum = 0.0;
      for (Eigen::Index q = 0; q < Q; ++q) {
        for (Eigen::Index q2 = q + 1; q2 < Q; ++q2) {
          const cdouble c = targets_.col(q).dot(RT.col(q2));
          sum += std::norm(c);
          if (grad && sensing_ != 0.0)
            *grad += cross_scale_ * (std::conj(c) * targets_.col(q2) * targets_.col(q).adjoint() +
                                     c * targets_.col(q) * targets_.col(q2).adjoint());
        }
      }
      out.cross = cross_scale_ * sum;
    }

    // Rate.
    const Eigen::Index M = channel_.rows();
    CMatrix X = channel_ * R * channel_.adjoint();
    X = 0.5 * (X + X.adjoint()).eval();
    X.diagonal().array() += noise_;
    Eigen::LLT<CMatrix> llt(X);
    if (llt.info() != Eigen::Success) return false;
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < M; ++i) log_det += 2.0 * std::log(llt.matrixLLT()(i, i).real());
    out.rate = (log_det - M * std::log(noise_)) / std::numbers::ln2;
    if (grad && mu_ != 0.0) *grad -= (mu_ / std::numbers::ln2) * (channel_.adjoint() * llt.solve(channel_));

    out.value = sensing_ * (out.mse + out.cross) - mu_ * out.rate;
    if (grad) *grad = 0.5 * (*grad + grad->adjoint()).eval();
    return std::isfinite(out.value);
  }

  std::vector<int> positions_;
  double sensing_;
  double mu_;
  double noise_;
  Eigen::MatrixXd cos_table_;
  Eigen::MatrixXd sin_table_;
  RVector desired_;
  RVector weights_;
  double energy_ = 0.0;
  double inv_grid_ = 1.0;
  CMatrix targets_;
  double cross_scale_ = 0.0;
  CMatrix channel_;
};

}  // namespace isac::detail
