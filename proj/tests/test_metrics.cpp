#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "isac/detail/subset_objective.hpp"
#include "isac/metrics.hpp"
#include "test_support.hpp"

using namespace isac;
using namespace isac::testing;

namespace {

SelectionVector random_selection(int n, int k, std::mt19937_64& rng) {
  return SelectionVector::from_indices(n, random_subset(n, k, rng));
}

/// Full-space objective at (α, R) for the scenario's μ.
double full_value(const SelectionVector& p, double alpha, const CMatrix& R, const Scenario& s,
                  ObjectiveMode mode = ObjectiveMode::joint) {
  return scalarized_objective(p, alpha, R, s, mode).scalarized;
}

}  // namespace

TEST(Beampattern, IsotropicFullArray) {
  const ArrayGeometry g{10, 0.5};
  const CMatrix R = CMatrix::Identity(10, 10) * (2.0 / 10);
  const SelectionVector p = SelectionVector::all_ones(10);
  for (double t = -90; t <= 90; t += 5) EXPECT_NEAR(beampattern_power(p, R, t, g), 2.0, 1e-12);
}

TEST(Beampattern, IsotropicMasked) {
  const ArrayGeometry g{10, 0.5};
  const CMatrix R = CMatrix::Identity(10, 10) * (1.0 / 10);
  const int idx[] = {0, 3, 4, 9};
  const SelectionVector p = SelectionVector::from_indices(10, idx);
  for (double t = -90; t <= 90; t += 5) EXPECT_NEAR(beampattern_power(p, R, t, g), 4.0 / 10, 1e-12);
}

TEST(Beampattern, MatchedRankOne) {
  const ArrayGeometry g{8, 0.5};
  const CVector a0 = steering_vector(17.0, g);
  const CMatrix R = a0 * a0.adjoint() * (1.0 / 8);
  EXPECT_NEAR(beampattern_power(SelectionVector::all_ones(8), R, 17.0, g), 8.0, 1e-12);
}

TEST(Beampattern, LinearInR) {
  std::mt19937_64 rng(1);
  const ArrayGeometry g{9, 0.5};
  const SelectionVector p = random_selection(9, 5, rng);
  const CMatrix R1 = random_psd(9, 1.0, rng), R2 = random_psd(9, 0.7, rng);
  for (double t = -90; t <= 90; t += 3)
    EXPECT_NEAR(beampattern_power(p, R1 + R2, t, g), beampattern_power(p, R1, t, g) + beampattern_power(p, R2, t, g),
                1e-12);
}

TEST(Beampattern, DimensionMismatch) {
  const ArrayGeometry g{4, 0.5};
  EXPECT_THROW(beampattern_power(SelectionVector::all_ones(3), CMatrix::Identity(4, 4), 0.0, g), DimensionError);
}

TEST(SensingObjective, ZeroCovariance) {
  const Scenario s = make_setup1(1);
  const SelectionVector p = SelectionVector::prefix(12, 8);
  const CMatrix Z = CMatrix::Zero(12, 12);
  const SensingTerms t0 = sensing_objective(p, 0.0, Z, s.desired, s.geometry);
  EXPECT_EQ(t0.mse_term, 0.0);
  EXPECT_EQ(t0.cross_corr_term, 0.0);
  const SensingTerms t1 = sensing_objective(p, 1.0, Z, s.desired, s.geometry);
  // Grid points inside the two lobes, counted by enumeration.
  int inside = 0;
  for (int deg = -90; deg <= 90; ++deg) inside += (std::abs(deg + 30) <= 7 || std::abs(deg - 30) <= 7);
  EXPECT_EQ(inside, 30);
  EXPECT_NEAR(t1.mse_term, inside / 181.0, 1e-15);
  EXPECT_NEAR(t1.mse_term, 0.16575, 1e-5);
  EXPECT_EQ(t1.cross_corr_term, 0.0);
}

TEST(SensingObjective, SingleTargetHasNoCrossTerm) {
  Scenario s = make_setup1(1);
  s.desired.target_angles_deg = {-30.0};
  std::mt19937_64 rng(4);
  EXPECT_EQ(cross_correlation_term(SelectionVector::all_ones(12), random_psd(12, 1, rng), s.desired, s.geometry), 0.0);
}

TEST(SensingObjective, CrossTermByHand) {
  Scenario s = make_setup1(1);
  s.desired.target_angles_deg = {-30.0, 10.0, 30.0};
  s.desired.cross_corr_weight = 0.5;
  std::mt19937_64 rng(5);
  const CMatrix R = random_psd(12, 1, rng);
  const SelectionVector p = SelectionVector::prefix(12, 8);
  double sum = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) {
      const CVector x = p.mask(steering_vector(s.desired.target_angles_deg[a], s.geometry));
      const CVector y = p.mask(steering_vector(s.desired.target_angles_deg[b], s.geometry));
      sum += std::norm(x.dot(R * y));
    }
  EXPECT_NEAR(cross_correlation_term(p, R, s.desired, s.geometry), 2 * 0.5 / 6 * sum, 1e-13);
}

TEST(AlphaStar, ZeroAndExactMatch) {
  const Scenario s = make_setup1(1);
  const SelectionVector p = SelectionVector::all_ones(12);
  EXPECT_EQ(alpha_star(p, CMatrix::Zero(12, 12), s.desired, s.geometry), 0.0);

  // Flat pattern: P ≡ P_Tx for R = (P_Tx/N) I, so α* = c for P_d ≡ 1/c.
  Scenario flat = s;
  flat.desired.values.setConstant(0.25);
  const CMatrix R = CMatrix::Identity(12, 12) * (1.0 / 12);
  EXPECT_NEAR(alpha_star(p, R, flat.desired, flat.geometry), 4.0, 1e-12);
}

TEST(AlphaStar, DegenerateDesiredThrows) {
  Scenario s = make_setup1(1);
  s.desired.values.setZero();
  EXPECT_THROW(alpha_star(SelectionVector::all_ones(12), CMatrix::Identity(12, 12), s.desired, s.geometry),
               ValidationError);
  EXPECT_EQ(alpha_or_zero(SelectionVector::all_ones(12), CMatrix::Identity(12, 12), s.desired, s.geometry), 0.0);
}

TEST(AlphaStar, GoldenSectionOracle) {
  std::mt19937_64 rng(7);
  const Scenario s = make_setup1(2);
  for (int trial = 0; trial < 10; ++trial) {
    const SelectionVector p = random_selection(12, 8, rng);
    const CMatrix R = random_psd(12, 1.0, rng);
    const double a = alpha_star(p, R, s.desired, s.geometry);
    EXPECT_GE(a, 0.0);
    // The 1-D objective in extended precision; in double the flat minimum
    // only resolves α to about sqrt(eps).
    const RVector P = beampattern(p, R, s.desired, s.geometry);
    const long double g = golden_section_ld(
        [&](long double alpha) {
          long double sum = 0.0L;
          for (int i = 0; i < P.size(); ++i) {
            const long double dev = static_cast<long double>(P(i)) - alpha * s.desired.values(i);
            sum += s.desired.weights(i) * dev * dev;
          }
          return sum / P.size();
        },
        -10.0L, 10.0L);
    EXPECT_NEAR(a, static_cast<double>(g), 1e-8);
    // Every other α is no better.
    const double best = sensing_objective(p, a, R, s.desired, s.geometry).mse_term;
    for (double d : {-0.1, -1e-3, 1e-3, 0.1}) EXPECT_LE(best, sensing_objective(p, a + d, R, s.desired, s.geometry).mse_term);
  }
}

TEST(AlphaStar, ScaleEquivariant) {
  std::mt19937_64 rng(8);
  const Scenario s = make_setup1(2);
  const SelectionVector p = random_selection(12, 8, rng);
  const CMatrix R = random_psd(12, 1.0, rng);
  const double a = alpha_star(p, R, s.desired, s.geometry);
  for (double c : {0.1, 2.5, 40.0}) EXPECT_NEAR(alpha_star(p, c * R, s.desired, s.geometry), c * a, 1e-12 * c);
}

TEST(AchievableRate, ZeroCovariance) {
  const ChannelMatrix ch = generate_rayleigh_channel(4, 12, 3, 0.01);
  EXPECT_EQ(achievable_rate(SelectionVector::all_ones(12), CMatrix::Zero(12, 12), ch), 0.0);
}

TEST(AchievableRate, IdentityChannel) {
  const int N = 5;
  ChannelMatrix ch{CMatrix::Identity(N, N), 0.01};
  const double P = 2.0;
  const CMatrix R = CMatrix::Identity(N, N) * (P / N);
  EXPECT_NEAR(achievable_rate(SelectionVector::all_ones(N), R, ch), N * std::log2(1 + P / (N * 0.01)), 1e-12);
}

TEST(AchievableRate, EigenvalueOracle) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const ChannelMatrix ch = generate_rayleigh_channel(4, 12, 100 + trial, 0.01);
    const std::vector<int> idx = random_subset(12, 8, rng);
    const CMatrix R = random_psd(12, 1.0, rng);
    EXPECT_NEAR(achievable_rate(SelectionVector::from_indices(12, idx), R, ch), eigen_rate(idx, R, ch.H, 0.01), 1e-10);
  }
}

TEST(AchievableRate, MaskingEquivalence) {
  std::mt19937_64 rng(10);
  const ChannelMatrix ch = generate_rayleigh_channel(4, 12, 11, 0.01);
  const std::vector<int> idx = random_subset(12, 6, rng);
  const CMatrix R = random_psd(12, 1.0, rng);
  CMatrix Hs(4, 6), Rs(6, 6);
  for (int i = 0; i < 6; ++i) {
    Hs.col(i) = ch.H.col(idx[i]);
    for (int j = 0; j < 6; ++j) Rs(i, j) = R(idx[i], idx[j]);
  }
  EXPECT_NEAR(achievable_rate(SelectionVector::from_indices(12, idx), R, ch),
              achievable_rate(SelectionVector::all_ones(6), Rs, ChannelMatrix{Hs, 0.01}), 1e-10);
}

TEST(AchievableRate, LoewnerMonotone) {
  std::mt19937_64 rng(12);
  const ChannelMatrix ch = generate_rayleigh_channel(4, 12, 13, 0.01);
  for (int trial = 0; trial < 20; ++trial) {
    const SelectionVector p = random_selection(12, 8, rng);
    const CMatrix R1 = random_psd(12, 1.0, rng);
    const CVector v = random_complex(12, 1, rng);
    EXPECT_GE(achievable_rate(p, R1 + v * v.adjoint(), ch), achievable_rate(p, R1, ch) - 1e-9);
  }
}

TEST(ScalarizedObjective, Composition) {
  std::mt19937_64 rng(14);
  const SelectionVector p = SelectionVector::prefix(12, 8);
  const CMatrix R = random_psd(12, 1.0, rng);
  const Scenario s0 = make_setup1(5, 0.0);
  const ObjectiveBreakdown b0 = scalarized_objective(p, 0.7, R, s0);
  EXPECT_EQ(b0.scalarized, b0.mse_term + b0.cross_corr_term);

  const Scenario s1 = make_setup1(5, 1.0);
  const ObjectiveBreakdown b1 = scalarized_objective(p, 0.7, R, s1);
  const SensingTerms t = sensing_objective(p, 0.7, R, s1.desired, s1.geometry);
  const double rate = achievable_rate(p, R, s1.channel);
  EXPECT_EQ(b1.mse_term, t.mse_term);
  EXPECT_EQ(b1.cross_corr_term, t.cross_corr_term);
  EXPECT_EQ(b1.rate_bpcu, rate);
  EXPECT_NEAR(b1.scalarized, t.mse_term + t.cross_corr_term - rate, 1e-12 * std::abs(b1.scalarized));

  for (double mu : {0.0, 0.3, 5.0})
    EXPECT_EQ(scalarized_objective(p, 0.0, CMatrix::Zero(12, 12), make_setup1(5, mu)).scalarized, 0.0);
}

TEST(ObjectiveGradient, ZeroAtOrigin) {
  const Scenario s = make_setup1(1, 0.0);
  const CMatrix G = objective_gradient(SelectionVector::prefix(12, 8), 0.0, CMatrix::Zero(12, 12), s);
  EXPECT_EQ(G.norm(), 0.0);
}

TEST(ObjectiveGradient, RateOnlyClosedForm) {
  const int N = 6;
  Scenario s = make_reference_scenario(N, N, N, 15.0, 1, 0.8);
  s.channel.H = CMatrix::Identity(N, N);
  const double P = s.total_power;
  const CMatrix R = CMatrix::Identity(N, N) * (P / N);
  const CMatrix G = objective_gradient(SelectionVector::all_ones(N), 0.0, R, s, ObjectiveMode::rate_only);
  const double expect = -(0.8 / std::numbers::ln2) / (s.channel.noise_variance + P / N);
  EXPECT_NEAR((G - CMatrix::Identity(N, N) * expect).norm(), 0.0, 1e-10);
}

TEST(ObjectiveGradient, CentralDifferences) {
  std::mt19937_64 rng(15);
  for (double mu : {0.0, 0.01, 1.0}) {
    const Scenario s = make_setup1(21, mu);
    const SelectionVector p = random_selection(12, 8, rng);
    const CMatrix R = random_psd(12, 1.0, rng);
    const double alpha = 0.8;
    const CMatrix G = objective_gradient(p, alpha, R, s);
    EXPECT_LE((G - G.adjoint()).norm(), 1e-10 * std::max(1.0, G.norm()));
    const double h = 1e-5;
    for (int d = 0; d < 10; ++d) {
      CMatrix D = random_hermitian(12, rng);
      D /= D.norm();
      const double fd = (full_value(p, alpha, R + h * D, s) - full_value(p, alpha, R - h * D, s)) / (2 * h);
      const double an = (G.conjugate().cwiseProduct(D)).sum().real();
      EXPECT_NEAR(an, fd, 1e-4 * std::max(std::abs(fd), 1e-3)) << "mu " << mu;
    }
  }
}

TEST(ObjectiveConvexity, Midpoint) {
  std::mt19937_64 rng(16);
  for (double mu : {0.0, 0.1, 1.0}) {
    const Scenario s = make_setup1(22, mu);
    const SelectionVector p = random_selection(12, 8, rng);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
      const CMatrix R1 = random_psd(12, u(rng) / 3, rng), R2 = random_psd(12, u(rng) / 3, rng);
      const double a1 = u(rng), a2 = u(rng);
      const double mid = full_value(p, 0.5 * (a1 + a2), 0.5 * (R1 + R2), s);
      EXPECT_LE(mid, 0.5 * (full_value(p, a1, R1, s) + full_value(p, a2, R2, s)) + 1e-9);
    }
  }
}

// The solver's reduced evaluation against the full-space formulas.
TEST(SubsetObjective, AgreesWithReference) {
  std::mt19937_64 rng(17);
  for (double mu : {0.0, 0.01, 1.0}) {
    for (auto mode : {ObjectiveMode::joint, ObjectiveMode::rate_only}) {
      if (mode == ObjectiveMode::rate_only && mu == 0.0) continue;
      const Scenario s = make_setup2(23, mu);
      const SelectionVector p = random_selection(20, 12, rng);
      const CMatrix R = random_psd(20, 1.0, rng);
      CMatrix Rm = CMatrix::Zero(20, 20);
      const auto& idx = p.selected_indices();
      for (int i : idx)
        for (int j : idx) Rm(i, j) = R(i, j);

      const detail::SubsetObjective obj(s, p, mode);
      CMatrix Rs(12, 12);
      for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) Rs(i, j) = R(idx[i], idx[j]);
      CMatrix Gs;
      const detail::SubsetValue v = obj.evaluate(Rs, Gs);

      const double alpha = alpha_star(p, Rm, s.desired, s.geometry);
      const ObjectiveBreakdown b = scalarized_objective(p, alpha, Rm, s, mode);
      EXPECT_NEAR(v.alpha, alpha, 1e-12);
      EXPECT_NEAR(v.mse, b.mse_term, 1e-12);
      EXPECT_NEAR(v.cross, b.cross_corr_term, 1e-12);
      EXPECT_NEAR(v.rate, b.rate_bpcu, 1e-10);
      EXPECT_NEAR(v.value, b.scalarized, 1e-10);

      const CMatrix G = objective_gradient(p, alpha, Rm, s, mode);
      CMatrix Gsub(12, 12);
      for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) Gsub(i, j) = G(idx[i], idx[j]);
      EXPECT_LE((Gs - Gsub).norm(), 1e-10 * std::max(1.0, G.norm()));
    }
  }
}
