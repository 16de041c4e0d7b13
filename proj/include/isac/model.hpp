#pragma once

// Domain types for a transmit array with antenna selection: geometry,
// selection vectors, the communication channel, the desired sensing
// beampattern and the immutable Scenario that bundles them.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "isac/error.hpp"

namespace isac {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

struct ArrayGeometry {
  int num_antennas = 1;
  double spacing_over_wavelength = 0.5;

  void validate() const {
    if (num_antennas < 1)
      throw ValidationError("geometry.num_antennas", "must be >= 1");
    if (!(spacing_over_wavelength > 0.0) || !std::isfinite(spacing_over_wavelength))
      throw ValidationError("geometry.spacing_over_wavelength", "must be a finite positive number");
  }

  bool operator==(const ArrayGeometry&) const = default;
};

/// Binary antenna-activation pattern p. Keeps the sorted list of active
/// positions alongside the bit vector so both views are always consistent.
class SelectionVector {
 public:
  SelectionVector() = default;
  explicit SelectionVector(int num_antennas) : bits_(static_cast<size_t>(num_antennas), 0) {
    if (num_antennas < 0) throw DimensionError("SelectionVector: negative size");
  }

  static SelectionVector all_ones(int num_antennas) {
    SelectionVector p(num_antennas);
    for (int n = 0; n < num_antennas; ++n) p.set(n);
    return p;
  }

  /// First `count` antennas active (a contiguous sub-ULA).
  static SelectionVector prefix(int num_antennas, int count) {
    if (count > num_antennas) throw DimensionError("SelectionVector::prefix: count exceeds size");
    SelectionVector p(num_antennas);
    for (int n = 0; n < count; ++n) p.set(n);
    return p;
  }

  /// Activates the listed 0-based positions. Repeated indices collapse, so
  /// count() may be smaller than indices.size().
  static SelectionVector from_indices(int num_antennas, std::span<const int> indices) {
    SelectionVector p(num_antennas);
    for (int i : indices) {
      if (i < 0 || i >= num_antennas)
        throw DimensionError("SelectionVector: antenna index " + std::to_string(i) + " out of range");
      p.set(i);
    }
    return p;
  }

  int size() const { return static_cast<int>(bits_.size()); }
  int count() const { return static_cast<int>(selected_.size()); }
  bool operator[](int n) const { return bits_[static_cast<size_t>(n)] != 0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  const std::vector<int>& selected_indices() const { return selected_; }

  /// p ⊙ v
  CVector mask(const CVector& v) const {
    if (v.size() != size()) throw DimensionError("SelectionVector::mask: length mismatch");
    CVector out = CVector::Zero(v.size());
    for (int n : selected_) out(n) = v(n);
    return out;
  }

  bool operator==(const SelectionVector&) const = default;

 private:
  void set(int n) {
    if (bits_[static_cast<size_t>(n)]) return;
    bits_[static_cast<size_t>(n)] = 1;
    selected_.insert(std::upper_bound(selected_.begin(), selected_.end(), n), n);
  }

  std::vector<std::uint8_t> bits_;
  std::vector<int> selected_;
};

struct ChannelMatrix {
  CMatrix H;  // M x N
  double noise_variance = 1.0;

  int num_ue_antennas() const { return static_cast<int>(H.rows()); }
  int num_tx_antennas() const { return static_cast<int>(H.cols()); }

  bool operator==(const ChannelMatrix& o) const {
    return noise_variance == o.noise_variance && H.rows() == o.H.rows() && H.cols() == o.H.cols() &&
           H == o.H;
  }
};

/// Uniform angular grid in degrees.
struct AngularGrid {
  double start_deg = -90.0;
  double step_deg = 1.0;
  int points = 181;

  double angle_deg(int g) const { return start_deg + step_deg * g; }
  double end_deg() const { return angle_deg(points - 1); }
  bool operator==(const AngularGrid&) const = default;
};

/// Rectangular lobe of the desired pattern: `level` on the closed interval
/// [center - beamwidth/2, center + beamwidth/2].
struct Mainlobe {
  double center_deg = 0.0;
  double beamwidth_deg = 0.0;
  double level = 1.0;
  bool operator==(const Mainlobe&) const = default;
};

struct DesiredBeampattern {
  AngularGrid grid;
  RVector values;   // P_d(θ_g)
  RVector weights;  // γ_g
  double cross_corr_weight = 1.0;
  std::vector<double> target_angles_deg;

  int size() const { return grid.points; }
  int num_targets() const { return static_cast<int>(target_angles_deg.size()); }

  /// Σ_g γ_g P_d(θ_g)², the normaliser of the closed-form scale factor.
  double weighted_energy() const { return (weights.array() * values.array().square()).sum(); }

  void validate() const {
    if (grid.points < 1) throw ValidationError("desired.grid_points", "must be >= 1");
    if (!(grid.step_deg > 0.0)) throw ValidationError("desired.grid_step_deg", "must be positive");
    if (grid.start_deg < -90.0 - 1e-9 || grid.end_deg() > 90.0 + 1e-9)
      throw ValidationError("desired.grid_start_deg", "grid must lie within [-90, 90] degrees");
    if (values.size() != grid.points) throw ValidationError("desired.values", "length must equal grid_points");
    if (weights.size() != grid.points) throw ValidationError("desired.weights", "length must equal grid_points");
    if ((values.array() < 0.0).any() || !values.allFinite())
      throw ValidationError("desired.values", "must be finite and nonnegative");
    if ((weights.array() < 0.0).any() || !weights.allFinite())
      throw ValidationError("desired.weights", "must be finite and nonnegative");
    if (!(cross_corr_weight >= 0.0)) throw ValidationError("desired.cross_corr_weight", "must be nonnegative");
    if (target_angles_deg.empty()) throw ValidationError("desired.target_angles_deg", "at least one target required");
    for (double t : target_angles_deg) {
      if (t < grid.start_deg - 1e-9 || t > grid.end_deg() + 1e-9)
        throw ValidationError("desired.target_angles_deg", "target angle outside the grid span");
    }
    if ((values.array() > 0.0).any() && !(weighted_energy() > 0.0))
      throw ValidationError("desired.weights", "weights vanish on the whole support of the desired pattern");
  }

  bool operator==(const DesiredBeampattern& o) const {
    return grid == o.grid && values.size() == o.values.size() && values == o.values &&
           weights.size() == o.weights.size() && weights == o.weights &&
           cross_corr_weight == o.cross_corr_weight && target_angles_deg == o.target_angles_deg;
  }
};

/// Sum of rectangular lobes over the grid, uniform weights.
inline DesiredBeampattern make_desired_beampattern(const AngularGrid& grid, std::span<const Mainlobe> lobes,
                                                   double weight, double cross_corr_weight,
                                                   std::vector<double> target_angles_deg) {
  DesiredBeampattern d;
  d.grid = grid;
  d.values = RVector::Zero(std::max(grid.points, 0));
  d.weights = RVector::Constant(std::max(grid.points, 0), weight);
  d.cross_corr_weight = cross_corr_weight;
  d.target_angles_deg = std::move(target_angles_deg);
  for (int g = 0; g < grid.points; ++g) {
    const double theta = grid.angle_deg(g);
    for (const Mainlobe& lobe : lobes) {
      // Tolerance keeps grid points that land on a lobe edge inside it.
      if (std::abs(theta - lobe.center_deg) <= 0.5 * lobe.beamwidth_deg + 1e-9) d.values(g) += lobe.level;
    }
  }
  return d;
}

struct Scenario {
  ArrayGeometry geometry;
  int num_rf_chains = 1;
  ChannelMatrix channel;
  DesiredBeampattern desired;
  double total_power = 1.0;
  double tradeoff = 0.0;  // μ

  int num_antennas() const { return geometry.num_antennas; }

  void validate() const {
    geometry.validate();
    if (num_rf_chains < 1) throw ValidationError("num_rf_chains", "must be >= 1");
    if (num_rf_chains > geometry.num_antennas)
      throw ValidationError("num_rf_chains", "K = " + std::to_string(num_rf_chains) +
                                                 " exceeds num_antennas N = " +
                                                 std::to_string(geometry.num_antennas));
    if (channel.H.rows() < 1) throw ValidationError("channel.num_ue_antennas", "must be >= 1");
    if (channel.H.cols() != geometry.num_antennas)
      throw ValidationError("channel.explicit_matrix", "column count must equal geometry.num_antennas");
    if (!channel.H.allFinite()) throw ValidationError("channel.explicit_matrix", "entries must be finite");
    if (!(channel.noise_variance > 0.0) || !std::isfinite(channel.noise_variance))
      throw ValidationError("channel.noise_variance", "must be a finite positive number");
    desired.validate();
    if (!(total_power > 0.0) || !std::isfinite(total_power))
      throw ValidationError("power", "must be a finite positive number");
    if (!(tradeoff >= 0.0) || !std::isfinite(tradeoff)) throw ValidationError("mu", "must be finite and >= 0");
  }

  bool operator==(const Scenario&) const = default;
};

/// a(θ) for a ULA: element n is exp(-j 2π n (d/λ) sin θ). θ in degrees, [-90, 90].
inline CVector steering_vector(double theta_deg, const ArrayGeometry& geom) {
  const double phase_step = -2.0 * kPi * geom.spacing_over_wavelength * std::sin(deg_to_rad(theta_deg));
  CVector a(geom.num_antennas);
  for (int n = 0; n < geom.num_antennas; ++n) a(n) = std::polar(1.0, phase_step * n);
  return a;
}

/// Columns are steering vectors at the listed angles.
inline CMatrix steering_matrix(std::span<const double> angles_deg, const ArrayGeometry& geom) {
  CMatrix A(geom.num_antennas, static_cast<Eigen::Index>(angles_deg.size()));
  for (size_t i = 0; i < angles_deg.size(); ++i) A.col(static_cast<Eigen::Index>(i)) = steering_vector(angles_deg[i], geom);
  return A;
}

/// Identifier of the channel generator below. Reimplementations that want
/// identical draws must follow the same recipe:
///   engine  : std::mt19937_64 seeded with `seed`
///   uniform : u = (x >> 11) * 2^-53 for each 64-bit output x
///   entries : row-major; per entry two uniforms u1, u2 and
///             r = sqrt(-ln(1 - u1)), H = r cos(2π u2) + j r sin(2π u2)
/// giving circularly-symmetric complex Gaussians with E|h|² = 1.
inline constexpr const char* kChannelGenerator = "mt19937_64-boxmuller-v1";

inline ChannelMatrix generate_rayleigh_channel(int num_ue_antennas, int num_tx_antennas, std::uint64_t seed,
                                               double noise_variance = 1.0) {
  if (num_ue_antennas < 1 || num_tx_antennas < 1)
    throw ValidationError("channel", "dimensions must be >= 1");
  std::mt19937_64 engine(seed);
  auto uniform = [&engine] { return static_cast<double>(engine() >> 11) * 0x1.0p-53; };
  ChannelMatrix ch;
  ch.noise_variance = noise_variance;
  ch.H.resize(num_ue_antennas, num_tx_antennas);
  for (int m = 0; m < num_ue_antennas; ++m) {
    for (int n = 0; n < num_tx_antennas; ++n) {
      const double u1 = uniform();
      const double u2 = uniform();
      const double r = std::sqrt(-std::log1p(-u1));
      ch.H(m, n) = std::polar(r, 2.0 * kPi * u2);
    }
  }
  return ch;
}

/// Same scenario, new channel draw of identical dimensions and noise level.
inline Scenario with_channel_seed(Scenario s, std::uint64_t seed) {
  s.channel = generate_rayleigh_channel(s.channel.num_ue_antennas(), s.channel.num_tx_antennas(), seed,
                                        s.channel.noise_variance);
  return s;
}

inline Scenario with_tradeoff(Scenario s, double mu) {
  s.tradeoff = mu;
  return s;
}

// Reference configurations: d = λ/2, P_Tx = 1, σ² = 0.01, G = 181 over
// [-90°, 90°], unit weights, two targets at ±30° with flat-topped lobes.

inline Scenario make_reference_scenario(int num_antennas, int num_rf_chains, int num_ue_antennas,
                                        double lobe_width_deg, std::uint64_t seed, double mu = 0.0) {
  Scenario s;
  s.geometry = {num_antennas, 0.5};
  s.num_rf_chains = num_rf_chains;
  s.channel = generate_rayleigh_channel(num_ue_antennas, num_antennas, seed, 0.01);
  const Mainlobe lobes[] = {{-30.0, lobe_width_deg, 1.0}, {30.0, lobe_width_deg, 1.0}};
  s.desired = make_desired_beampattern(AngularGrid{}, lobes, 1.0, 1.0, {-30.0, 30.0});
  s.total_power = 1.0;
  s.tradeoff = mu;
  return s;
}

/// N = 12, K = 8, M = 4, 15° lobes.
inline Scenario make_setup1(std::uint64_t seed, double mu = 0.0) { return make_reference_scenario(12, 8, 4, 15.0, seed, mu); }

/// N = 20, K = 12, M = 6, 11° lobes.
inline Scenario make_setup2(std::uint64_t seed, double mu = 0.0) { return make_reference_scenario(20, 12, 6, 11.0, seed, mu); }

}  // namespace isac
