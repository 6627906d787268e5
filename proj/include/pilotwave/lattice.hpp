#pragma once

// Discrete configuration space: one uniform grid of sites per time line,
// probability distributions over those sites, and the time-step physics
// (step duration, transverse wave speed, mass, de Broglie wavelength).

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace pilotwave::lattice {

inline constexpr double kPlanck = 6.62607015e-34;         // J s (exact, SI 2019)
inline constexpr double kSpeedOfLight = 299792458.0;      // m / s
inline constexpr double kElectronMass = 9.1093837015e-31; // kg

/// Weights below this after normalization are set to exactly zero.
inline constexpr double kWeightClamp = 1e-15;
/// Allowed |sum - 1| for a distribution.
inline constexpr double kNormTolerance = 1e-12;

/// Uniformly spaced sites x_i on [x_min, x_max].
///
/// Positions interpolate between the two endpoints, so position(0) == x_min
/// and position(n-1) == x_max bit-exactly, and a grid with x_max == -x_min
/// is mirror-symmetric bit-exactly: position(n-1-i) == -position(i).
class Grid1D {
 public:
  Grid1D(double x_min, double x_max, std::size_t n_sites);

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  std::size_t size() const noexcept { return n_; }
  double spacing() const noexcept { return dx_; }

  double position(std::size_t i) const noexcept {
    const double span = static_cast<double>(n_ - 1);
    return (x_min_ * (span - static_cast<double>(i)) + x_max_ * static_cast<double>(i)) / span;
  }
  std::vector<double> positions() const;

  /// Index of the site closest to x (clamped to the grid).
  std::size_t nearest(double x) const noexcept;

  friend bool operator==(const Grid1D& a, const Grid1D& b) noexcept {
    return a.x_min_ == b.x_min_ && a.x_max_ == b.x_max_ && a.n_ == b.n_;
  }

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
  double dx_;
};

using GridPtr = std::shared_ptr<const Grid1D>;

/// Throws std::invalid_argument unless x_max > x_min and n_sites >= 2.
GridPtr make_grid(double x_min, double x_max, std::size_t n_sites);

/// Step duration tau, wave speed v_y along the propagation axis, particle mass.
/// Line spacing and wavelength are derived once and stored:
///   dy = v_y * tau,  lambda = h / (m * v_y).
class TimeParameters {
 public:
  TimeParameters(double tau, double v_y, double mass);

  /// Picks v_y from the de Broglie relation for the given wavelength and mass,
  /// then tau so that v_y * tau is the requested line spacing.
  static TimeParameters from_wavelength(double wavelength, double line_spacing,
                                        double mass = kElectronMass);

  double tau() const noexcept { return tau_; }
  double v_y() const noexcept { return v_y_; }
  double dy() const noexcept { return dy_; }
  double mass() const noexcept { return mass_; }
  double wavelength() const noexcept { return lambda_; }

 private:
  double tau_;
  double v_y_;
  double mass_;
  double dy_;
  double lambda_;
};

/// Nonnegative weights over the sites of one grid, summing to one.
class ProbabilityDistribution {
 public:
  /// Validates an already-normalized weight vector (no rescaling).
  static ProbabilityDistribution from_normalized(std::vector<double> weights, GridPtr grid);

  const Grid1D& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double operator[](std::size_t i) const noexcept { return weights_[i]; }
  std::size_t size() const noexcept { return weights_.size(); }
  double max_weight() const noexcept;

  /// True when both live on identical grids; only then do indices agree.
  bool comparable(const ProbabilityDistribution& other) const noexcept {
    return *grid_ == *other.grid_;
  }

 private:
  ProbabilityDistribution(std::vector<double> w, GridPtr g)
      : grid_(std::move(g)), weights_(std::move(w)) {}

  friend ProbabilityDistribution normalize(std::span<const double>, GridPtr);

  GridPtr grid_;
  std::vector<double> weights_;
};

/// Scales raw nonnegative weights to unit sum and clamps dust (< 1e-15) to 0.
/// Input that is already normalized (to a few ulp) passes through unchanged,
/// which makes the operation idempotent.
ProbabilityDistribution normalize(std::span<const double> raw_weights, GridPtr grid);

/// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values) noexcept;

/// Running Neumaier sum.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace pilotwave::lattice
