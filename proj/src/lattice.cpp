#include "pilotwave/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pilotwave::lattice {

Grid1D::Grid1D(double x_min, double x_max, std::size_t n_sites)
    : x_min_(x_min), x_max_(x_max), n_(n_sites), dx_(0.0) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max)) {
    throw std::invalid_argument("grid bounds must be finite");
  }
  if (!(x_max > x_min)) {
    throw std::invalid_argument("grid requires x_max > x_min");
  }
  if (n_sites < 2) {
    throw std::invalid_argument("grid requires at least 2 sites, got " + std::to_string(n_sites));
  }
  dx_ = (x_max - x_min) / static_cast<double>(n_sites - 1);
  if (!(dx_ > 0.0)) {
    throw std::invalid_argument("grid spacing underflows to zero");
  }
}

std::vector<double> Grid1D::positions() const {
  std::vector<double> xs(n_);
  for (std::size_t i = 0; i < n_; ++i) xs[i] = position(i);
  return xs;
}

std::size_t Grid1D::nearest(double x) const noexcept {
  if (!(x > x_min_)) return 0;
  if (!(x < x_max_)) return n_ - 1;
  const double r = std::round((x - x_min_) / dx_);
  return std::min(static_cast<std::size_t>(r), n_ - 1);
}

GridPtr make_grid(double x_min, double x_max, std::size_t n_sites) {
  return std::make_shared<const Grid1D>(x_min, x_max, n_sites);
}

TimeParameters::TimeParameters(double tau, double v_y, double mass)
    : tau_(tau), v_y_(v_y), mass_(mass), dy_(0.0), lambda_(0.0) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive");
  if (!(v_y > 0.0) || !std::isfinite(v_y)) throw std::invalid_argument("v_y must be positive");
  if (!(mass > 0.0) || !std::isfinite(mass)) throw std::invalid_argument("mass must be positive");
  dy_ = v_y_ * tau_;
  lambda_ = kPlanck / (mass_ * v_y_);
}

TimeParameters TimeParameters::from_wavelength(double wavelength, double line_spacing,
                                               double mass) {
  if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be positive");
  if (!(line_spacing > 0.0)) throw std::invalid_argument("line spacing must be positive");
  if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
  const double v_y = kPlanck / (mass * wavelength);
  return TimeParameters(line_spacing / v_y, v_y, mass);
}

double compensated_sum(std::span<const double> values) noexcept {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

double ProbabilityDistribution::max_weight() const noexcept {
  return weights_.empty() ? 0.0 : *std::max_element(weights_.begin(), weights_.end());
}

namespace {

void check_weights(std::span<const double> w, const Grid1D& grid) {
  if (w.size() != grid.size()) {
    throw std::invalid_argument("weight count " + std::to_string(w.size()) +
                                " does not match grid size " + std::to_string(grid.size()));
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i])) {
      throw std::invalid_argument("weight " + std::to_string(i) + " is not finite");
    }
    if (w[i] < 0.0) {
      throw std::invalid_argument("weight " + std::to_string(i) + " is negative");
    }
  }
}

}  // namespace

ProbabilityDistribution ProbabilityDistribution::from_normalized(std::vector<double> weights,
                                                                 GridPtr grid) {
  if (!grid) throw std::invalid_argument("distribution needs a grid");
  check_weights(weights, *grid);
  const double total = compensated_sum(weights);
  if (std::abs(total - 1.0) > kNormTolerance) {
    throw std::invalid_argument("distribution is not normalized (sum = " +
                                std::to_string(total) + ")");
  }
  return ProbabilityDistribution(std::move(weights), std::move(grid));
}

ProbabilityDistribution normalize(std::span<const double> raw_weights, GridPtr grid) {
  if (!grid) throw std::invalid_argument("distribution needs a grid");
  check_weights(raw_weights, *grid);

  std::vector<double> w(raw_weights.begin(), raw_weights.end());
  const bool has_dust = std::any_of(w.begin(), w.end(),
                                    [](double v) { return v > 0.0 && v < kWeightClamp; });
  double total = compensated_sum(w);
  if (!(total > 0.0)) {
    throw std::invalid_argument("cannot normalize: no probability mass");
  }
  // Already-normalized input is returned as is.
  constexpr double kPassThrough = 16.0 * std::numeric_limits<double>::epsilon();
  if (!has_dust && std::abs(total - 1.0) <= kPassThrough) {
    return ProbabilityDistribution(std::move(w), std::move(grid));
  }

  for (int pass = 0; pass < 2; ++pass) {
    for (double& v : w) v /= total;
    bool clamped = false;
    for (double& v : w) {
      if (v > 0.0 && v < kWeightClamp) {
        v = 0.0;
        clamped = true;
      }
    }
    if (!clamped) break;
    total = compensated_sum(w);
    if (!(total > 0.0)) throw std::invalid_argument("cannot normalize: all mass below clamp");
  }
  return ProbabilityDistribution(std::move(w), std::move(grid));
}

}  // namespace pilotwave::lattice
