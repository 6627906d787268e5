#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

// Fresnel integrals by Gauss-Kronrod quadrature. Breakpoints sit at
// t = sqrt(k), so every panel spans a quarter period of the integrand.
class FresnelQuadrature {
 public:
  explicit FresnelQuadrature(double u_max) {
    const auto k_max = static_cast<std::size_t>(std::ceil(u_max * u_max)) + 1;
    c_.assign(k_max + 1, 0.0);
    s_.assign(k_max + 1, 0.0);
    for (std::size_t k = 1; k <= k_max; ++k) {
      const double a = std::sqrt(static_cast<double>(k - 1));
      const double b = std::sqrt(static_cast<double>(k));
      c_[k] = c_[k - 1] + panel_c(a, b);
      s_[k] = s_[k - 1] + panel_s(a, b);
    }
  }

  double c(double u) const { return u < 0 ? -c_pos(-u) : c_pos(u); }
  double s(double u) const { return u < 0 ? -s_pos(-u) : s_pos(u); }

 private:
  static double panel_c(double a, double b) {
    auto f = [](double t) { return std::cos(std::numbers::pi * t * t / 2.0); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 5, 1e-13);
  }
  static double panel_s(double a, double b) {
    auto f = [](double t) { return std::sin(std::numbers::pi * t * t / 2.0); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 5, 1e-13);
  }
  double c_pos(double u) const {
    const auto k = static_cast<std::size_t>(std::floor(u * u));
    const double a = std::sqrt(static_cast<double>(k));
    return c_.at(k) + (u > a ? panel_c(a, u) : 0.0);
  }
  double s_pos(double u) const {
    const auto k = static_cast<std::size_t>(std::floor(u * u));
    const double a = std::sqrt(static_cast<double>(k));
    return s_.at(k) + (u > a ? panel_s(a, u) : 0.0);
  }

  std::vector<double> c_;
  std::vector<double> s_;
};

// The minimal-matrix double loop exactly as written in pseudocode: dense
// joint table, no sparsity, no top-up.
inline std::vector<double> double_loop_joint(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<double> j(n * m, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t xp = 0; xp < m; ++xp) {
      if (a[x] * b[xp] > 0) {
        const double t = std::min(a[x], b[xp]);
        j[x * m + xp] = t;
        a[x] -= t;
        b[xp] -= t;
      }
    }
  }
  return j;
}

// Random weights summing to one; each site is zero with probability p_zero
// (at least one site stays positive).
inline std::vector<double> random_weights(std::mt19937_64& rng, std::size_t n,
                                          double p_zero = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (;;) {
    total = 0.0;
    for (double& v : w) {
      v = u(rng) < p_zero ? 0.0 : u(rng) + 1e-3;
      total += v;
    }
    if (total > 0.0) break;
  }
  for (double& v : w) v /= total;
  return w;
}

// Mass on a set of weights: sum in long double for reference use.
inline long double exact_sum(const std::vector<double>& w) {
  long double s = 0.0L;
  for (double v : w) s += v;
  return s;
}

}  // namespace oracle
