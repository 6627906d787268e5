#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "pilotwave/errors.hpp"
#include "pilotwave/wavefield.hpp"

namespace pilotwave::wavefield {

namespace {

constexpr double kSeriesLimit = 2.0;
constexpr int kMaxTerms = 200;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Maclaurin series of both integrals, x >= 0:
//   C = sum (-1)^n (pi/2)^(2n)   x^(4n+1) / ((2n)!   (4n+1))
//   S = sum (-1)^n (pi/2)^(2n+1) x^(4n+3) / ((2n+1)! (4n+3))
FresnelPair series(double x) {
  const double z = 0.5 * std::numbers::pi * x * x;
  double term = x;  // x * z^k / k!, starting at k = 0
  double c = 0.0;
  double s = 0.0;
  double sign_c = 1.0;
  double sign_s = 1.0;
  for (int k = 0; k < kMaxTerms; ++k) {
    const double contribution = term / static_cast<double>(2 * k + 1);
    if (k % 2 == 0) {
      c += sign_c * contribution;
      sign_c = -sign_c;
    } else {
      s += sign_s * contribution;
      sign_s = -sign_s;
    }
    if (k > 2 && contribution < kEps * (std::abs(c) + std::abs(s))) return {c, s};
    term *= z / static_cast<double>(k + 1);
  }
  throw InvariantViolation("Fresnel power series did not converge");
}

// Auxiliary functions through the erfc continued fraction, evaluated with the
// modified Lentz method. Returns C, S for x > kSeriesLimit.
FresnelPair continued_fraction(double x) {
  using cplx = std::complex<double>;
  constexpr double kTiny = 1e-300;
  const double pix2 = std::numbers::pi * x * x;
  cplx b(1.0, -pix2);
  cplx cc(1.0 / kTiny, 0.0);
  cplx d = 1.0 / b;
  cplx h = d;
  double n = -1.0;
  bool converged = false;
  for (int k = 2; k <= kMaxTerms; ++k) {
    n += 2.0;
    const double a = -n * (n + 1.0);
    b += 4.0;
    d = 1.0 / (a * d + b);
    cc = b + a / cc;
    const cplx del = cc * d;
    h *= del;
    if (std::abs(del.real() - 1.0) + std::abs(del.imag()) < kEps) {
      converged = true;
      break;
    }
  }
  if (!converged) throw InvariantViolation("Fresnel continued fraction did not converge");
  h *= cplx(x, -x);
  const double phase = 0.5 * pix2;
  const cplx cs = cplx(0.5, 0.5) * (1.0 - cplx(std::cos(phase), std::sin(phase)) * h);
  return {cs.real(), cs.imag()};
}

}  // namespace

FresnelPair fresnel(double u) {
  if (!std::isfinite(u)) throw std::domain_error("Fresnel integral argument is not finite");
  const double x = std::abs(u);
  if (x == 0.0) return {0.0, 0.0};
  FresnelPair r = x <= kSeriesLimit ? series(x) : continued_fraction(x);
  if (u < 0.0) {
    r.c = -r.c;
    r.s = -r.s;
  }
  return r;
}

double fresnel_c(double u) { return fresnel(u).c; }
double fresnel_s(double u) { return fresnel(u).s; }

}  // namespace pilotwave::wavefield
