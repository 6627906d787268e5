#pragma once

// Closed-form near-field wave behind one or two slits, built from the Fresnel
// integrals, and its |psi|^2 sampling onto lattice lines.

#include <complex>

#include "pilotwave/lattice.hpp"

namespace pilotwave::wavefield {

/// C(u) = int_0^u cos(pi t^2 / 2) dt. Throws std::domain_error on non-finite u.
double fresnel_c(double u);
/// S(u) = int_0^u sin(pi t^2 / 2) dt. Throws std::domain_error on non-finite u.
double fresnel_s(double u);

struct FresnelPair {
  double c;
  double s;
};
/// Both integrals from one evaluation.
FresnelPair fresnel(double u);

/// Slit width a and center-to-center separation d. d == 0 means a single slit
/// centered at x = 0; otherwise the two slits are centered at x = +-d/2.
class SlitGeometry {
 public:
  SlitGeometry(double width, double separation);

  double width() const noexcept { return width_; }
  double separation() const noexcept { return separation_; }
  bool single() const noexcept { return separation_ == 0.0; }

  /// True when x lies in a closed aperture interval.
  bool inside(double x) const noexcept;
  /// True when [lo, hi] lies entirely in one aperture.
  bool covers(double lo, double hi) const noexcept;

 private:
  double width_;
  double separation_;
};

/// Unnormalized field value. Only |psi|^2 ratios carry meaning.
using ComplexAmplitude = std::complex<double>;

/// Field behind a single slit of width a centered at x = 0, overall constant 1:
///   psi = [C(u2) - C(u1)] + i [S(u2) - S(u1)],
///   u1 = sqrt(2/(lambda y)) (x + a/2),  u2 = sqrt(2/(lambda y)) (x - a/2).
/// Throws std::invalid_argument for y <= 0 or lambda <= 0.
ComplexAmplitude single_slit_amplitude(double x, double y, double width, double wavelength);
ComplexAmplitude single_slit_amplitude(double x, double y, const SlitGeometry& geom,
                                       double wavelength);

/// psi_D(x, y) = psi(x - d/2, y) + psi(x + d/2, y).
ComplexAmplitude double_slit_amplitude(double x, double y, const SlitGeometry& geom,
                                       double wavelength);

/// Field for the configured geometry (single or double slit).
ComplexAmplitude amplitude(double x, double y, const SlitGeometry& geom, double wavelength);

/// How sites are assigned to an aperture on the diaphragm line (y = 0).
enum class ApertureAlignment {
  /// Site counts when its whole cell [x - dx/2, x + dx/2] is inside a slit.
  FullyCovered,
  /// Site counts when its position is inside a slit (closed interval).
  SiteCenter,
};

/// Normalized line distribution. For y > 0: |psi|^2 at every site. For y == 0:
/// uniform over the aperture sites. Throws if no site carries probability.
lattice::ProbabilityDistribution line_distribution(
    const lattice::GridPtr& grid, double y, const SlitGeometry& geom, double wavelength,
    ApertureAlignment alignment = ApertureAlignment::FullyCovered);

/// sum_i |psi(x_i, y)|^2 dx, the unnormalized flux through a line.
double line_flux(const lattice::Grid1D& grid, double y, const SlitGeometry& geom,
                 double wavelength);

}  // namespace pilotwave::wavefield
