#include "pilotwave/wavefield.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pilotwave::wavefield {

SlitGeometry::SlitGeometry(double width, double separation)
    : width_(width), separation_(separation) {
  if (!(width > 0.0) || !std::isfinite(width)) {
    throw std::invalid_argument("slit width must be positive");
  }
  if (!std::isfinite(separation) || separation < 0.0) {
    throw std::invalid_argument("slit separation must be >= 0");
  }
  if (separation != 0.0 && separation < width) {
    throw std::invalid_argument("slits overlap: separation must be 0 or >= width");
  }
}

bool SlitGeometry::inside(double x) const noexcept {
  const double half = 0.5 * width_;
  if (single()) return std::abs(x) <= half;
  const double c = 0.5 * separation_;
  return std::abs(std::abs(x) - c) <= half;
}

bool SlitGeometry::covers(double lo, double hi) const noexcept {
  const double half = 0.5 * width_;
  auto in_slit = [&](double center) { return lo >= center - half && hi <= center + half; };
  if (single()) return in_slit(0.0);
  const double c = 0.5 * separation_;
  return in_slit(-c) || in_slit(c);
}

ComplexAmplitude single_slit_amplitude(double x, double y, double width, double wavelength) {
  if (!(y > 0.0)) {
    throw std::invalid_argument("amplitude requires y > 0 (propagator is singular at the diaphragm)");
  }
  if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be positive");
  const double k = std::sqrt(2.0 / (wavelength * y));
  const double half = 0.5 * width;
  const FresnelPair f1 = fresnel(k * (x + half));
  const FresnelPair f2 = fresnel(k * (x - half));
  return {f2.c - f1.c, f2.s - f1.s};
}

ComplexAmplitude single_slit_amplitude(double x, double y, const SlitGeometry& geom,
                                       double wavelength) {
  return single_slit_amplitude(x, y, geom.width(), wavelength);
}

ComplexAmplitude double_slit_amplitude(double x, double y, const SlitGeometry& geom,
                                       double wavelength) {
  const double c = 0.5 * geom.separation();
  return single_slit_amplitude(x - c, y, geom.width(), wavelength) +
         single_slit_amplitude(x + c, y, geom.width(), wavelength);
}

ComplexAmplitude amplitude(double x, double y, const SlitGeometry& geom, double wavelength) {
  return geom.single() ? single_slit_amplitude(x, y, geom, wavelength)
                       : double_slit_amplitude(x, y, geom, wavelength);
}

lattice::ProbabilityDistribution line_distribution(const lattice::GridPtr& grid, double y,
                                                   const SlitGeometry& geom, double wavelength,
                                                   ApertureAlignment alignment) {
  if (!grid) throw std::invalid_argument("line_distribution needs a grid");
  if (!(y >= 0.0)) throw std::invalid_argument("line position y must be >= 0");
  const std::size_t n = grid->size();
  std::vector<double> w(n, 0.0);
  if (y == 0.0) {
    const double half_cell = 0.5 * grid->spacing();
    for (std::size_t i = 0; i < n; ++i) {
      const double x = grid->position(i);
      const bool hit = alignment == ApertureAlignment::FullyCovered
                           ? geom.covers(x - half_cell, x + half_cell)
                           : geom.inside(x);
      w[i] = hit ? 1.0 : 0.0;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = std::norm(amplitude(grid->position(i), y, geom, wavelength));
    }
  }
  return lattice::normalize(w, grid);
}

double line_flux(const lattice::Grid1D& grid, double y, const SlitGeometry& geom,
                 double wavelength) {
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    w[i] = std::norm(amplitude(grid.position(i), y, geom, wavelength));
  }
  return lattice::compensated_sum(w) * grid.spacing();
}

}  // namespace pilotwave::wavefield
