#pragma once

// Markov chains over successive lattice lines and the particle ensembles
// sampled from them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pilotwave/lattice.hpp"
#include "pilotwave/transport.hpp"
#include "pilotwave/wavefield.hpp"

namespace pilotwave::markov {

using lattice::ProbabilityDistribution;
using transport::StochasticMatrix;

/// Lines y_j = dy * j, j = 0..n_steps, their distributions, and one minimal
/// stochastic matrix per step. Immutable once built.
class MarkovChain {
 public:
  /// Checks that step j was built on line j and pushes it forward onto line
  /// j + 1 within 1e-12 per site, and that every row sums to one within 1e-12.
  /// Throws std::invalid_argument otherwise.
  MarkovChain(std::vector<ProbabilityDistribution> lines, std::vector<StochasticMatrix> steps,
              double dy, std::optional<lattice::TimeParameters> time = std::nullopt);

  /// Builds the minimal matrix between every pair of consecutive lines.
  static MarkovChain from_lines(std::vector<ProbabilityDistribution> lines, double dy,
                                std::optional<lattice::TimeParameters> time = std::nullopt,
                                unsigned threads = 0);

  std::size_t n_lines() const noexcept { return lines_.size(); }
  std::size_t n_steps() const noexcept { return steps_.size(); }
  const ProbabilityDistribution& line(std::size_t j) const { return lines_.at(j); }
  const StochasticMatrix& step(std::size_t j) const { return steps_.at(j); }
  std::span<const ProbabilityDistribution> lines() const noexcept { return lines_; }
  std::span<const StochasticMatrix> steps() const noexcept { return steps_; }
  double dy() const noexcept { return dy_; }
  double y(std::size_t j) const noexcept { return dy_ * static_cast<double>(j); }
  const std::optional<lattice::TimeParameters>& time() const noexcept { return time_; }

  /// Largest |pushforward - next line| over all steps and sites.
  double max_pushforward_residual() const noexcept { return push_residual_; }
  /// Largest |row sum - 1| over all steps.
  double max_row_residual() const noexcept { return row_residual_; }

  /// Cumulative weights of line 0 (last entry is the total).
  std::span<const double> initial_cdf() const noexcept { return initial_cdf_; }

 private:
  std::vector<ProbabilityDistribution> lines_;
  std::vector<StochasticMatrix> steps_;
  double dy_;
  std::optional<lattice::TimeParameters> time_;
  double push_residual_ = 0.0;
  double row_residual_ = 0.0;
  std::vector<double> initial_cdf_;
};

/// Chain for the slit experiment: line 0 is uniform over the apertures, lines
/// 1..n_steps are |psi|^2 at y_j = dy * j with dy = time.dy(), and each step
/// is the minimal stochastic matrix. Lines and steps are computed on up to
/// `threads` workers (0 = hardware concurrency).
MarkovChain build_chain(const lattice::GridPtr& grid, const wavefield::SlitGeometry& geom,
                        const lattice::TimeParameters& time, std::size_t n_steps,
                        wavefield::ApertureAlignment alignment =
                            wavefield::ApertureAlignment::FullyCovered,
                        unsigned threads = 0);

/// Counter-based generator: the value for (seed, stream, counter) is a pure
/// function of the three, so draws do not depend on evaluation order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;
  std::uint64_t bits(std::uint64_t counter) const noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform(std::uint64_t counter) const noexcept;

 private:
  std::uint64_t key_;
};

/// Site index on every line, i_0 .. i_{n_steps}.
struct Trajectory {
  std::vector<std::uint32_t> sites;
};

/// Draws i_0 from line 0 and each next site from the current row, both by
/// inverse CDF with counter j as the draw for line j. The last bucket absorbs
/// any rounding residual. Throws InvariantViolation on an empty row.
Trajectory sample_trajectory(const MarkovChain& chain, const CounterRng& rng);

/// P_0(i_0) * prod_j P_j(i_j -> i_{j+1}); zero as soon as a step is absent.
/// Throws std::invalid_argument if the trajectory length or indices do not
/// fit the chain.
double path_probability(const Trajectory& trajectory, const MarkovChain& chain);

/// N trajectories stored particle-major.
class TrajectoryEnsemble {
 public:
  TrajectoryEnsemble(std::uint64_t seed, std::size_t n_particles, std::size_t n_lines,
                     std::vector<std::uint32_t> sites);

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t size() const noexcept { return n_particles_; }
  std::size_t n_lines() const noexcept { return n_lines_; }
  std::uint32_t site(std::size_t particle, std::size_t line) const noexcept {
    return sites_[particle * n_lines_ + line];
  }
  Trajectory trajectory(std::size_t particle) const;
  /// Raw storage, particle-major.
  std::span<const std::uint32_t> data() const noexcept { return sites_; }

 private:
  std::uint64_t seed_;
  std::size_t n_particles_;
  std::size_t n_lines_;
  std::vector<std::uint32_t> sites_;
};

/// Particle p uses CounterRng(seed, p); the result does not depend on the
/// thread count. Throws std::invalid_argument for n_particles == 0.
TrajectoryEnsemble run_ensemble(const MarkovChain& chain, std::size_t n_particles,
                                std::uint64_t seed, unsigned threads = 0);

}  // namespace pilotwave::markov
