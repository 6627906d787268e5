#pragma once

// Line-to-line transport: action cost matrices, the sparse row-stochastic
// matrix that minimizes the ensemble-averaged action, and the associated
// metrics (average action, mean square displacement, Wasserstein distance).
// An exact small-instance solver over the transport polytope lives here too
// and is used to certify the fast path.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pilotwave/lattice.hpp"

namespace pilotwave::transport {

using lattice::GridPtr;
using lattice::ProbabilityDistribution;

enum class CostKind {
  /// (x'_k - x_i)^2, the non-relativistic action with constants dropped.
  Quadratic,
  /// Free relativistic action minus its rest-energy constant:
  /// m c^2 tau (1 - sqrt(1 - beta^2)), beta = (x'_k - x_i)/(c tau).
  /// +inf for |beta| >= 1.
  Relativistic,
  /// Arbitrary explicit n_from x n_to table.
  Table,
};

/// Action (or rescaled action) of a single jump x_i -> x'_k. Entries are
/// evaluated on demand so large grids never materialize a dense table.
class CostMatrix {
 public:
  static CostMatrix quadratic(GridPtr source, GridPtr target);
  static CostMatrix relativistic(GridPtr source, GridPtr target, double mass, double tau);
  /// Row-major table, rows = source sites.
  static CostMatrix table(GridPtr source, GridPtr target, std::vector<double> row_major);

  double operator()(std::size_t i, std::size_t k) const;

  std::size_t rows() const noexcept { return source_->size(); }
  std::size_t cols() const noexcept { return target_->size(); }
  CostKind kind() const noexcept { return kind_; }
  const lattice::Grid1D& source() const noexcept { return *source_; }
  const lattice::Grid1D& target() const noexcept { return *target_; }
  const GridPtr& source_ptr() const noexcept { return source_; }
  const GridPtr& target_ptr() const noexcept { return target_; }

  /// True for costs f(x' - x) with f strictly convex; for those the optimal
  /// coupling between 1D marginals is the monotone one.
  bool strictly_convex_in_displacement() const noexcept { return kind_ != CostKind::Table; }

  /// Dense row-major copy (small instances only).
  std::vector<double> dense() const;

 private:
  CostMatrix(CostKind kind, GridPtr source, GridPtr target)
      : kind_(kind), source_(std::move(source)), target_(std::move(target)) {}

  CostKind kind_;
  GridPtr source_;
  GridPtr target_;
  double rest_action_ = 0.0;  // m c^2 tau
  double light_step_ = 0.0;   // c tau
  std::vector<double> table_;
};

/// Mass moved from source site `source` to target site `target`.
struct Transfer {
  std::uint32_t source;
  std::uint32_t target;
  double mass;
};

/// Sparse row-stochastic matrix P(q -> q') between the sites of two lines,
/// kept together with the source distribution it was built against.
/// Rows of zero-probability sources may be empty.
class StochasticMatrix {
 public:
  struct Entry {
    std::uint32_t target;
    double probability;
  };

  /// CSR layout; targets must be strictly ascending within a row and every
  /// probability must lie in [0, 1]. Throws std::invalid_argument otherwise.
  StochasticMatrix(ProbabilityDistribution source, GridPtr target_grid,
                   std::vector<std::size_t> row_offsets, std::vector<Entry> entries);

  /// Builds P = J / P_t(q) from joint masses; transfers must be sorted by
  /// (source, target) and must not touch zero-probability sources.
  static StochasticMatrix from_transfers(ProbabilityDistribution source, GridPtr target_grid,
                                         std::span<const Transfer> transfers);

  std::size_t n_sources() const noexcept { return source_.size(); }
  std::size_t n_targets() const noexcept { return target_grid_->size(); }
  std::size_t nonzeros() const noexcept { return entries_.size(); }

  std::span<const Entry> row(std::size_t i) const noexcept {
    return {entries_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  /// P(i -> k); zero when the entry is not stored.
  double probability(std::size_t i, std::size_t k) const noexcept;
  /// Joint probability P(i -> k) * P_t(i).
  double total(std::size_t i, std::size_t k) const noexcept {
    return probability(i, k) * source_[i];
  }

  const ProbabilityDistribution& source() const noexcept { return source_; }
  const lattice::Grid1D& target_grid() const noexcept { return *target_grid_; }
  const GridPtr& target_grid_ptr() const noexcept { return target_grid_; }

  /// sum_q P(q -> q') P_t(q) for every target site.
  std::vector<double> pushforward() const;
  /// All joint masses in (source, target) order.
  std::vector<Transfer> transfers() const;
  /// Largest |row sum - 1| over rows with nonzero source probability.
  double max_row_residual() const;

 private:
  ProbabilityDistribution source_;
  GridPtr target_grid_;
  std::vector<std::size_t> offsets_;
  std::vector<Entry> entries_;
};

/// Upper bound on the total mass the final top-up may absorb.
inline constexpr double kMassBalanceTolerance = 1e-12;

/// The monotone (non-crossing) coupling of two weight vectors, produced by
/// the ascending double sweep: for each source x, for each target x', move
/// min(A(x), B(x')) while both are positive. Rounding left over after the
/// sweep (<= 1e-12 in total) is folded into each row's last transfer so that
/// rows sum to their source mass.
///
/// Throws std::invalid_argument for negative or non-normalized inputs and
/// InvariantViolation if the leftover exceeds kMassBalanceTolerance.
std::vector<Transfer> monotone_coupling(std::span<const double> from, std::span<const double> to);

/// Minimal stochastic matrix between consecutive lines (monotone coupling
/// turned into transition probabilities).
StochasticMatrix minimal_stochastic_matrix(const ProbabilityDistribution& p_from,
                                           const ProbabilityDistribution& p_to);

/// Baseline where every row equals p_to: probability is conserved only
/// globally. Rows of zero-probability sources are filled too.
StochasticMatrix global_jump_matrix(const ProbabilityDistribution& p_from,
                                    const ProbabilityDistribution& p_to);

/// sum_{q,q'} P(q -> q') P_t(q) S(q', q). Zero-mass entries never touch the
/// cost, so +inf costs on unused cells are harmless.
double average_action(const StochasticMatrix& matrix, const CostMatrix& cost);
/// Same, checking that `p_from` is the distribution the matrix was built on.
double average_action(const StochasticMatrix& matrix, const ProbabilityDistribution& p_from,
                      const CostMatrix& cost);

struct TransportReport {
  /// Double-sum route with quadratic cost.
  double average_action = 0.0;
  /// sum_q P_t(q) msd(q).
  double total_msd = 0.0;
  /// Per-source mean square displacement.
  std::vector<double> site_msd;
  /// Per-source (q - <q'>)^2 + Var(q' | q).
  std::vector<double> site_decomposition;
  std::size_t nonzeros = 0;
};

/// Mean square displacement per source site and in total. Checks the
/// bias + variance decomposition of every site to 1e-12 relative and throws
/// InvariantViolation if it fails.
TransportReport msd_report(const StochasticMatrix& matrix, const ProbabilityDistribution& p_from,
                           const lattice::Grid1D& source_grid,
                           const lattice::Grid1D& target_grid);

/// W_p between two 1D distributions, d = |x' - x|, from the quantile
/// functions: W_p^p = int_0^1 |F^-1(t) - G^-1(t)|^p dt. Exact for p >= 1.
double wasserstein(const ProbabilityDistribution& p_from, const ProbabilityDistribution& p_to,
                   double order);

// ---------------------------------------------------------------------------
// Exact solver for small instances.

struct OptimalCoupling {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> joint;  // row-major, rows = sources
  double cost = 0.0;
  std::size_t vertices_visited = 0;
};

/// Largest n_from * n_to the exact solver accepts.
inline constexpr std::size_t kOracleMaxCells = 64;

/// Exact minimum of sum gamma(i,k) c(i,k) over couplings with the given
/// marginals. Uses exhaustive enumeration of the transport polytope's
/// vertices when the spanning-tree count is small, otherwise a Bland-rule
/// simplex over basic feasible solutions. Cells with +inf cost are excluded.
/// Throws std::invalid_argument when n_from * n_to > kOracleMaxCells.
OptimalCoupling brute_force_optimal(std::span<const double> from, std::span<const double> to,
                                    std::span<const double> cost_row_major);
OptimalCoupling brute_force_optimal(const ProbabilityDistribution& p_from,
                                    const ProbabilityDistribution& p_to, const CostMatrix& cost);

/// Vertex enumeration only. Throws if the vertex count exceeds `max_trees`.
OptimalCoupling enumerate_vertices_optimum(std::span<const double> from,
                                           std::span<const double> to,
                                           std::span<const double> cost_row_major,
                                           std::size_t max_trees = 500000);
/// Simplex only.
OptimalCoupling simplex_optimum(std::span<const double> from, std::span<const double> to,
                                std::span<const double> cost_row_major);

}  // namespace pilotwave::transport
