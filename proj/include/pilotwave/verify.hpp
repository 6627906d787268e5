#pragma once

// Invariant suites over computed chains plus small-instance certification
// against the exact solver. Suites take spans of lines and steps rather than
// a MarkovChain so that deliberately corrupted matrices can be checked.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pilotwave/lattice.hpp"
#include "pilotwave/transport.hpp"

namespace pilotwave::verify {

using lattice::ProbabilityDistribution;
using transport::StochasticMatrix;

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Worst measured deviation (meaning depends on the check).
  double residual = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct Report {
  std::vector<CheckResult> checks;
  bool passed() const noexcept;
};

/// Cost used by the crossing check on chain steps.
struct CostSpec {
  transport::CostKind kind = transport::CostKind::Quadratic;
  double mass = 0.0;  // relativistic only
  double tau = 0.0;   // relativistic only
  transport::CostMatrix make(const lattice::GridPtr& source, const lattice::GridPtr& target) const;
};

/// Row sums of nonzero-probability sources and the pushforward onto the next
/// line, both recomputed here with compensated sums. Residual = worst
/// absolute deviation.
CheckResult check_marginals(std::span<const ProbabilityDistribution> lines,
                            std::span<const StochasticMatrix> steps, double tolerance = 1e-12);

/// No crossing pairs on any step. Residual = number of pairs found.
CheckResult check_non_crossing(std::span<const ProbabilityDistribution> lines,
                               std::span<const StochasticMatrix> steps, const CostSpec& cost);

/// P(q -> q') P(q' -> q) == 0 for q != q' on steps whose two lines share a
/// grid. Residual = largest product.
CheckResult check_bell(std::span<const StochasticMatrix> steps);

/// nonzeros <= |supp p_j| + |supp p_{j+1}| - 1. Residual = worst excess.
CheckResult check_sparsity(std::span<const ProbabilityDistribution> lines,
                           std::span<const StochasticMatrix> steps);

/// W_2^2 from the quantile route equals the total mean square displacement
/// of each step. Residual = worst |difference| / (grid extent)^2, i.e. the
/// absolute difference on a grid rescaled to unit length.
CheckResult check_wasserstein(std::span<const ProbabilityDistribution> lines,
                              std::span<const StochasticMatrix> steps, double tolerance = 1e-12);

/// The global-jump baseline never has smaller average action, and has a
/// strictly larger one on at least `strict_fraction` of the steps. Residual =
/// fraction of strict steps.
CheckResult check_baseline(std::span<const ProbabilityDistribution> lines,
                           std::span<const StochasticMatrix> steps,
                           double strict_fraction = 0.95);

/// Random pairs with 1..max_sites sites each (zeros included) on random
/// uniform grids: average action of the minimal matrix versus the exact
/// optimum with quadratic cost. Residual = worst absolute difference.
CheckResult oracle_suite(std::size_t instances, std::uint64_t seed, std::size_t max_sites = 6,
                         double tolerance = 1e-9);

/// Random pairs with up to max_sites sites: no crossing pairs (quadratic
/// cost) and, on shared grids, the Bell condition. Residual = violations.
CheckResult random_structure_suite(std::size_t instances, std::uint64_t seed,
                                   std::size_t max_sites = 40);

struct Options {
  CostSpec cost;
  std::size_t oracle_instances = 500;
  std::size_t random_instances = 1000;
  std::uint64_t seed = 1;
};

/// Every suite above, in a fixed order. A suite that throws is reported as
/// failed with the exception text.
Report verify_chain(std::span<const ProbabilityDistribution> lines,
                    std::span<const StochasticMatrix> steps, const Options& options);

/// Copy of `matrix` with the `entry`-th stored entry of row `source` moved by
/// `delta` (towards the interior of [0, 1] if the shift would leave it).
/// Throws std::out_of_range for a missing row or entry.
StochasticMatrix perturb_entry(const StochasticMatrix& matrix, std::size_t source,
                               std::size_t entry, double delta);

/// Row with the largest source probability; a convenient fault target.
std::size_t heaviest_row(const StochasticMatrix& matrix);

}  // namespace pilotwave::verify
