#pragma once

// Structural checks on computed chains (crossing transitions, the transition
// net, backward-reachable regions) and ensemble statistics.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "pilotwave/markov.hpp"
#include "pilotwave/transport.hpp"

namespace pilotwave::analysis {

using lattice::ProbabilityDistribution;
using transport::CostMatrix;
using transport::StochasticMatrix;

/// Total transition probabilities at or below this count as zero.
inline constexpr double kZeroTotal = 1e-15;

/// Sources a < b whose transitions a -> b' and b -> a' are both used although
/// a prefers a' and b prefers b':
///   S(a', a) < S(b', a)  and  S(b', b) < S(a', b).
struct CrossingPair {
  std::size_t step = 0;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  std::uint32_t a_prime = 0;
  std::uint32_t b_prime = 0;
  double s_a_aprime = 0.0;  // S(a', a)
  double s_a_bprime = 0.0;  // S(b', a)
  double s_b_bprime = 0.0;  // S(b', b)
  double s_b_aprime = 0.0;  // S(a', b)
  double total_a_bprime = 0.0;  // P(a -> b') P(a)
  double total_b_aprime = 0.0;  // P(b -> a') P(b)
};

/// All crossing pairs, sorted by (a, b, a', b'). For costs that are strictly
/// convex in the displacement only geometrically crossed transitions can
/// qualify, so a sweep over those is used; other costs get the dense scan.
/// Stops after `limit` pairs. Throws std::invalid_argument when p_from is not
/// the matrix's source or the cost dimensions differ.
std::vector<CrossingPair> find_crossing_pairs(
    const StochasticMatrix& matrix, const ProbabilityDistribution& p_from, const CostMatrix& cost,
    std::size_t step = 0, std::size_t limit = std::numeric_limits<std::size_t>::max());

/// Every pair of stored transitions from distinct sources is tested.
std::vector<CrossingPair> find_crossing_pairs_dense(
    const StochasticMatrix& matrix, const ProbabilityDistribution& p_from, const CostMatrix& cost,
    std::size_t step = 0, std::size_t limit = std::numeric_limits<std::size_t>::max());

/// Moves C = min(P(a -> b') P(a), P(b -> a') P(b)) of total probability onto
/// a -> a' and b -> b'. Marginals are unchanged; the transition carrying the
/// smaller mass disappears. Throws std::invalid_argument if the pair no
/// longer matches the matrix.
StochasticMatrix uncross(const StochasticMatrix& matrix, const CrossingPair& pair);

/// C (S(a', a) - S(b', a) + S(b', b) - S(a', b)); negative for a valid pair.
double uncross_action_change(const CrossingPair& pair);

/// Decade bands of total probability relative to the largest one in a net.
enum class Band { BelowRange, Gray, Olive, SeaGreen, Blue };

/// [1e-6, 1e-3) Gray, [1e-3, 1e-2) Olive, [1e-2, 1e-1) SeaGreen,
/// [1e-1, 1] Blue; anything smaller is BelowRange.
Band classify_band(double relative) noexcept;
std::string_view band_name(Band band) noexcept;

struct NetEdge {
  std::uint32_t step;
  std::uint32_t source;
  std::uint32_t target;
  double total;
  Band band;
};

struct TransitionNet {
  std::vector<NetEdge> edges;  // by step, then source, then target
  double p_max = 0.0;
  double relative_threshold = 0.0;
};

/// Edges with total probability >= threshold * P_max (and > kZeroTotal).
/// Throws std::invalid_argument unless 0 < threshold < 1.
TransitionNet transition_net(const markov::MarkovChain& chain, double relative_threshold);

/// Largest total transition probability over all steps.
double max_total_probability(const markov::MarkovChain& chain);

/// Sites on every line that reach `final_site` on the last line through
/// transitions with total probability > kZeroTotal. Throws
/// std::invalid_argument when the final site carries no probability.
std::vector<std::vector<std::uint32_t>> backward_reachable(const markov::MarkovChain& chain,
                                                           std::uint32_t final_site);

/// Count of ensemble members at each site of the given line.
std::vector<std::uint64_t> screen_histogram(const markov::TrajectoryEnsemble& ensemble,
                                            std::size_t line, const lattice::Grid1D& grid);

/// (1/2) sum |count/N - p|. Throws on size mismatch or an empty histogram.
double tv_distance(std::span<const std::uint64_t> counts, const ProbabilityDistribution& p);
/// (1/2) sum |p - q| for distributions on identical grids.
double tv_distance(const ProbabilityDistribution& p, const ProbabilityDistribution& q);

/// Average action of the every-row-equals-p_to baseline, summed directly.
double global_jump_action(const ProbabilityDistribution& p_from,
                          const ProbabilityDistribution& p_to, const CostMatrix& cost);

}  // namespace pilotwave::analysis
