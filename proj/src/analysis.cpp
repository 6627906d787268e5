#include "pilotwave/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pilotwave::analysis {

namespace {

void check_inputs(const StochasticMatrix& m, const ProbabilityDistribution& p,
                  const CostMatrix& cost) {
  if (!m.source().comparable(p) ||
      !std::equal(p.weights().begin(), p.weights().end(), m.source().weights().begin())) {
    throw std::invalid_argument("distribution is not the matrix's source");
  }
  if (cost.rows() != m.n_sources() || cost.cols() != m.n_targets()) {
    throw std::invalid_argument("cost dimensions do not match the matrix");
  }
}

// Tests the two action inequalities; appends on success.
bool consider(const CostMatrix& cost, std::size_t step,
              std::uint32_t a, std::uint32_t b, std::uint32_t a_prime, std::uint32_t b_prime,
              double total_a_bprime, double total_b_aprime, std::vector<CrossingPair>& out) {
  const double s_aa = cost(a, a_prime);
  const double s_ab = cost(a, b_prime);
  if (!(s_aa < s_ab)) return false;
  const double s_bb = cost(b, b_prime);
  const double s_ba = cost(b, a_prime);
  if (!(s_bb < s_ba)) return false;
  out.push_back(CrossingPair{step, a, b, a_prime, b_prime, s_aa, s_ab, s_bb, s_ba,
                             total_a_bprime, total_b_aprime});
  return true;
}

}  // namespace

std::vector<CrossingPair> find_crossing_pairs_dense(const StochasticMatrix& matrix,
                                                    const ProbabilityDistribution& p_from,
                                                    const CostMatrix& cost, std::size_t step,
                                                    std::size_t limit) {
  check_inputs(matrix, p_from, cost);
  std::vector<CrossingPair> out;
  const std::size_t n = matrix.n_sources();
  for (std::size_t a = 0; a < n; ++a) {
    const auto row_a = matrix.row(a);
    if (row_a.empty()) continue;
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto row_b = matrix.row(b);
      for (const auto& eb : row_b) {  // b -> a'
        const double t_b = eb.probability * p_from[b];
        if (!(t_b > kZeroTotal)) continue;
        for (const auto& ea : row_a) {  // a -> b'
          if (ea.target == eb.target) continue;
          const double t_a = ea.probability * p_from[a];
          if (!(t_a > kZeroTotal)) continue;
          consider(cost, step, static_cast<std::uint32_t>(a),
                   static_cast<std::uint32_t>(b), eb.target, ea.target, t_a, t_b, out);
          if (out.size() >= limit) return out;
        }
      }
    }
  }
  return out;
}

std::vector<CrossingPair> find_crossing_pairs(const StochasticMatrix& matrix,
                                              const ProbabilityDistribution& p_from,
                                              const CostMatrix& cost, std::size_t step,
                                              std::size_t limit) {
  if (!cost.strictly_convex_in_displacement()) {
    return find_crossing_pairs_dense(matrix, p_from, cost, step, limit);
  }
  check_inputs(matrix, p_from, cost);
  std::vector<CrossingPair> out;
  const std::size_t n = matrix.n_sources();

  // Only a -> b', b -> a' with a < b and a' < b' can satisfy both
  // inequalities when the cost is strictly convex in x' - x.
  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> row_min(n, kNone);
  std::vector<std::int64_t> row_max(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& e : matrix.row(i)) {
      if (!(e.probability * p_from[i] > kZeroTotal)) continue;
      row_min[i] = std::min(row_min[i], e.target);
      row_max[i] = std::max<std::int64_t>(row_max[i], e.target);
    }
  }
  std::vector<std::uint32_t> suffix_min(n + 1, kNone);
  for (std::size_t i = n; i-- > 0;) suffix_min[i] = std::min(suffix_min[i + 1], row_min[i]);

  for (std::size_t a = 0; a + 1 < n; ++a) {
    if (row_max[a] < 0) continue;
    if (static_cast<std::int64_t>(suffix_min[a + 1]) >= row_max[a]) continue;
    const auto row_a = matrix.row(a);
    for (std::size_t b = a + 1; b < n; ++b) {
      if (row_min[b] == kNone || static_cast<std::int64_t>(row_min[b]) >= row_max[a]) continue;
      for (const auto& eb : matrix.row(b)) {  // b -> a'
        if (static_cast<std::int64_t>(eb.target) >= row_max[a]) break;
        const double t_b = eb.probability * p_from[b];
        if (!(t_b > kZeroTotal)) continue;
        auto first = std::upper_bound(
            row_a.begin(), row_a.end(), eb.target,
            [](std::uint32_t key, const StochasticMatrix::Entry& e) { return key < e.target; });
        for (auto it = first; it != row_a.end(); ++it) {  // a -> b'
          const double t_a = it->probability * p_from[a];
          if (!(t_a > kZeroTotal)) continue;
          consider(cost, step, static_cast<std::uint32_t>(a),
                   static_cast<std::uint32_t>(b), eb.target, it->target, t_a, t_b, out);
          if (out.size() >= limit) return out;
        }
      }
    }
  }
  return out;
}

StochasticMatrix uncross(const StochasticMatrix& matrix, const CrossingPair& pair) {
  const std::size_t n = matrix.n_sources();
  const std::size_t m = matrix.n_targets();
  if (pair.a >= n || pair.b >= n || pair.a == pair.b || pair.a_prime >= m ||
      pair.b_prime >= m || pair.a_prime == pair.b_prime) {
    throw std::invalid_argument("crossing pair does not fit the matrix");
  }
  const auto& src = matrix.source();
  const double p_a = src[pair.a];
  const double p_b = src[pair.b];
  const double t_ab = matrix.probability(pair.a, pair.b_prime) * p_a;
  const double t_ba = matrix.probability(pair.b, pair.a_prime) * p_b;
  if (t_ab != pair.total_a_bprime || t_ba != pair.total_b_aprime || !(t_ab > kZeroTotal) ||
      !(t_ba > kZeroTotal)) {
    throw std::invalid_argument("stale crossing pair: transition probabilities have changed");
  }
  const double c = std::min(t_ab, t_ba);

  auto edit_row = [&](std::uint32_t source, std::uint32_t gain, std::uint32_t lose, double p,
                      bool lose_vanishes) {
    std::vector<StochasticMatrix::Entry> row(matrix.row(source).begin(),
                                             matrix.row(source).end());
    auto find = [&](std::uint32_t k) {
      return std::lower_bound(row.begin(), row.end(), k,
                              [](const StochasticMatrix::Entry& e, std::uint32_t key) {
                                return e.target < key;
                              });
    };
    auto g = find(gain);
    if (g == row.end() || g->target != gain) g = row.insert(g, {gain, 0.0});
    g->probability = std::min(1.0, g->probability + c / p);
    auto l = find(lose);
    l->probability = lose_vanishes ? 0.0 : std::max(0.0, l->probability - c / p);
    if (l->probability == 0.0) row.erase(l);
    return row;
  };
  const auto new_a = edit_row(pair.a, pair.a_prime, pair.b_prime, p_a, c == t_ab);
  const auto new_b = edit_row(pair.b, pair.b_prime, pair.a_prime, p_b, c == t_ba);

  std::vector<std::size_t> offsets{0};
  std::vector<StochasticMatrix::Entry> entries;
  entries.reserve(matrix.nonzeros() + 2);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == pair.a) {
      entries.insert(entries.end(), new_a.begin(), new_a.end());
    } else if (i == pair.b) {
      entries.insert(entries.end(), new_b.begin(), new_b.end());
    } else {
      const auto r = matrix.row(i);
      entries.insert(entries.end(), r.begin(), r.end());
    }
    offsets.push_back(entries.size());
  }
  return StochasticMatrix(src, matrix.target_grid_ptr(), std::move(offsets), std::move(entries));
}

double uncross_action_change(const CrossingPair& pair) {
  const double c = std::min(pair.total_a_bprime, pair.total_b_aprime);
  return c * (pair.s_a_aprime - pair.s_a_bprime + pair.s_b_bprime - pair.s_b_aprime);
}

Band classify_band(double relative) noexcept {
  if (relative >= 1e-1) return Band::Blue;
  if (relative >= 1e-2) return Band::SeaGreen;
  if (relative >= 1e-3) return Band::Olive;
  if (relative >= 1e-6) return Band::Gray;
  return Band::BelowRange;
}

std::string_view band_name(Band band) noexcept {
  switch (band) {
    case Band::Gray: return "gray";
    case Band::Olive: return "olive";
    case Band::SeaGreen: return "seagreen";
    case Band::Blue: return "blue";
    case Band::BelowRange: break;
  }
  return "below";
}

double max_total_probability(const markov::MarkovChain& chain) {
  double best = 0.0;
  for (std::size_t j = 0; j < chain.n_steps(); ++j) {
    const auto& m = chain.step(j);
    const auto& p = chain.line(j);
    for (std::size_t i = 0; i < m.n_sources(); ++i) {
      for (const auto& e : m.row(i)) best = std::max(best, e.probability * p[i]);
    }
  }
  return best;
}

TransitionNet transition_net(const markov::MarkovChain& chain, double relative_threshold) {
  if (!(relative_threshold > 0.0 && relative_threshold < 1.0)) {
    throw std::invalid_argument("net threshold must lie in (0, 1)");
  }
  TransitionNet net;
  net.relative_threshold = relative_threshold;
  net.p_max = max_total_probability(chain);
  const double cut = std::max(relative_threshold * net.p_max, kZeroTotal);
  for (std::size_t j = 0; j < chain.n_steps(); ++j) {
    const auto& m = chain.step(j);
    const auto& p = chain.line(j);
    for (std::size_t i = 0; i < m.n_sources(); ++i) {
      for (const auto& e : m.row(i)) {
        const double t = e.probability * p[i];
        if (t < cut || !(t > kZeroTotal)) continue;
        net.edges.push_back(NetEdge{static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(i),
                                    e.target, t, classify_band(t / net.p_max)});
      }
    }
  }
  return net;
}

std::vector<std::vector<std::uint32_t>> backward_reachable(const markov::MarkovChain& chain,
                                                           std::uint32_t final_site) {
  const auto& last = chain.line(chain.n_lines() - 1);
  if (final_site >= last.size()) throw std::invalid_argument("final site out of range");
  if (!(last[final_site] > 0.0)) {
    throw std::invalid_argument("final site " + std::to_string(final_site) +
                                " has zero probability on the last line");
  }
  std::vector<std::vector<std::uint32_t>> region(chain.n_lines());
  std::vector<char> marked(last.size(), 0);
  marked[final_site] = 1;
  region.back().push_back(final_site);
  for (std::size_t j = chain.n_steps(); j-- > 0;) {
    const auto& m = chain.step(j);
    const auto& p = chain.line(j);
    std::vector<char> here(m.n_sources(), 0);
    for (std::size_t i = 0; i < m.n_sources(); ++i) {
      for (const auto& e : m.row(i)) {
        if (marked[e.target] && e.probability * p[i] > kZeroTotal) {
          here[i] = 1;
          region[j].push_back(static_cast<std::uint32_t>(i));
          break;
        }
      }
    }
    marked = std::move(here);
  }
  return region;
}

std::vector<std::uint64_t> screen_histogram(const markov::TrajectoryEnsemble& ensemble,
                                            std::size_t line, const lattice::Grid1D& grid) {
  if (line >= ensemble.n_lines()) throw std::invalid_argument("histogram line out of range");
  std::vector<std::uint64_t> counts(grid.size(), 0);
  for (std::size_t p = 0; p < ensemble.size(); ++p) {
    const std::uint32_t s = ensemble.site(p, line);
    if (s >= counts.size()) throw std::invalid_argument("ensemble site outside the grid");
    ++counts[s];
  }
  return counts;
}

double tv_distance(std::span<const std::uint64_t> counts, const ProbabilityDistribution& p) {
  if (counts.size() != p.size()) throw std::invalid_argument("histogram and distribution sizes differ");
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  if (n == 0) throw std::invalid_argument("empty histogram");
  const double inv = 1.0 / static_cast<double>(n);
  lattice::CompensatedSum s;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    s.add(std::abs(static_cast<double>(counts[i]) * inv - p[i]));
  }
  return 0.5 * s.value();
}

double tv_distance(const ProbabilityDistribution& p, const ProbabilityDistribution& q) {
  if (!p.comparable(q)) throw std::invalid_argument("distributions live on different grids");
  lattice::CompensatedSum s;
  for (std::size_t i = 0; i < p.size(); ++i) s.add(std::abs(p[i] - q[i]));
  return 0.5 * s.value();
}

double global_jump_action(const ProbabilityDistribution& p_from,
                          const ProbabilityDistribution& p_to, const CostMatrix& cost) {
  if (cost.rows() != p_from.size() || cost.cols() != p_to.size()) {
    throw std::invalid_argument("cost dimensions do not match the distributions");
  }
  lattice::CompensatedSum outer;
  for (std::size_t i = 0; i < p_from.size(); ++i) {
    if (p_from[i] == 0.0) continue;
    lattice::CompensatedSum inner;
    for (std::size_t k = 0; k < p_to.size(); ++k) {
      if (p_to[k] != 0.0) inner.add(p_to[k] * cost(i, k));
    }
    outer.add(p_from[i] * inner.value());
  }
  return outer.value();
}

}  // namespace pilotwave::analysis
