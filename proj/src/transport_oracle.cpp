// Exact minimum-cost couplings for desk-scale instances. Two independent
// routes: enumerating every vertex of the transport polytope (basic feasible
// solutions are spanning trees of the bipartite source/target graph), and a
// dense Bland-rule simplex that walks between those vertices.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "pilotwave/errors.hpp"
#include "pilotwave/transport.hpp"

namespace pilotwave::transport {

namespace {

constexpr double kFeasTol = 1e-12;

struct Reduced {
  std::vector<std::size_t> rows;  // original indices with positive mass
  std::vector<std::size_t> cols;
  std::vector<double> supply;
  std::vector<double> demand;
  struct Cell {
    std::size_t r;
    std::size_t c;
    double cost;
  };
  std::vector<Cell> cells;  // finite-cost cells only
};

Reduced reduce(std::span<const double> from, std::span<const double> to,
               std::span<const double> cost) {
  if (from.empty() || to.empty()) throw std::invalid_argument("oracle: empty marginal");
  if (from.size() * to.size() > kOracleMaxCells) {
    throw std::invalid_argument("oracle: instance has " + std::to_string(from.size() * to.size()) +
                                " cells, limit is " + std::to_string(kOracleMaxCells));
  }
  if (cost.size() != from.size() * to.size()) {
    throw std::invalid_argument("oracle: cost table has wrong size");
  }
  auto check = [](std::span<const double> w) {
    double s = 0.0;
    for (double v : w) {
      if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("oracle: bad weight");
      s += v;
    }
    if (std::abs(s - 1.0) > lattice::kNormTolerance) {
      throw std::invalid_argument("oracle: marginal is not normalized");
    }
  };
  check(from);
  check(to);

  Reduced r;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i] > 0.0) {
      r.rows.push_back(i);
      r.supply.push_back(from[i]);
    }
  }
  for (std::size_t k = 0; k < to.size(); ++k) {
    if (to[k] > 0.0) {
      r.cols.push_back(k);
      r.demand.push_back(to[k]);
    }
  }
  for (std::size_t a = 0; a < r.rows.size(); ++a) {
    for (std::size_t b = 0; b < r.cols.size(); ++b) {
      const double c = cost[r.rows[a] * to.size() + r.cols[b]];
      if (std::isfinite(c)) r.cells.push_back({a, b, c});
    }
  }
  return r;
}

OptimalCoupling expand(const Reduced& r, std::size_t n_from, std::size_t n_to,
                       const std::vector<double>& flows, std::span<const double> cost,
                       std::size_t visited) {
  OptimalCoupling out;
  out.rows = n_from;
  out.cols = n_to;
  out.joint.assign(n_from * n_to, 0.0);
  out.vertices_visited = visited;
  lattice::CompensatedSum total;
  for (std::size_t e = 0; e < r.cells.size(); ++e) {
    const double f = std::max(flows[e], 0.0);
    if (f == 0.0) continue;
    const std::size_t idx = r.rows[r.cells[e].r] * n_to + r.cols[r.cells[e].c];
    out.joint[idx] = f;
    total.add(f * cost[idx]);
  }
  out.cost = total.value();
  return out;
}

double spanning_tree_count(std::size_t m, std::size_t n) {
  return std::pow(static_cast<double>(m), static_cast<double>(n - 1)) *
         std::pow(static_cast<double>(n), static_cast<double>(m - 1));
}

// Depth-first enumeration of (m + n - 1)-edge forests, i.e. spanning trees.
class VertexEnumerator {
 public:
  explicit VertexEnumerator(const Reduced& r)
      : r_(r), m_(r.rows.size()), n_(r.cols.size()), need_(m_ + n_ - 1) {
    chosen_.reserve(need_);
    parent_.resize(m_ + n_);
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    best_flows_.assign(r.cells.size(), 0.0);
  }

  void run() { recurse(0); }

  bool found() const noexcept { return best_cost_ < std::numeric_limits<double>::infinity(); }
  const std::vector<double>& best_flows() const noexcept { return best_flows_; }
  std::size_t trees() const noexcept { return trees_; }

 private:
  std::size_t find(std::vector<std::size_t>& p, std::size_t x) const {
    while (p[x] != x) x = p[x];
    return x;
  }

  void recurse(std::size_t next) {
    if (chosen_.size() == need_) {
      ++trees_;
      evaluate();
      return;
    }
    const std::size_t still_needed = need_ - chosen_.size();
    for (std::size_t e = next; e + still_needed <= r_.cells.size(); ++e) {
      const std::size_t u = r_.cells[e].r;
      const std::size_t v = m_ + r_.cells[e].c;
      std::vector<std::size_t> saved = parent_;
      const std::size_t ru = find(parent_, u);
      const std::size_t rv = find(parent_, v);
      if (ru == rv) continue;  // would close a cycle
      parent_[ru] = rv;
      chosen_.push_back(e);
      recurse(e + 1);
      chosen_.pop_back();
      parent_ = std::move(saved);
    }
  }

  // Flows on a spanning tree are forced: peel leaves.
  void evaluate() {
    const std::size_t nodes = m_ + n_;
    std::vector<double> rest(nodes);
    for (std::size_t a = 0; a < m_; ++a) rest[a] = r_.supply[a];
    for (std::size_t b = 0; b < n_; ++b) rest[m_ + b] = r_.demand[b];
    std::vector<std::size_t> degree(nodes, 0);
    for (std::size_t e : chosen_) {
      ++degree[r_.cells[e].r];
      ++degree[m_ + r_.cells[e].c];
    }
    std::vector<char> used(chosen_.size(), 0);
    std::vector<double> flow(chosen_.size(), 0.0);
    std::vector<std::size_t> stack;
    for (std::size_t v = 0; v < nodes; ++v) {
      if (degree[v] == 1) stack.push_back(v);
    }
    std::size_t assigned = 0;
    while (!stack.empty()) {
      const std::size_t leaf = stack.back();
      stack.pop_back();
      if (degree[leaf] != 1) continue;
      for (std::size_t s = 0; s < chosen_.size(); ++s) {
        if (used[s]) continue;
        const auto& cell = r_.cells[chosen_[s]];
        const std::size_t u = cell.r;
        const std::size_t v = m_ + cell.c;
        if (u != leaf && v != leaf) continue;
        const std::size_t other = (u == leaf) ? v : u;
        flow[s] = rest[leaf];
        rest[other] -= rest[leaf];
        rest[leaf] = 0.0;
        used[s] = 1;
        ++assigned;
        --degree[leaf];
        if (--degree[other] == 1) stack.push_back(other);
        break;
      }
    }
    if (assigned != chosen_.size()) return;
    double cost = 0.0;
    for (std::size_t s = 0; s < chosen_.size(); ++s) {
      if (flow[s] < -kFeasTol) return;  // infeasible basis
      cost += std::max(flow[s], 0.0) * r_.cells[chosen_[s]].cost;
    }
    if (cost < best_cost_) {
      best_cost_ = cost;
      std::fill(best_flows_.begin(), best_flows_.end(), 0.0);
      for (std::size_t s = 0; s < chosen_.size(); ++s) best_flows_[chosen_[s]] = flow[s];
    }
  }

  const Reduced& r_;
  std::size_t m_;
  std::size_t n_;
  std::size_t need_;
  std::vector<std::size_t> chosen_;
  std::vector<std::size_t> parent_;
  std::vector<double> best_flows_;
  double best_cost_ = std::numeric_limits<double>::infinity();
  std::size_t trees_ = 0;
};

// Dense tableau simplex with Bland's rule (no cycling under degeneracy).
class BlandSimplex {
 public:
  using Real = long double;

  BlandSimplex(const Reduced& r) : r_(r) {
    m_ = r.rows.size();
    n_ = r.cols.size();
    vars_ = r.cells.size();
    rows_ = m_ + n_ - 1;  // last column constraint is implied
    cols_ = vars_ + rows_;
    t_.assign((rows_ + 1) * (cols_ + 1), 0.0L);
    basis_.resize(rows_);
    for (std::size_t e = 0; e < vars_; ++e) {
      const auto& c = r.cells[e];
      at(c.r, e) = 1.0L;
      if (c.c + 1 < n_) at(m_ + c.c, e) = 1.0L;
    }
    for (std::size_t a = 0; a < m_; ++a) at(a, cols_) = r.supply[a];
    for (std::size_t b = 0; b + 1 < n_; ++b) at(m_ + b, cols_) = r.demand[b];
    for (std::size_t q = 0; q < rows_; ++q) {
      at(q, vars_ + q) = 1.0L;
      basis_[q] = vars_ + q;
    }
    Real scale = 0.0L;
    for (const auto& c : r.cells) scale = std::max(scale, static_cast<Real>(std::abs(c.cost)));
    cost_scale_ = scale > 0.0L ? scale : 1.0L;
  }

  std::vector<double> solve() {
    // Phase I: minimize the sum of artificials.
    std::vector<Real> phase1(cols_, 0.0L);
    for (std::size_t q = 0; q < rows_; ++q) phase1[vars_ + q] = 1.0L;
    set_objective(phase1);
    iterate(/*allow_artificial=*/true);
    if (-at(rows_, cols_) > 1e-10L) throw InvariantViolation("oracle: transport LP infeasible");

    for (std::size_t q = 0; q < rows_; ++q) {
      if (basis_[q] < vars_) continue;
      for (std::size_t j = 0; j < vars_; ++j) {
        if (std::abs(at(q, j)) > kPivotTol) {
          pivot(q, j);
          break;
        }
      }
    }

    std::vector<Real> phase2(cols_, 0.0L);
    for (std::size_t e = 0; e < vars_; ++e) {
      phase2[e] = static_cast<Real>(r_.cells[e].cost) / cost_scale_;
    }
    set_objective(phase2);
    iterate(/*allow_artificial=*/false);

    std::vector<double> flows(vars_, 0.0);
    for (std::size_t q = 0; q < rows_; ++q) {
      if (basis_[q] < vars_) flows[basis_[q]] = static_cast<double>(at(q, cols_));
    }
    return flows;
  }

  std::size_t pivots() const noexcept { return pivots_; }

 private:
  static constexpr Real kPivotTol = 1e-15L;
  static constexpr Real kCostTol = 1e-15L;

  Real& at(std::size_t row, std::size_t col) { return t_[row * (cols_ + 1) + col]; }

  void set_objective(const std::vector<Real>& c) {
    for (std::size_t j = 0; j <= cols_; ++j) at(rows_, j) = j < cols_ ? c[j] : 0.0L;
    for (std::size_t q = 0; q < rows_; ++q) {
      const Real cb = c[basis_[q]];
      if (cb == 0.0L) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(rows_, j) -= cb * at(q, j);
    }
  }

  void pivot(std::size_t pr, std::size_t pc) {
    const Real inv = 1.0L / at(pr, pc);
    for (std::size_t j = 0; j <= cols_; ++j) at(pr, j) *= inv;
    for (std::size_t q = 0; q <= rows_; ++q) {
      if (q == pr) continue;
      const Real f = at(q, pc);
      if (f == 0.0L) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(q, j) -= f * at(pr, j);
    }
    basis_[pr] = pc;
    ++pivots_;
  }

  void iterate(bool allow_artificial) {
    const std::size_t limit = allow_artificial ? cols_ : vars_;
    for (std::size_t guard = 0; guard < 100000; ++guard) {
      std::size_t enter = limit;
      for (std::size_t j = 0; j < limit; ++j) {
        if (at(rows_, j) < -kCostTol) {
          enter = j;
          break;
        }
      }
      if (enter == limit) return;
      std::size_t leave = rows_;
      Real best = 0.0L;
      for (std::size_t q = 0; q < rows_; ++q) {
        const Real a = at(q, enter);
        if (a <= kPivotTol) continue;
        const Real ratio = at(q, cols_) / a;
        if (leave == rows_ || ratio < best - 1e-18L ||
            (std::abs(ratio - best) <= 1e-18L && basis_[q] < basis_[leave])) {
          leave = q;
          best = ratio;
        }
      }
      if (leave == rows_) throw InvariantViolation("oracle: transport LP unbounded");
      pivot(leave, enter);
    }
    throw InvariantViolation("oracle: simplex iteration limit");
  }

  const Reduced& r_;
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::size_t vars_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Real cost_scale_ = 1.0L;
  std::vector<Real> t_;
  std::vector<std::size_t> basis_;
  std::size_t pivots_ = 0;
};

}  // namespace

OptimalCoupling enumerate_vertices_optimum(std::span<const double> from,
                                           std::span<const double> to,
                                           std::span<const double> cost_row_major,
                                           std::size_t max_trees) {
  const Reduced r = reduce(from, to, cost_row_major);
  if (spanning_tree_count(r.rows.size(), r.cols.size()) > static_cast<double>(max_trees)) {
    throw std::invalid_argument("oracle: too many vertices for exhaustive enumeration");
  }
  VertexEnumerator en(r);
  en.run();
  if (!en.found()) throw InvariantViolation("oracle: no feasible vertex");
  return expand(r, from.size(), to.size(), en.best_flows(), cost_row_major, en.trees());
}

OptimalCoupling simplex_optimum(std::span<const double> from, std::span<const double> to,
                                std::span<const double> cost_row_major) {
  const Reduced r = reduce(from, to, cost_row_major);
  BlandSimplex lp(r);
  const std::vector<double> flows = lp.solve();
  return expand(r, from.size(), to.size(), flows, cost_row_major, lp.pivots());
}

OptimalCoupling brute_force_optimal(std::span<const double> from, std::span<const double> to,
                                    std::span<const double> cost_row_major) {
  constexpr std::size_t kEnumerationLimit = 50000;
  const Reduced r = reduce(from, to, cost_row_major);
  if (spanning_tree_count(r.rows.size(), r.cols.size()) <= kEnumerationLimit) {
    return enumerate_vertices_optimum(from, to, cost_row_major, kEnumerationLimit);
  }
  return simplex_optimum(from, to, cost_row_major);
}

OptimalCoupling brute_force_optimal(const ProbabilityDistribution& p_from,
                                    const ProbabilityDistribution& p_to, const CostMatrix& cost) {
  if (cost.rows() != p_from.size() || cost.cols() != p_to.size()) {
    throw std::invalid_argument("oracle: cost dimensions do not match the distributions");
  }
  if (p_from.size() * p_to.size() > kOracleMaxCells) {
    throw std::invalid_argument("oracle: instance above the size guard");
  }
  const std::vector<double> dense = cost.dense();
  return brute_force_optimal(p_from.weights(), p_to.weights(), dense);
}

}  // namespace pilotwave::transport
