#include "pilotwave/transport.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pilotwave/errors.hpp"

namespace pilotwave::transport {

using lattice::CompensatedSum;

// ---------------------------------------------------------------------------
// CostMatrix

CostMatrix CostMatrix::quadratic(GridPtr source, GridPtr target) {
  if (!source || !target) throw std::invalid_argument("cost matrix needs both grids");
  return CostMatrix(CostKind::Quadratic, std::move(source), std::move(target));
}

CostMatrix CostMatrix::relativistic(GridPtr source, GridPtr target, double mass, double tau) {
  if (!source || !target) throw std::invalid_argument("cost matrix needs both grids");
  if (!(mass > 0.0) || !(tau > 0.0)) {
    throw std::invalid_argument("relativistic cost needs positive mass and tau");
  }
  CostMatrix c(CostKind::Relativistic, std::move(source), std::move(target));
  c.rest_action_ = mass * lattice::kSpeedOfLight * lattice::kSpeedOfLight * tau;
  c.light_step_ = lattice::kSpeedOfLight * tau;
  return c;
}

CostMatrix CostMatrix::table(GridPtr source, GridPtr target, std::vector<double> row_major) {
  if (!source || !target) throw std::invalid_argument("cost matrix needs both grids");
  if (row_major.size() != source->size() * target->size()) {
    throw std::invalid_argument("cost table has wrong size");
  }
  for (double v : row_major) {
    if (std::isnan(v)) throw std::invalid_argument("cost table contains NaN");
  }
  CostMatrix c(CostKind::Table, std::move(source), std::move(target));
  c.table_ = std::move(row_major);
  return c;
}

double CostMatrix::operator()(std::size_t i, std::size_t k) const {
  switch (kind_) {
    case CostKind::Quadratic: {
      const double dx = target_->position(k) - source_->position(i);
      return dx * dx;
    }
    case CostKind::Relativistic: {
      const double beta = (target_->position(k) - source_->position(i)) / light_step_;
      const double b2 = beta * beta;
      if (!(b2 < 1.0)) return std::numeric_limits<double>::infinity();
      // 1 - sqrt(1 - b2) without cancellation.
      return rest_action_ * b2 / (1.0 + std::sqrt(1.0 - b2));
    }
    case CostKind::Table:
      return table_[i * target_->size() + k];
  }
  return 0.0;
}

std::vector<double> CostMatrix::dense() const {
  std::vector<double> out(rows() * cols());
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t k = 0; k < cols(); ++k) out[i * cols() + k] = (*this)(i, k);
  }
  return out;
}

// ---------------------------------------------------------------------------
// StochasticMatrix

StochasticMatrix::StochasticMatrix(ProbabilityDistribution source, GridPtr target_grid,
                                   std::vector<std::size_t> row_offsets,
                                   std::vector<Entry> entries)
    : source_(std::move(source)),
      target_grid_(std::move(target_grid)),
      offsets_(std::move(row_offsets)),
      entries_(std::move(entries)) {
  if (!target_grid_) throw std::invalid_argument("stochastic matrix needs a target grid");
  if (offsets_.size() != source_.size() + 1 || offsets_.front() != 0 ||
      offsets_.back() != entries_.size()) {
    throw std::invalid_argument("row offsets do not match the source size");
  }
  const std::size_t n_to = target_grid_->size();
  for (std::size_t i = 0; i < source_.size(); ++i) {
    if (offsets_[i + 1] < offsets_[i]) throw std::invalid_argument("row offsets not monotone");
    for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e) {
      const Entry& en = entries_[e];
      if (en.target >= n_to) throw std::invalid_argument("target index out of range");
      if (e > offsets_[i] && entries_[e - 1].target >= en.target) {
        throw std::invalid_argument("row targets must be strictly ascending");
      }
      if (!(en.probability >= 0.0 && en.probability <= 1.0)) {
        throw std::invalid_argument("transition probability outside [0, 1]");
      }
    }
  }
}

StochasticMatrix StochasticMatrix::from_transfers(ProbabilityDistribution source,
                                                  GridPtr target_grid,
                                                  std::span<const Transfer> transfers) {
  std::vector<std::size_t> offsets(source.size() + 1, 0);
  std::vector<Entry> entries;
  entries.reserve(transfers.size());
  std::size_t prev_source = 0;
  for (const Transfer& t : transfers) {
    if (t.source >= source.size()) throw std::invalid_argument("transfer source out of range");
    if (t.source < prev_source) throw std::invalid_argument("transfers must be sorted by source");
    prev_source = t.source;
    const double p = source[t.source];
    if (!(p > 0.0)) {
      throw std::invalid_argument("transfer leaves a zero-probability source");
    }
    entries.push_back({t.target, std::min(t.mass / p, 1.0)});
    ++offsets[t.source + 1];
  }
  for (std::size_t i = 0; i < source.size(); ++i) offsets[i + 1] += offsets[i];
  return StochasticMatrix(std::move(source), std::move(target_grid), std::move(offsets),
                          std::move(entries));
}

double StochasticMatrix::probability(std::size_t i, std::size_t k) const noexcept {
  const auto r = row(i);
  const auto it = std::lower_bound(r.begin(), r.end(), k,
                                   [](const Entry& e, std::size_t key) { return e.target < key; });
  return (it != r.end() && it->target == k) ? it->probability : 0.0;
}

std::vector<double> StochasticMatrix::pushforward() const {
  std::vector<CompensatedSum> acc(n_targets());
  for (std::size_t i = 0; i < n_sources(); ++i) {
    const double p = source_[i];
    if (p == 0.0) continue;
    for (const Entry& e : row(i)) acc[e.target].add(e.probability * p);
  }
  std::vector<double> out(n_targets());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = acc[k].value();
  return out;
}

std::vector<Transfer> StochasticMatrix::transfers() const {
  std::vector<Transfer> out;
  out.reserve(entries_.size());
  for (std::size_t i = 0; i < n_sources(); ++i) {
    for (const Entry& e : row(i)) {
      out.push_back({static_cast<std::uint32_t>(i), e.target, e.probability * source_[i]});
    }
  }
  return out;
}

double StochasticMatrix::max_row_residual() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_sources(); ++i) {
    if (source_[i] == 0.0) continue;
    CompensatedSum s;
    for (const Entry& e : row(i)) s.add(e.probability);
    worst = std::max(worst, std::abs(s.value() - 1.0));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Minimal stochastic matrix

namespace {

void check_marginal(std::span<const double> w, const char* name) {
  CompensatedSum s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) {
      throw std::invalid_argument(std::string(name) + " weight " + std::to_string(i) +
                                  " is negative or not finite");
    }
    s.add(w[i]);
  }
  if (std::abs(s.value() - 1.0) > lattice::kNormTolerance) {
    throw std::invalid_argument(std::string(name) + " distribution is not normalized");
  }
}

}  // namespace

std::vector<Transfer> monotone_coupling(std::span<const double> from, std::span<const double> to) {
  check_marginal(from, "source");
  check_marginal(to, "target");
  if (from.empty() || to.empty()) throw std::invalid_argument("empty distribution");

  std::vector<double> remaining_in(from.begin(), from.end());
  std::vector<double> remaining_out(to.begin(), to.end());
  std::vector<Transfer> out;
  out.reserve(from.size() + to.size());

  // Targets left of `k` are exhausted, so the inner loop of the full double
  // sweep would skip them; starting at `k` visits the same (x, x') pairs in
  // the same order with the same arithmetic.
  std::size_t k = 0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    double& a = remaining_in[i];
    while (a > 0.0 && k < to.size()) {
      double& b = remaining_out[k];
      if (b > 0.0) {
        const double j = std::min(a, b);
        a -= j;
        b -= j;
        out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k), j});
      }
      if (!(b > 0.0)) ++k;
    }
  }

  // Fold rounding leftovers into the rows so each row carries exactly its
  // source mass.
  double residual = 0.0;
  for (double b : remaining_out) residual += std::max(b, 0.0);
  std::size_t last_target = to.size();
  for (std::size_t t = to.size(); t-- > 0;) {
    if (to[t] > 0.0) {
      last_target = t;
      break;
    }
  }

  std::vector<std::size_t> row_start(from.size() + 1, out.size());
  for (std::size_t e = out.size(); e-- > 0;) row_start[out[e].source] = e;
  for (std::size_t i = from.size(); i-- > 0;) row_start[i] = std::min(row_start[i], row_start[i + 1]);

  std::vector<Transfer> appended;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i] == 0.0) continue;
    const std::size_t lo = row_start[i];
    const std::size_t hi = row_start[i + 1];
    CompensatedSum row_mass;
    for (std::size_t e = lo; e < hi; ++e) row_mass.add(out[e].mass);
    const double deficit = from[i] - row_mass.value();
    if (deficit == 0.0) continue;
    residual += std::abs(deficit);
    if (hi == lo) {
      appended.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(last_target),
                          from[i]});
      continue;
    }
    Transfer* target = &out[hi - 1];
    if (!(target->mass + deficit > 0.0)) {
      target = &*std::max_element(out.begin() + static_cast<std::ptrdiff_t>(lo),
                                  out.begin() + static_cast<std::ptrdiff_t>(hi),
                                  [](const Transfer& x, const Transfer& y) { return x.mass < y.mass; });
    }
    target->mass += deficit;
  }
  if (residual > kMassBalanceTolerance) {
    throw InvariantViolation("mass balance residual " + std::to_string(residual) +
                             " exceeds tolerance after the monotone sweep");
  }
  out.insert(out.end(), appended.begin(), appended.end());
  return out;
}

StochasticMatrix minimal_stochastic_matrix(const ProbabilityDistribution& p_from,
                                           const ProbabilityDistribution& p_to) {
  const std::vector<Transfer> coupling = monotone_coupling(p_from.weights(), p_to.weights());
  return StochasticMatrix::from_transfers(p_from, p_to.grid_ptr(), coupling);
}

StochasticMatrix global_jump_matrix(const ProbabilityDistribution& p_from,
                                    const ProbabilityDistribution& p_to) {
  std::vector<StochasticMatrix::Entry> row;
  for (std::size_t k = 0; k < p_to.size(); ++k) {
    if (p_to[k] > 0.0) row.push_back({static_cast<std::uint32_t>(k), p_to[k]});
  }
  std::vector<std::size_t> offsets(p_from.size() + 1);
  std::vector<StochasticMatrix::Entry> entries;
  entries.reserve(row.size() * p_from.size());
  for (std::size_t i = 0; i < p_from.size(); ++i) {
    offsets[i] = entries.size();
    entries.insert(entries.end(), row.begin(), row.end());
  }
  offsets.back() = entries.size();
  return StochasticMatrix(p_from, p_to.grid_ptr(), std::move(offsets), std::move(entries));
}

// ---------------------------------------------------------------------------
// Metrics

double average_action(const StochasticMatrix& matrix, const CostMatrix& cost) {
  if (cost.rows() != matrix.n_sources() || cost.cols() != matrix.n_targets()) {
    throw std::invalid_argument("cost matrix dimensions do not match the stochastic matrix");
  }
  CompensatedSum acc;
  const auto& p = matrix.source();
  for (std::size_t i = 0; i < matrix.n_sources(); ++i) {
    if (p[i] == 0.0) continue;
    for (const auto& e : matrix.row(i)) {
      const double w = e.probability * p[i];
      if (w != 0.0) acc.add(w * cost(i, e.target));
    }
  }
  return acc.value();
}

double average_action(const StochasticMatrix& matrix, const ProbabilityDistribution& p_from,
                      const CostMatrix& cost) {
  if (!p_from.comparable(matrix.source()) ||
      !std::equal(p_from.weights().begin(), p_from.weights().end(),
                  matrix.source().weights().begin())) {
    throw std::invalid_argument("matrix was built against a different source distribution");
  }
  return average_action(matrix, cost);
}

TransportReport msd_report(const StochasticMatrix& matrix, const ProbabilityDistribution& p_from,
                           const lattice::Grid1D& source_grid,
                           const lattice::Grid1D& target_grid) {
  if (p_from.size() != matrix.n_sources() || source_grid.size() != matrix.n_sources() ||
      target_grid.size() != matrix.n_targets()) {
    throw std::invalid_argument("msd_report: dimension mismatch");
  }
  TransportReport rep;
  rep.nonzeros = matrix.nonzeros();
  rep.site_msd.assign(matrix.n_sources(), 0.0);
  rep.site_decomposition.assign(matrix.n_sources(), 0.0);

  CompensatedSum double_sum;
  CompensatedSum weighted;
  for (std::size_t i = 0; i < matrix.n_sources(); ++i) {
    const double x = source_grid.position(i);
    CompensatedSum msd;
    CompensatedSum mean;
    for (const auto& e : matrix.row(i)) {
      const double dx = target_grid.position(e.target) - x;
      msd.add(e.probability * dx * dx);
      mean.add(e.probability * dx);
      double_sum.add(e.probability * p_from[i] * dx * dx);
    }
    const double mu = mean.value();
    CompensatedSum var;
    for (const auto& e : matrix.row(i)) {
      const double dev = target_grid.position(e.target) - x - mu;
      var.add(e.probability * dev * dev);
    }
    const double d2 = msd.value();
    const double decomposition = mu * mu + var.value();
    rep.site_msd[i] = d2;
    rep.site_decomposition[i] = decomposition;
    if (std::abs(d2 - decomposition) > 1e-12 * std::max(d2, decomposition)) {
      throw InvariantViolation("msd decomposition fails at site " + std::to_string(i));
    }
    weighted.add(p_from[i] * d2);
  }
  rep.average_action = double_sum.value();
  rep.total_msd = weighted.value();
  return rep;
}

double wasserstein(const ProbabilityDistribution& p_from, const ProbabilityDistribution& p_to,
                   double order) {
  if (!(order >= 1.0) || !std::isfinite(order)) {
    throw std::invalid_argument("Wasserstein order must be >= 1");
  }
  const auto& gf = p_from.grid();
  const auto& gt = p_to.grid();
  auto dist_pow = [order](double d) {
    d = std::abs(d);
    if (order == 1.0) return d;
    if (order == 2.0) return d * d;
    return std::pow(d, order);
  };
  auto next_support = [](const ProbabilityDistribution& p, std::size_t i) {
    while (i < p.size() && p[i] == 0.0) ++i;
    return i;
  };

  // Walk the merged breakpoints of the two cumulative distribution functions.
  std::size_t i = next_support(p_from, 0);
  std::size_t k = next_support(p_to, 0);
  double cdf_from = i < p_from.size() ? p_from[i] : 0.0;
  double cdf_to = k < p_to.size() ? p_to[k] : 0.0;
  double t = 0.0;
  CompensatedSum acc;
  while (i < p_from.size() && k < p_to.size()) {
    const double next = std::min(cdf_from, cdf_to);
    if (next > t) acc.add((next - t) * dist_pow(gt.position(k) - gf.position(i)));
    t = std::max(t, next);
    if (cdf_from <= next) {
      i = next_support(p_from, i + 1);
      if (i < p_from.size()) cdf_from += p_from[i];
    }
    if (cdf_to <= next) {
      k = next_support(p_to, k + 1);
      if (k < p_to.size()) cdf_to += p_to[k];
    }
  }
  const double cost = std::max(acc.value(), 0.0);
  if (order == 1.0) return cost;
  if (order == 2.0) return std::sqrt(cost);
  return std::pow(cost, 1.0 / order);
}

}  // namespace pilotwave::transport
