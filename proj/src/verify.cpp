#include "pilotwave/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "pilotwave/analysis.hpp"

namespace pilotwave::verify {

using lattice::CompensatedSum;
using lattice::make_grid;
using transport::CostMatrix;

namespace {

void check_shapes(std::span<const ProbabilityDistribution> lines,
                  std::span<const StochasticMatrix> steps) {
  if (lines.size() != steps.size() + 1) {
    throw std::invalid_argument(fmt::format("{} lines but {} steps", lines.size(), steps.size()));
  }
  for (std::size_t j = 0; j < steps.size(); ++j) {
    if (steps[j].n_sources() != lines[j].size() || steps[j].n_targets() != lines[j + 1].size()) {
      throw std::invalid_argument(fmt::format("step {} does not fit its lines", j));
    }
  }
}

std::size_t support(const ProbabilityDistribution& p) {
  return static_cast<std::size_t>(
      std::count_if(p.weights().begin(), p.weights().end(), [](double w) { return w > 0.0; }));
}

std::vector<double> random_weights(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(n);
  for (auto& v : w) v = u(rng) < 0.25 ? 0.0 : u(rng) + 1e-3;
  if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) {
    w[rng() % n] = 1.0;
  }
  return w;
}

lattice::GridPtr random_grid(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double lo = u(rng);
  return make_grid(lo, lo + 0.2 + std::abs(u(rng)) * 2.0, std::max<std::size_t>(n, 2));
}

CheckResult make(std::string name, bool ok, double residual, double tol, std::string detail) {
  return CheckResult{std::move(name), ok, residual, tol, std::move(detail)};
}

}  // namespace

bool Report::passed() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

CostMatrix CostSpec::make(const lattice::GridPtr& source, const lattice::GridPtr& target) const {
  if (kind == transport::CostKind::Relativistic) {
    return CostMatrix::relativistic(source, target, mass, tau);
  }
  return CostMatrix::quadratic(source, target);
}

CheckResult check_marginals(std::span<const ProbabilityDistribution> lines,
                            std::span<const StochasticMatrix> steps, double tolerance) {
  check_shapes(lines, steps);
  double worst_row = 0.0;
  double worst_push = 0.0;
  std::size_t where_row = 0;
  std::size_t where_push = 0;
  for (std::size_t j = 0; j < steps.size(); ++j) {
    const auto& m = steps[j];
    const auto& p = lines[j];
    std::vector<CompensatedSum> push(m.n_targets());
    for (std::size_t i = 0; i < m.n_sources(); ++i) {
      if (p[i] == 0.0) continue;
      CompensatedSum row;
      for (const auto& e : m.row(i)) {
        row.add(e.probability);
        push[e.target].add(e.probability * p[i]);
      }
      const double r = std::abs(row.value() - 1.0);
      if (r > worst_row) {
        worst_row = r;
        where_row = j;
      }
    }
    const auto& next = lines[j + 1];
    for (std::size_t k = 0; k < next.size(); ++k) {
      const double r = std::abs(push[k].value() - next[k]);
      if (r > worst_push) {
        worst_push = r;
        where_push = j;
      }
    }
  }
  const double worst = std::max(worst_row, worst_push);
  return make("marginals", worst <= tolerance, worst, tolerance,
              fmt::format("row sums {:.3g} (step {}), pushforward {:.3g} (step {})", worst_row,
                          where_row, worst_push, where_push));
}

CheckResult check_non_crossing(std::span<const ProbabilityDistribution> lines,
                               std::span<const StochasticMatrix> steps, const CostSpec& cost) {
  check_shapes(lines, steps);
  std::size_t found = 0;
  std::string first;
  for (std::size_t j = 0; j < steps.size(); ++j) {
    const auto c = cost.make(lines[j].grid_ptr(), lines[j + 1].grid_ptr());
    const auto pairs = analysis::find_crossing_pairs(steps[j], lines[j], c, j, 1);
    if (!pairs.empty() && first.empty()) {
      const auto& q = pairs.front();
      first = fmt::format("; first at step {}: {}->{} with {}->{}", j, q.a, q.b_prime, q.b,
                          q.a_prime);
    }
    found += pairs.size();
  }
  return make("non_crossing", found == 0, static_cast<double>(found), 0.0,
              fmt::format("{} step(s) with a crossing pair{}", found, first));
}

CheckResult check_bell(std::span<const StochasticMatrix> steps) {
  double worst = 0.0;
  std::size_t shared = 0;
  for (const auto& m : steps) {
    if (!(m.source().grid() == m.target_grid())) continue;
    ++shared;
    for (std::size_t i = 0; i < m.n_sources(); ++i) {
      for (const auto& e : m.row(i)) {
        if (e.target == i) continue;
        worst = std::max(worst, e.probability * m.probability(e.target, i));
      }
    }
  }
  return make("bell", worst == 0.0, worst, 0.0,
              fmt::format("{} shared-grid step(s), largest two-way product {:.3g}", shared, worst));
}

CheckResult check_sparsity(std::span<const ProbabilityDistribution> lines,
                           std::span<const StochasticMatrix> steps) {
  check_shapes(lines, steps);
  long long worst = std::numeric_limits<long long>::min();
  for (std::size_t j = 0; j < steps.size(); ++j) {
    const long long bound =
        static_cast<long long>(support(lines[j]) + support(lines[j + 1])) - 1;
    worst = std::max(worst, static_cast<long long>(steps[j].nonzeros()) - bound);
  }
  if (steps.empty()) worst = 0;
  return make("sparsity", worst <= 0, static_cast<double>(std::max(0LL, worst)), 0.0,
              fmt::format("nonzeros minus support bound, worst {}", worst));
}

CheckResult check_wasserstein(std::span<const ProbabilityDistribution> lines,
                              std::span<const StochasticMatrix> steps, double tolerance) {
  check_shapes(lines, steps);
  double worst = 0.0;
  std::size_t where = 0;
  for (std::size_t j = 0; j < steps.size(); ++j) {
    const double w = transport::wasserstein(lines[j], lines[j + 1], 2.0);
    const auto rep =
        transport::msd_report(steps[j], lines[j], lines[j].grid(), lines[j + 1].grid());
    const double extent = std::max(lines[j].grid().x_max(), lines[j + 1].grid().x_max()) -
                          std::min(lines[j].grid().x_min(), lines[j + 1].grid().x_min());
    const double r = std::abs(w * w - rep.total_msd) / (extent * extent);
    if (r > worst) {
      worst = r;
      where = j;
    }
  }
  return make("wasserstein_identity", worst <= tolerance, worst, tolerance,
              fmt::format("|W2^2 - total msd| / extent^2, worst at step {}", where));
}

CheckResult check_baseline(std::span<const ProbabilityDistribution> lines,
                           std::span<const StochasticMatrix> steps, double strict_fraction) {
  check_shapes(lines, steps);
  std::size_t strict = 0;
  std::size_t violations = 0;
  for (std::size_t j = 0; j < steps.size(); ++j) {
    const auto c = CostMatrix::quadratic(lines[j].grid_ptr(), lines[j + 1].grid_ptr());
    const double minimal = transport::average_action(steps[j], lines[j], c);
    const double baseline = analysis::global_jump_action(lines[j], lines[j + 1], c);
    if (baseline < minimal * (1.0 - 1e-12)) ++violations;
    if (baseline > minimal) ++strict;
  }
  const double fraction =
      steps.empty() ? 1.0 : static_cast<double>(strict) / static_cast<double>(steps.size());
  return make("baseline_dominance", violations == 0 && fraction >= strict_fraction, fraction,
              strict_fraction,
              fmt::format("{} of {} steps strictly above the minimal action, {} below it", strict,
                          steps.size(), violations));
}

CheckResult oracle_suite(std::size_t instances, std::uint64_t seed, std::size_t max_sites,
                         double tolerance) {
  if (max_sites < 1 || max_sites * max_sites > transport::kOracleMaxCells) {
    throw std::invalid_argument("oracle suite site count out of range");
  }
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < instances; ++t) {
    const std::size_t n = 1 + rng() % max_sites;
    const std::size_t m = 1 + rng() % max_sites;
    const auto gf = random_grid(rng, n);
    const auto gt = random_grid(rng, m);
    const auto p = lattice::normalize(random_weights(rng, gf->size()), gf);
    const auto q = lattice::normalize(random_weights(rng, gt->size()), gt);
    const auto c = CostMatrix::quadratic(gf, gt);
    const double fast = transport::average_action(transport::minimal_stochastic_matrix(p, q), c);
    const double exact = transport::brute_force_optimal(p, q, c).cost;
    worst = std::max(worst, std::abs(fast - exact));
  }
  return make("oracle", worst < tolerance, worst, tolerance,
              fmt::format("{} random instances, up to {} sites", instances, max_sites));
}

CheckResult random_structure_suite(std::size_t instances, std::uint64_t seed,
                                   std::size_t max_sites) {
  std::mt19937_64 rng(seed);
  std::size_t violations = 0;
  for (std::size_t t = 0; t < instances; ++t) {
    const std::size_t n = 2 + rng() % (max_sites - 1);
    const bool shared = rng() % 2 == 0;
    const auto gf = random_grid(rng, n);
    const auto gt = shared ? gf : random_grid(rng, 2 + rng() % (max_sites - 1));
    const auto p = lattice::normalize(random_weights(rng, gf->size()), gf);
    const auto q = lattice::normalize(random_weights(rng, gt->size()), gt);
    const auto m = transport::minimal_stochastic_matrix(p, q);
    const auto c = CostMatrix::quadratic(gf, gt);
    if (!analysis::find_crossing_pairs(m, p, c, 0, 1).empty()) ++violations;
    if (shared && !check_bell(std::span<const StochasticMatrix>(&m, 1)).passed) ++violations;
  }
  return make("random_structure", violations == 0, static_cast<double>(violations), 0.0,
              fmt::format("{} random instances, up to {} sites", instances, max_sites));
}

Report verify_chain(std::span<const ProbabilityDistribution> lines,
                    std::span<const StochasticMatrix> steps, const Options& options) {
  Report r;
  auto run = [&](const char* name, auto&& check) {
    try {
      r.checks.push_back(check());
    } catch (const std::exception& e) {
      r.checks.push_back(make(name, false, std::numeric_limits<double>::infinity(), 0.0,
                              std::string("aborted: ") + e.what()));
    }
  };
  run("marginals", [&] { return check_marginals(lines, steps); });
  run("sparsity", [&] { return check_sparsity(lines, steps); });
  run("non_crossing", [&] { return check_non_crossing(lines, steps, options.cost); });
  run("bell", [&] { return check_bell(steps); });
  run("wasserstein_identity", [&] { return check_wasserstein(lines, steps); });
  run("baseline_dominance", [&] { return check_baseline(lines, steps); });
  run("oracle", [&] { return oracle_suite(options.oracle_instances, options.seed); });
  run("random_structure",
      [&] { return random_structure_suite(options.random_instances, options.seed + 1); });
  return r;
}

StochasticMatrix perturb_entry(const StochasticMatrix& matrix, std::size_t source,
                               std::size_t entry, double delta) {
  if (source >= matrix.n_sources()) throw std::out_of_range("perturbed row out of range");
  if (entry >= matrix.row(source).size()) throw std::out_of_range("perturbed entry out of range");
  std::vector<std::size_t> offsets{0};
  std::vector<StochasticMatrix::Entry> entries;
  entries.reserve(matrix.nonzeros());
  for (std::size_t i = 0; i < matrix.n_sources(); ++i) {
    const auto row = matrix.row(i);
    entries.insert(entries.end(), row.begin(), row.end());
    if (i == source) {
      double& v = entries[offsets.back() + entry].probability;
      v = (v + delta <= 1.0 && v + delta >= 0.0) ? v + delta : v - delta;
    }
    offsets.push_back(entries.size());
  }
  return StochasticMatrix(matrix.source(), matrix.target_grid_ptr(), std::move(offsets),
                          std::move(entries));
}

std::size_t heaviest_row(const StochasticMatrix& matrix) {
  const auto w = matrix.source().weights();
  return static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
}

}  // namespace pilotwave::verify
