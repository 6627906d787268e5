#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "pilotwave/errors.hpp"
#include "pilotwave/transport.hpp"
#include "support/oracles.hpp"

using namespace pilotwave;
using namespace pilotwave::transport;
using lattice::make_grid;
using lattice::normalize;

namespace {

ProbabilityDistribution dist(std::vector<double> w, const GridPtr& g) {
  return normalize(w, g);
}

// Dense scan for a < b, a' < b' with J(a->b') > 0 and J(b->a') > 0.
bool has_crossing(const StochasticMatrix& m) {
  const std::size_t n = m.n_sources();
  for (std::size_t a = 0; a < n; ++a) {
    for (const auto& ea : m.row(a)) {
      if (m.total(a, ea.target) <= 0) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        for (const auto& eb : m.row(b)) {
          if (eb.target < ea.target && m.total(b, eb.target) > 0) return true;
        }
      }
    }
  }
  return false;
}

// Feasible coupling obtained by the greedy corner rule over shuffled orders.
std::vector<double> random_vertex(std::mt19937_64& rng, std::vector<double> a,
                                  std::vector<double> b) {
  std::vector<std::size_t> ri(a.size()), ci(b.size());
  std::iota(ri.begin(), ri.end(), 0);
  std::iota(ci.begin(), ci.end(), 0);
  std::shuffle(ri.begin(), ri.end(), rng);
  std::shuffle(ci.begin(), ci.end(), rng);
  std::vector<double> j(a.size() * b.size(), 0.0);
  for (std::size_t x : ri) {
    for (std::size_t y : ci) {
      const double t = std::min(a[x], b[y]);
      if (t <= 0) continue;
      j[x * b.size() + y] += t;
      a[x] -= t;
      b[y] -= t;
    }
  }
  return j;
}

double coupling_cost(const std::vector<double>& j, const std::vector<double>& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i] > 0) s += j[i] * c[i];
  }
  return s;
}

}  // namespace

TEST_CASE("quadratic cost entries") {
  auto g = make_grid(0.0, 4e-6, 3);
  auto c = CostMatrix::quadratic(g, g);
  CHECK(c(1, 1) == 0.0);
  CHECK(c(0, 1) == doctest::Approx(4e-12).epsilon(1e-12));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 3; ++k) CHECK(c(i, k) == c(k, i));
  }
  CHECK(c.strictly_convex_in_displacement());
}

TEST_CASE("relativistic cost approaches the quadratic form") {
  const double m = lattice::kElectronMass;
  const double tau = 1e-7;
  auto g = make_grid(-1e-3, 1e-3, 11);
  auto rel = CostMatrix::relativistic(g, g, m, tau);
  auto quad = CostMatrix::quadratic(g, g);
  for (std::size_t k = 0; k < 11; ++k) {
    const double want = m / (2.0 * tau) * quad(5, k);
    CHECK(rel(5, k) == doctest::Approx(want).epsilon(1e-9));
  }
  // c tau = 30 m is far wider than the grid; shrink tau to leave the light cone
  auto tight = CostMatrix::relativistic(g, g, m, 1e-12);
  CHECK(std::isinf(tight(0, 10)));
  CHECK(std::isfinite(tight(5, 5)));
}

TEST_CASE("table cost validation") {
  auto g = make_grid(0.0, 1.0, 2);
  CHECK_THROWS_AS(CostMatrix::table(g, g, {1.0, 2.0, 3.0}), std::invalid_argument);
  auto t = CostMatrix::table(g, g, {0.0, 1.0, 2.0, 3.0});
  CHECK(t(1, 0) == 2.0);
  CHECK_FALSE(t.strictly_convex_in_displacement());
}

TEST_CASE("minimal matrix examples") {
  auto g = make_grid(0.0, 1.0, 2);
  {
    auto m = minimal_stochastic_matrix(dist({1, 0}, g), dist({0, 1}, g));
    CHECK(m.probability(0, 1) == 1.0);
    CHECK(m.probability(0, 0) == 0.0);
    CHECK(m.row(1).empty());
  }
  {
    auto m = minimal_stochastic_matrix(dist({0.5, 0.5}, g), dist({0.5, 0.5}, g));
    CHECK(m.probability(0, 0) == 1.0);
    CHECK(m.probability(1, 1) == 1.0);
    CHECK(m.nonzeros() == 2);
  }
  {
    auto from = ProbabilityDistribution::from_normalized({0.7, 0.3}, g);
    auto to = ProbabilityDistribution::from_normalized({0.4, 0.6}, g);
    auto m = minimal_stochastic_matrix(from, to);
    CHECK(m.probability(0, 0) == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
    CHECK(m.probability(0, 1) == doctest::Approx(3.0 / 7.0).epsilon(1e-15));
    CHECK(m.probability(1, 1) == 1.0);
    CHECK(m.probability(1, 0) == 0.0);
    auto cost = CostMatrix::quadratic(g, g);
    CHECK(std::abs(average_action(m, from, cost) - 0.3) <= 1e-15);
    auto rep = msd_report(m, from, *g, *g);
    CHECK(std::abs(rep.site_msd[0] - 3.0 / 7.0) <= 1e-15);
    CHECK(rep.site_msd[1] == 0.0);
    CHECK(std::abs(rep.total_msd - 0.3) <= 1e-15);
    auto best = brute_force_optimal(from, to, cost);
    CHECK(std::abs(best.cost - 0.3) <= 1e-12);
  }
}

TEST_CASE("minimal matrix rejects bad input") {
  auto g = make_grid(0.0, 1.0, 2);
  auto h = make_grid(0.0, 1.0, 3);
  const std::vector<double> a{0.5, 0.6};
  const std::vector<double> b{0.5, 0.5};
  CHECK_THROWS_AS(monotone_coupling(a, b), std::invalid_argument);
  const std::vector<double> neg{1.5, -0.5};
  CHECK_THROWS_AS(monotone_coupling(neg, b), std::invalid_argument);
  auto m = minimal_stochastic_matrix(dist({1, 1}, g), dist({1, 1, 1}, h));
  CHECK(m.n_targets() == 3);
}

TEST_CASE("sweep reproduces the literal double loop") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    const std::size_t k = 1 + rng() % 12;
    auto gn = make_grid(0.0, 1.0, std::max<std::size_t>(n, 2));
    auto gk = make_grid(0.0, 1.0, std::max<std::size_t>(k, 2));
    auto a = normalize(oracle::random_weights(rng, gn->size(), 0.3), gn);
    auto b = normalize(oracle::random_weights(rng, gk->size(), 0.3), gk);
    std::vector<double> av(a.weights().begin(), a.weights().end());
    std::vector<double> bv(b.weights().begin(), b.weights().end());
    const auto ref = oracle::double_loop_joint(av, bv);
    const auto tr = monotone_coupling(a.weights(), b.weights());
    std::vector<double> got(ref.size(), 0.0);
    for (const auto& t : tr) got[t.source * bv.size() + t.target] = t.mass;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(std::abs(got[i] - ref[i]) <= 1e-12);
      // the sweep never invents a transfer the double loop left at zero
      if (ref[i] == 0.0) CHECK(got[i] == 0.0);
    }
  }
}

TEST_CASE("minimal matrix marginals, sparsity, non-crossing, Bell property") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 2 + rng() % 63;
    auto g = make_grid(-1.0, 1.0, n);
    auto a = normalize(oracle::random_weights(rng, n, 0.25), g);
    auto b = normalize(oracle::random_weights(rng, n, 0.25), g);
    auto m = minimal_stochastic_matrix(a, b);
    CHECK(m.max_row_residual() <= 1e-12);
    const auto push = m.pushforward();
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(push[k] - b[k]) <= 1e-12);
    std::size_t support_a = 0;
    std::size_t support_b = 0;
    for (std::size_t i = 0; i < n; ++i) {
      support_a += a[i] > 0;
      support_b += b[i] > 0;
      if (a[i] == 0) CHECK(m.row(i).empty());
      for (const auto& e : m.row(i)) {
        CHECK(e.probability > 0.0);
        CHECK(e.probability <= 1.0);
      }
    }
    CHECK(m.nonzeros() <= support_a + support_b - 1);
    CHECK_FALSE(has_crossing(m));
    for (std::size_t q = 0; q < n; ++q) {
      for (const auto& e : m.row(q)) {
        if (e.target != q) CHECK(m.probability(e.target, q) == 0.0);
      }
    }
  }
}

TEST_CASE("global jump baseline") {
  auto g = make_grid(0.0, 1.0, 2);
  auto m = global_jump_matrix(dist({1, 1}, g), dist({0, 1}, g));
  CHECK(m.probability(0, 1) == 1.0);
  CHECK(m.probability(1, 1) == 1.0);
  CHECK(m.probability(0, 0) == 0.0);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 40;
    auto h = make_grid(-1.0, 1.0, n);
    auto a = normalize(oracle::random_weights(rng, n, 0.2), h);
    auto b = normalize(oracle::random_weights(rng, n, 0.2), h);
    auto jump = global_jump_matrix(a, b);
    auto best = minimal_stochastic_matrix(a, b);
    const auto push = jump.pushforward();
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(push[k] - b[k]) <= 1e-15);
    auto cost = CostMatrix::quadratic(h, h);
    const double s_jump = average_action(jump, a, cost);
    const double s_best = average_action(best, a, cost);
    CHECK(s_jump >= s_best);
    const auto support = [&](const ProbabilityDistribution& p) {
      return std::count_if(p.weights().begin(), p.weights().end(), [](double v) { return v > 0; });
    };
    if (support(a) > 1 && support(b) > 1) CHECK(s_jump > s_best);
  }
}

TEST_CASE("average action checks its inputs") {
  auto g = make_grid(0.0, 1.0, 2);
  auto h = make_grid(0.0, 1.0, 3);
  auto a = dist({1, 1}, g);
  auto m = minimal_stochastic_matrix(a, a);
  CHECK(average_action(m, a, CostMatrix::quadratic(g, g)) == 0.0);
  CHECK_THROWS_AS(average_action(m, a, CostMatrix::quadratic(h, h)), std::invalid_argument);
  CHECK_THROWS_AS(average_action(m, dist({1, 3}, g), CostMatrix::quadratic(g, g)),
                  std::invalid_argument);
}

TEST_CASE("stochastic matrix layout validation") {
  auto g = make_grid(0.0, 1.0, 2);
  auto a = dist({1, 1}, g);
  using E = StochasticMatrix::Entry;
  CHECK_THROWS_AS(StochasticMatrix(a, g, {0, 2, 3}, {E{1, 0.5}, E{0, 0.5}, E{1, 1.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(StochasticMatrix(a, g, {0, 1, 2}, {E{0, 1.5}, E{1, 1.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(StochasticMatrix(a, g, {0, 1}, {E{0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(StochasticMatrix(a, g, {0, 1, 2}, {E{0, 1.0}, E{2, 1.0}}),
                  std::invalid_argument);
  CHECK_NOTHROW(StochasticMatrix(a, g, {0, 1, 2}, {E{0, 1.0}, E{1, 1.0}}));
}

TEST_CASE("msd decomposition on random matrices") {
  std::mt19937_64 rng(4);
  using E = StochasticMatrix::Entry;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 20;
    auto g = make_grid(-1e-3, 1e-3, n);
    auto a = normalize(oracle::random_weights(rng, n), g);
    std::vector<std::size_t> off{0};
    std::vector<E> ent;
    for (std::size_t i = 0; i < n; ++i) {
      auto row = oracle::random_weights(rng, n, 0.5);
      for (std::size_t k = 0; k < n; ++k) {
        if (row[k] > 0) ent.push_back(E{static_cast<std::uint32_t>(k), row[k]});
      }
      off.push_back(ent.size());
    }
    StochasticMatrix m(a, g, off, ent);
    auto rep = msd_report(m, a, *g, *g);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(rep.site_msd[i] - rep.site_decomposition[i]) <=
            1e-12 * std::max(rep.site_msd[i], 1e-300));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += a[i] * rep.site_msd[i];
    CHECK(std::abs(total - rep.total_msd) <= 1e-12 * rep.total_msd);
    CHECK(std::abs(rep.average_action - rep.total_msd) <= 1e-12 * rep.total_msd);
  }
}

TEST_CASE("oracle basics") {
  const std::vector<double> one{1.0};
  const std::vector<double> zero_cost{0.0};
  CHECK(brute_force_optimal(one, one, zero_cost).cost == 0.0);

  std::vector<double> big(9, 1.0 / 9.0);
  std::vector<double> c(81, 1.0);
  CHECK_THROWS_AS(brute_force_optimal(big, big, c), std::invalid_argument);
  CHECK_NOTHROW(brute_force_optimal(std::vector<double>(8, 0.125), std::vector<double>(8, 0.125),
                                    std::vector<double>(64, 1.0)));
}

TEST_CASE("oracle is below every sampled feasible coupling") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = make_grid(0.0, 1.0, 5);
    auto a = normalize(oracle::random_weights(rng, 5), g);
    auto b = normalize(oracle::random_weights(rng, 5), g);
    std::vector<double> av(a.weights().begin(), a.weights().end());
    std::vector<double> bv(b.weights().begin(), b.weights().end());
    std::vector<double> c(25);
    for (double& v : c) v = u(rng);
    const auto best = brute_force_optimal(av, bv, c);
    for (int s = 0; s < 20; ++s) {
      CHECK(best.cost <= coupling_cost(random_vertex(rng, av, bv), c) + 1e-12);
    }
    std::vector<double> product(25);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t k = 0; k < 5; ++k) product[i * 5 + k] = av[i] * bv[k];
    }
    CHECK(best.cost <= coupling_cost(product, c) + 1e-12);
    // the returned coupling has the requested marginals
    for (std::size_t i = 0; i < 5; ++i) {
      double row = 0.0;
      double col = 0.0;
      for (std::size_t k = 0; k < 5; ++k) {
        row += best.joint[i * 5 + k];
        col += best.joint[k * 5 + i];
      }
      CHECK(std::abs(row - av[i]) <= 1e-12);
      CHECK(std::abs(col - bv[i]) <= 1e-12);
    }
  }
}

TEST_CASE("vertex enumeration and simplex agree") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 1 + rng() % 5;
    const std::size_t k = 1 + rng() % 5;
    const auto av = oracle::random_weights(rng, n, 0.2);
    const auto bv = oracle::random_weights(rng, k, 0.2);
    std::vector<double> c(n * k);
    for (double& v : c) v = u(rng) < 0.1 ? INFINITY : u(rng);
    bool enum_ok = true;
    bool lp_ok = true;
    OptimalCoupling e;
    OptimalCoupling s;
    try {
      e = enumerate_vertices_optimum(av, bv, c);
    } catch (const InvariantViolation&) {
      enum_ok = false;
    }
    try {
      s = simplex_optimum(av, bv, c);
    } catch (const InvariantViolation&) {
      lp_ok = false;
    }
    CHECK(enum_ok == lp_ok);  // both agree on infeasibility caused by +inf cells
    if (enum_ok && lp_ok) CHECK(std::abs(e.cost - s.cost) <= 1e-12);
  }
}

TEST_CASE("simplex handles the largest admitted instances") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = make_grid(-1.0, 1.0, 8);
    auto a = normalize(oracle::random_weights(rng, 8, 0.1), g);
    auto b = normalize(oracle::random_weights(rng, 8, 0.1), g);
    auto cost = CostMatrix::quadratic(g, g);
    const auto best = brute_force_optimal(a, b, cost);
    const double mono = average_action(minimal_stochastic_matrix(a, b), a, cost);
    CHECK(std::abs(best.cost - mono) <= 1e-12);
  }
}

TEST_CASE("wasserstein distance") {
  auto g = make_grid(0.0, 3.0, 4);
  auto delta0 = dist({1, 0, 0, 0}, g);
  auto delta3 = dist({0, 0, 0, 1}, g);
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    CHECK(wasserstein(delta0, delta3, p) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(wasserstein(delta0, delta0, p) == 0.0);
  }
  CHECK_THROWS_AS(wasserstein(delta0, delta3, 0.5), std::invalid_argument);

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 6;
    auto h = make_grid(-1.0, 1.0, n);
    auto a = normalize(oracle::random_weights(rng, n, 0.2), h);
    auto b = normalize(oracle::random_weights(rng, n, 0.2), h);
    for (double p : {1.0, 3.0}) {
      std::vector<double> c(n * n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
          c[i * n + k] = std::pow(std::abs(h->position(k) - h->position(i)), p);
        }
      }
      const double exact = std::pow(brute_force_optimal(a, b, CostMatrix::table(h, h, c)).cost,
                                    1.0 / p);
      CHECK(wasserstein(a, b, p) == doctest::Approx(exact).epsilon(1e-9));
    }
    const double w2 = wasserstein(a, b, 2.0);
    const double action =
        average_action(minimal_stochastic_matrix(a, b), a, CostMatrix::quadratic(h, h));
    CHECK(std::abs(w2 * w2 - action) <= 1e-12);
  }
}
