#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "pilotwave/lattice.hpp"
#include "support/oracles.hpp"

using namespace pilotwave::lattice;

TEST_CASE("grid endpoints and spacing") {
  auto g = make_grid(0.0, 1.0, 2);
  CHECK(g->position(0) == 0.0);
  CHECK(g->position(1) == 1.0);
  CHECK(g->spacing() == 1.0);

  auto h = make_grid(-0.5e-3, 0.5e-3, 1001);
  CHECK(h->spacing() == doctest::Approx(1e-6).epsilon(1e-14));
  CHECK(h->position(0) == -0.5e-3);
  CHECK(h->position(1000) == 0.5e-3);
  CHECK(h->position(500) == 0.0);
}

TEST_CASE("grid rejects degenerate input") {
  CHECK_THROWS_AS(make_grid(0.0, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(0.0, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(1.0, 1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(2.0, 1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(0.0, INFINITY, 5), std::invalid_argument);
}

TEST_CASE("grid positions are affine and mirror symmetric") {
  auto g = make_grid(-1.5e-3, 1.5e-3, 2001);
  const double dx = g->spacing();
  for (std::size_t i = 0; i + 1 < g->size(); ++i) {
    const double step = g->position(i + 1) - g->position(i);
    CHECK(std::abs(step - dx) <= 1e-12 * dx * 1e3);  // differences of O(1e-3) values
    CHECK(g->position(i + 1) > g->position(i));
    CHECK(g->position(g->size() - 1 - i) == -g->position(i));
  }
}

TEST_CASE("nearest site") {
  auto g = make_grid(0.0, 10.0, 11);
  CHECK(g->nearest(-3.0) == 0);
  CHECK(g->nearest(3.4) == 3);
  CHECK(g->nearest(3.6) == 4);
  CHECK(g->nearest(99.0) == 10);
}

TEST_CASE("time parameters obey the de Broglie relation") {
  TimeParameters t(1e-9, 1000.0, kElectronMass);
  CHECK(t.dy() == 1000.0 * 1e-9);
  CHECK(std::abs(t.wavelength() * t.mass() * t.v_y() / kPlanck - 1.0) < 1e-12);

  auto w = TimeParameters::from_wavelength(700e-9, 1e-4);
  CHECK(std::abs(w.wavelength() / 700e-9 - 1.0) < 1e-12);
  CHECK(std::abs(w.dy() / 1e-4 - 1.0) < 1e-12);

  CHECK_THROWS_AS(TimeParameters(0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(TimeParameters(1.0, -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(TimeParameters(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("normalize examples") {
  auto g2 = make_grid(0.0, 1.0, 2);
  auto p = normalize(std::vector<double>{2.0, 2.0}, g2);
  CHECK(p[0] == 0.5);
  CHECK(p[1] == 0.5);

  auto g3 = make_grid(0.0, 2.0, 3);
  auto q = normalize(std::vector<double>{0.0, 3.0, 1.0}, g3);
  CHECK(q[0] == 0.0);
  CHECK(q[1] == 0.75);
  CHECK(q[2] == 0.25);

  CHECK_THROWS_AS(normalize(std::vector<double>{0.0, 0.0}, g2), std::invalid_argument);
  CHECK_THROWS_AS(normalize(std::vector<double>{1.0, -0.5}, g2), std::invalid_argument);
  CHECK_THROWS_AS(normalize(std::vector<double>{1.0}, g2), std::invalid_argument);
  CHECK_THROWS_AS(normalize(std::vector<double>{1.0, NAN}, g2), std::invalid_argument);
}

TEST_CASE("normalize clamps dust") {
  auto g = make_grid(0.0, 2.0, 3);
  auto p = normalize(std::vector<double>{1.0, 1e-17, 1.0}, g);
  CHECK(p[1] == 0.0);
  CHECK(p[0] == 0.5);
}

TEST_CASE("normalize is idempotent and scale invariant") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> scale(1e-6, 1e6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    auto g = make_grid(-1.0, 1.0, n);
    std::vector<double> raw = oracle::random_weights(rng, n, 0.3);
    for (double& v : raw) v *= 37.0;
    auto once = normalize(raw, g);
    auto twice = normalize(once.weights(), g);
    for (std::size_t i = 0; i < n; ++i) CHECK(once[i] == twice[i]);

    const double c = scale(rng);
    std::vector<double> scaled(raw);
    for (double& v : scaled) v *= c;
    auto other = normalize(scaled, g);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(other[i] - once[i]) <= 1e-12);
    CHECK(std::abs(compensated_sum(once.weights()) - 1.0) <= kNormTolerance);

    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (raw[i] > 0 && raw[i + 1] > 0) {
        const double want = raw[i] / raw[i + 1];
        CHECK(std::abs(once[i] / once[i + 1] / want - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("from_normalized validates") {
  auto g = make_grid(0.0, 1.0, 2);
  CHECK_NOTHROW(ProbabilityDistribution::from_normalized({0.25, 0.75}, g));
  CHECK_THROWS_AS(ProbabilityDistribution::from_normalized({0.25, 0.7}, g), std::invalid_argument);
  CHECK_THROWS_AS(ProbabilityDistribution::from_normalized({1.25, -0.25}, g),
                  std::invalid_argument);
}

TEST_CASE("distributions compare by grid value") {
  auto a = make_grid(0.0, 1.0, 5);
  auto b = make_grid(0.0, 1.0, 5);
  auto c = make_grid(0.0, 1.0, 6);
  auto pa = normalize(std::vector<double>(5, 1.0), a);
  auto pb = normalize(std::vector<double>(5, 1.0), b);
  auto pc = normalize(std::vector<double>(6, 1.0), c);
  CHECK(pa.comparable(pb));
  CHECK_FALSE(pa.comparable(pc));
}

TEST_CASE("compensated sum") {
  std::vector<double> v{1.0, 1e-16, 1e-16, 1e-16, 1e-16, -1.0};
  CHECK(compensated_sum(v) == doctest::Approx(4e-16).epsilon(1e-6));
}
