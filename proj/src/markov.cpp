#include "pilotwave/markov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "parallel.hpp"
#include "pilotwave/errors.hpp"

namespace pilotwave::markov {

MarkovChain::MarkovChain(std::vector<ProbabilityDistribution> lines,
                         std::vector<StochasticMatrix> steps, double dy,
                         std::optional<lattice::TimeParameters> time)
    : lines_(std::move(lines)), steps_(std::move(steps)), dy_(dy), time_(std::move(time)) {
  if (lines_.size() < 2) throw std::invalid_argument("chain needs at least two lines");
  if (steps_.size() + 1 != lines_.size()) {
    throw std::invalid_argument("chain needs exactly one matrix per step");
  }
  if (!(dy_ > 0.0) || !std::isfinite(dy_)) throw std::invalid_argument("line spacing must be positive");

  for (std::size_t j = 0; j < steps_.size(); ++j) {
    const auto& m = steps_[j];
    const auto& here = lines_[j];
    const auto& next = lines_[j + 1];
    const std::string where = "step " + std::to_string(j);
    if (!m.source().comparable(here) ||
        !std::equal(m.source().weights().begin(), m.source().weights().end(),
                    here.weights().begin())) {
      throw std::invalid_argument(where + ": matrix was built on a different source line");
    }
    if (!(m.target_grid() == next.grid())) {
      throw std::invalid_argument(where + ": matrix targets a different grid");
    }
    const double rows = m.max_row_residual();
    const auto push = m.pushforward();
    double worst = 0.0;
    for (std::size_t k = 0; k < push.size(); ++k) worst = std::max(worst, std::abs(push[k] - next[k]));
    if (rows > lattice::kNormTolerance) {
      throw std::invalid_argument(where + ": row sums off by " + std::to_string(rows));
    }
    if (worst > lattice::kNormTolerance) {
      throw std::invalid_argument(where + ": pushforward misses the next line by " +
                                  std::to_string(worst));
    }
    row_residual_ = std::max(row_residual_, rows);
    push_residual_ = std::max(push_residual_, worst);
  }

  const auto w = lines_.front().weights();
  initial_cdf_.resize(w.size());
  lattice::CompensatedSum acc;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc.add(w[i]);
    initial_cdf_[i] = acc.value();
  }
}

MarkovChain MarkovChain::from_lines(std::vector<ProbabilityDistribution> lines, double dy,
                                    std::optional<lattice::TimeParameters> time,
                                    unsigned threads) {
  if (lines.size() < 2) throw std::invalid_argument("chain needs at least two lines");
  std::vector<std::optional<StochasticMatrix>> built(lines.size() - 1);
  detail::parallel_chunks(built.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) {
      built[j].emplace(transport::minimal_stochastic_matrix(lines[j], lines[j + 1]));
    }
  });
  std::vector<StochasticMatrix> steps;
  steps.reserve(built.size());
  for (auto& m : built) steps.push_back(std::move(*m));
  return MarkovChain(std::move(lines), std::move(steps), dy, std::move(time));
}

MarkovChain build_chain(const lattice::GridPtr& grid, const wavefield::SlitGeometry& geom,
                        const lattice::TimeParameters& time, std::size_t n_steps,
                        wavefield::ApertureAlignment alignment, unsigned threads) {
  if (!grid) throw std::invalid_argument("build_chain needs a grid");
  if (n_steps < 1) throw std::invalid_argument("build_chain needs at least one step");
  const double dy = time.dy();
  const double lambda = time.wavelength();
  std::vector<std::optional<ProbabilityDistribution>> lines(n_steps + 1);
  detail::parallel_chunks(lines.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) {
      lines[j].emplace(wavefield::line_distribution(grid, dy * static_cast<double>(j), geom,
                                                    lambda, alignment));
    }
  });
  std::vector<ProbabilityDistribution> out;
  out.reserve(lines.size());
  for (auto& p : lines) out.push_back(std::move(*p));
  return MarkovChain::from_lines(std::move(out), dy, time, threads);
}

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(mix(seed ^ mix((stream + 1) * kGolden))) {}

std::uint64_t CounterRng::bits(std::uint64_t counter) const noexcept {
  return mix(key_ + (counter + 1) * kGolden);
}

double CounterRng::uniform(std::uint64_t counter) const noexcept {
  return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

Trajectory sample_trajectory(const MarkovChain& chain, const CounterRng& rng) {
  Trajectory t;
  t.sites.resize(chain.n_lines());

  const auto cdf = chain.initial_cdf();
  const double target = rng.uniform(0) * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  std::size_t site = static_cast<std::size_t>(it - cdf.begin());
  if (site == cdf.size()) {
    // rounding pushed the draw onto the total: take the last occupied site
    const auto w = chain.line(0).weights();
    site = w.size() - 1;
    while (site > 0 && w[site] == 0.0) --site;
  }
  t.sites[0] = static_cast<std::uint32_t>(site);

  for (std::size_t j = 0; j < chain.n_steps(); ++j) {
    const auto row = chain.step(j).row(site);
    if (row.empty()) {
      throw InvariantViolation("sampled an empty row (line " + std::to_string(j) + ", site " +
                               std::to_string(site) + ")");
    }
    const double u = rng.uniform(j + 1);
    double acc = 0.0;
    std::size_t pick = row.size() - 1;
    for (std::size_t e = 0; e + 1 < row.size(); ++e) {
      acc += row[e].probability;
      if (u < acc) {
        pick = e;
        break;
      }
    }
    site = row[pick].target;
    t.sites[j + 1] = static_cast<std::uint32_t>(site);
  }
  return t;
}

double path_probability(const Trajectory& trajectory, const MarkovChain& chain) {
  if (trajectory.sites.size() != chain.n_lines()) {
    throw std::invalid_argument("trajectory has " + std::to_string(trajectory.sites.size()) +
                                " sites, chain has " + std::to_string(chain.n_lines()) + " lines");
  }
  for (std::size_t j = 0; j < chain.n_lines(); ++j) {
    if (trajectory.sites[j] >= chain.line(j).size()) {
      throw std::invalid_argument("trajectory site out of range on line " + std::to_string(j));
    }
  }
  double p = chain.line(0)[trajectory.sites[0]];
  for (std::size_t j = 0; j < chain.n_steps() && p > 0.0; ++j) {
    p *= chain.step(j).probability(trajectory.sites[j], trajectory.sites[j + 1]);
  }
  return p;
}

TrajectoryEnsemble::TrajectoryEnsemble(std::uint64_t seed, std::size_t n_particles,
                                       std::size_t n_lines, std::vector<std::uint32_t> sites)
    : seed_(seed), n_particles_(n_particles), n_lines_(n_lines), sites_(std::move(sites)) {
  if (sites_.size() != n_particles_ * n_lines_) {
    throw std::invalid_argument("ensemble storage does not match particles x lines");
  }
}

Trajectory TrajectoryEnsemble::trajectory(std::size_t particle) const {
  if (particle >= n_particles_) throw std::out_of_range("particle index out of range");
  const auto* first = sites_.data() + particle * n_lines_;
  return Trajectory{std::vector<std::uint32_t>(first, first + n_lines_)};
}

TrajectoryEnsemble run_ensemble(const MarkovChain& chain, std::size_t n_particles,
                                std::uint64_t seed, unsigned threads) {
  if (n_particles == 0) throw std::invalid_argument("ensemble needs at least one particle");
  const std::size_t lines = chain.n_lines();
  std::vector<std::uint32_t> sites(n_particles * lines);
  detail::parallel_chunks(n_particles, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const Trajectory t = sample_trajectory(chain, CounterRng(seed, p));
      std::copy(t.sites.begin(), t.sites.end(), sites.begin() + static_cast<std::ptrdiff_t>(p * lines));
    }
  });
  return TrajectoryEnsemble(seed, n_particles, lines, std::move(sites));
}

}  // namespace pilotwave::markov
