#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pilotwave/config.hpp"
#include "pilotwave/experiment.hpp"
#include "pilotwave/markov.hpp"
#include "pilotwave/verify.hpp"

namespace fs = std::filesystem;
using namespace pilotwave;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

// A readable file wins over a preset of the same name.
config::ExperimentConfig resolve(const std::string& what) {
  std::error_code ec;
  if (fs::is_regular_file(what, ec)) return config::load_file(what);
  for (const auto& p : config::presets()) {
    if (p.name == what) return config::preset(what);
  }
  throw config::ConfigError("config", "'" + what + "' is neither a readable file nor a preset");
}

fs::path output_root() {
  if (const char* env = std::getenv("PILOTWAVE_OUT"); env && *env) return env;
  return "out";
}

fs::path output_dir(const config::ExperimentConfig& c, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (!c.directory.empty()) {
    const fs::path d = c.directory;
    return d.is_absolute() ? d : output_root() / d;
  }
  return output_root() / c.name;
}

int print_report(const verify::Report& report) {
  for (const auto& c : report.checks) {
    std::cout << fmt::format("{} {:<22} residual={:<12.4g} tolerance={:<10.3g} {}\n",
                             c.passed ? "PASS" : "FAIL", c.name, c.residual, c.tolerance,
                             c.detail);
  }
  std::cout << (report.passed() ? "all checks passed\n" : "verification FAILED\n");
  return report.passed() ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pilot-wave trajectories on a space-time lattice"};
  app.require_subcommand(1);

  std::string target;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> particles;
  std::optional<unsigned> threads;
  std::string out;
  bool inject_fault = false;
  std::optional<std::size_t> oracle_instances;

  auto* run = app.add_subcommand("run", "Build the chain, sample trajectories, write artifacts");
  run->add_option("config", target, "Config file or preset name")->required();
  run->add_option("--seed", seed, "Override [ensemble] seed");
  run->add_option("--particles", particles, "Override [ensemble] particles")
      ->check(CLI::PositiveNumber);
  run->add_option("--threads", threads, "Worker threads (0 = all cores)");
  run->add_option("--out", out, "Output directory (default $PILOTWAVE_OUT/<name> or out/<name>)");

  auto* ver = app.add_subcommand("verify", "Check the chain invariants and the exact-solver suites");
  ver->add_option("config", target, "Config file or preset name")->required();
  ver->add_flag("--inject-fault", inject_fault,
                "Perturb one matrix entry by 1e-6 before checking (must fail)");
  ver->add_option("--oracle-instances", oracle_instances, "Override [verify] oracle_instances");
  ver->add_option("--threads", threads, "Worker threads (0 = all cores)");

  auto* pre = app.add_subcommand("presets", "Built-in configurations");
  pre->require_subcommand(1);
  auto* list = pre->add_subcommand("list", "List preset names");
  std::string show_name;
  auto* show = pre->add_subcommand("show", "Print a preset's INI text");
  show->add_option("name", show_name)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& p : config::presets()) {
        std::cout << fmt::format("{:<6} {}\n", p.name, config::preset(p.name).description);
      }
      return 0;
    }
    if (*show) {
      (void)config::preset(show_name);
      for (const auto& p : config::presets()) {
        if (p.name == show_name) std::cout << p.ini;
      }
      return 0;
    }

    auto cfg = resolve(target);
    if (seed) cfg.seed = *seed;
    if (particles) cfg.particles = *particles;
    if (threads) cfg.threads = *threads;

    if (*run) {
      const auto dir = output_dir(cfg, out);
      const auto summary = experiment::run_experiment(cfg, dir, &std::cerr);
      std::cout << fmt::format("manifest: {}\n", summary.manifest.string());
      std::cout << fmt::format("screen TV distance: {:.6g} (N = {})\n", summary.screen_tv,
                               cfg.particles);
      std::cout << fmt::format("P_max: {:.6g}, net edges: {}\n", summary.p_max,
                               summary.net_edges);
      return 0;
    }

    if (oracle_instances) cfg.oracle_instances = *oracle_instances;
    for (const auto& w : config::warnings(cfg)) std::cerr << "warning: " << w << '\n';
    const auto time = cfg.time();
    const auto chain = markov::build_chain(cfg.grid(), cfg.geometry(), time, cfg.n_steps,
                                           cfg.aperture, cfg.threads);
    std::vector<lattice::ProbabilityDistribution> lines(chain.lines().begin(),
                                                        chain.lines().end());
    std::vector<transport::StochasticMatrix> steps(chain.steps().begin(), chain.steps().end());
    if (inject_fault) {
      const std::size_t j = steps.size() / 2;
      const std::size_t row = verify::heaviest_row(steps[j]);
      steps[j] = verify::perturb_entry(steps[j], row, 0, 1e-6);
      std::cout << fmt::format("injected fault: step {}, row {}, first entry moved by 1e-6\n", j,
                               row);
    }
    verify::Options opt;
    if (cfg.cost == config::CostVariant::Relativistic) {
      opt.cost = {transport::CostKind::Relativistic, time.mass(), time.tau()};
    }
    opt.oracle_instances = cfg.oracle_instances;
    opt.random_instances = cfg.random_instances;
    opt.seed = cfg.seed;
    return print_report(verify::verify_chain(lines, steps, opt));
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
