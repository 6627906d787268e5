#pragma once

// Experiment configuration: INI text with sections, validated into a typed
// struct. Presets for the slit figures are compiled into the library.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pilotwave/lattice.hpp"
#include "pilotwave/wavefield.hpp"

namespace pilotwave::config {

/// Invalid configuration; `field()` is "section.key".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class CostVariant { Quadratic, Relativistic };

enum class Artifact {
  Distributions,
  Matrices,
  Net,
  Trajectories,
  Histogram,
  Region,
  Transport,
  TotalVariation,
};

std::string_view artifact_name(Artifact a) noexcept;
std::vector<Artifact> all_artifacts();

struct ExperimentConfig {
  std::string name = "experiment";
  std::string description;

  // [geometry]
  double slit_width = 1e-4;
  double slit_separation = 3e-4;

  // [wave] either wavelength (mass optional), or mass and v_y
  std::optional<double> wavelength;
  std::optional<double> mass;
  std::optional<double> v_y;

  // [grid]
  double x_min = -1.5e-3;
  double x_max = 1.5e-3;
  std::size_t n_sites = 2001;
  wavefield::ApertureAlignment aperture = wavefield::ApertureAlignment::FullyCovered;

  // [propagation]
  double screen_y = 0.01;
  std::size_t n_steps = 100;

  // [ensemble]
  std::size_t particles = 60000;
  std::uint64_t seed = 1;
  unsigned threads = 0;

  // [output]
  std::string directory;
  std::vector<Artifact> artifacts = all_artifacts();
  std::size_t trajectory_sample = 60;

  // [transport]
  CostVariant cost = CostVariant::Quadratic;

  // [analysis]
  double net_threshold = 1e-6;
  std::optional<double> final_x;

  // [verify]
  std::size_t oracle_instances = 500;
  std::size_t random_instances = 1000;

  wavefield::SlitGeometry geometry() const { return {slit_width, slit_separation}; }
  lattice::GridPtr grid() const { return lattice::make_grid(x_min, x_max, n_sites); }
  double dy() const noexcept { return screen_y / static_cast<double>(n_steps); }
  /// tau, v_y and mass from the wave section; dy = screen_y / n_steps.
  lattice::TimeParameters time() const;
  bool wants(Artifact a) const noexcept;
};

/// Parses INI text. Unknown sections or keys, malformed numbers and
/// inconsistent combinations raise ConfigError naming the field.
ExperimentConfig parse(std::string_view ini_text);
/// Reads and parses a file.
ExperimentConfig load_file(const std::string& path);

/// Canonical INI text for a config (round-trips through parse).
std::string to_ini(const ExperimentConfig& config);

/// Non-fatal findings: grid too narrow for the tails, relativistic cost near
/// the light cone, slit narrower than a few sites.
std::vector<std::string> warnings(const ExperimentConfig& config);

struct Preset {
  std::string_view name;
  std::string_view ini;
};
const std::vector<Preset>& presets();
/// Throws ConfigError("preset", ...) for an unknown name.
ExperimentConfig preset(std::string_view name);

}  // namespace pilotwave::config
