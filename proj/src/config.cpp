#include "pilotwave/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "presets_data.hpp"

namespace pilotwave::config {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"meta", {"name", "description"}},
      {"geometry", {"slit_width", "slit_separation"}},
      {"wave", {"wavelength", "mass", "v_y"}},
      {"grid", {"x_min", "x_max", "n_sites", "aperture"}},
      {"propagation", {"screen_y", "n_steps"}},
      {"ensemble", {"particles", "seed", "threads"}},
      {"output", {"directory", "artifacts", "trajectory_sample"}},
      {"transport", {"cost"}},
      {"analysis", {"net_threshold", "final_x"}},
      {"verify", {"oracle_instances", "random_instances"}},
  };
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& field, const std::string& raw) {
  const std::string v = trim(raw);
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc() || ptr != end || !std::isfinite(out)) {
    throw ConfigError(field, "expected a finite number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_unsigned(const std::string& field, const std::string& raw) {
  const std::string v = trim(raw);
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(field, "expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

std::string fmt_double(double v) { return fmt::format("{}", v); }

}  // namespace

std::string_view artifact_name(Artifact a) noexcept {
  switch (a) {
    case Artifact::Distributions: return "distributions";
    case Artifact::Matrices: return "matrices";
    case Artifact::Net: return "net";
    case Artifact::Trajectories: return "trajectories";
    case Artifact::Histogram: return "histogram";
    case Artifact::Region: return "region";
    case Artifact::Transport: return "transport";
    case Artifact::TotalVariation: return "tv";
  }
  return "unknown";
}

std::vector<Artifact> all_artifacts() {
  return {Artifact::Distributions, Artifact::Matrices,  Artifact::Net,
          Artifact::Trajectories,  Artifact::Histogram, Artifact::Region,
          Artifact::Transport,     Artifact::TotalVariation};
}

lattice::TimeParameters ExperimentConfig::time() const {
  if (wavelength) {
    return lattice::TimeParameters::from_wavelength(*wavelength, dy(),
                                                    mass.value_or(lattice::kElectronMass));
  }
  return lattice::TimeParameters(dy() / *v_y, *v_y, *mass);
}

bool ExperimentConfig::wants(Artifact a) const noexcept {
  return std::find(artifacts.begin(), artifacts.end(), a) != artifacts.end();
}

ExperimentConfig parse(std::string_view ini_text) {
  pt::ptree tree;
  std::istringstream in{std::string(ini_text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("ini", fmt::format("line {}: {}", e.line(), e.message()));
  }

  for (const auto& [section, keys] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError(section, "unknown section");
    if (!keys.data().empty()) throw ConfigError(section, "expected a [section]");
    for (const auto& [key, value] : keys) {
      if (!it->second.count(key)) throw ConfigError(section + "." + key, "unknown key");
    }
  }

  ExperimentConfig c;
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    const auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'));
    if (!v) return std::nullopt;
    return trim(*v);
  };
  auto number = [&](const std::string& path, double& out) {
    if (auto v = get(path)) out = to_double(path, *v);
  };
  auto optional_number = [&](const std::string& path, std::optional<double>& out) {
    if (auto v = get(path)) out = to_double(path, *v);
  };
  auto count = [&](const std::string& path, std::size_t& out) {
    if (auto v = get(path)) out = static_cast<std::size_t>(to_unsigned(path, *v));
  };

  if (auto v = get("meta.name")) c.name = *v;
  if (auto v = get("meta.description")) c.description = *v;
  require(!c.name.empty() && c.name.find_first_of("/\\") == std::string::npos, "meta.name",
          "must be a non-empty name without path separators");

  number("geometry.slit_width", c.slit_width);
  number("geometry.slit_separation", c.slit_separation);
  require(c.slit_width > 0, "geometry.slit_width", "must be positive");
  require(c.slit_separation >= 0, "geometry.slit_separation", "must be nonnegative");
  require(c.slit_separation == 0 || c.slit_separation > c.slit_width, "geometry.slit_separation",
          "must exceed slit_width so the slits do not overlap");

  optional_number("wave.wavelength", c.wavelength);
  optional_number("wave.mass", c.mass);
  optional_number("wave.v_y", c.v_y);
  if (c.wavelength) {
    require(*c.wavelength > 0, "wave.wavelength", "must be positive");
    require(!c.v_y, "wave.v_y", "give either wavelength or (mass, v_y), not both");
  } else {
    require(c.v_y.has_value(), "wave.wavelength", "missing: give wavelength or (mass, v_y)");
    require(c.mass.has_value(), "wave.mass", "required together with v_y");
    require(*c.v_y > 0, "wave.v_y", "must be positive");
  }
  if (c.mass) require(*c.mass > 0, "wave.mass", "must be positive");

  number("grid.x_min", c.x_min);
  number("grid.x_max", c.x_max);
  count("grid.n_sites", c.n_sites);
  require(c.x_max > c.x_min, "grid.x_max", "must exceed x_min");
  require(c.n_sites >= 2, "grid.n_sites", "must be at least 2");
  require(c.n_sites <= (std::size_t{1} << 31), "grid.n_sites", "too large");
  if (auto v = get("grid.aperture")) {
    if (*v == "fully_covered") {
      c.aperture = wavefield::ApertureAlignment::FullyCovered;
    } else if (*v == "site_center") {
      c.aperture = wavefield::ApertureAlignment::SiteCenter;
    } else {
      throw ConfigError("grid.aperture", "expected fully_covered or site_center, got '" + *v + "'");
    }
  }

  number("propagation.screen_y", c.screen_y);
  count("propagation.n_steps", c.n_steps);
  require(c.screen_y > 0, "propagation.screen_y", "must be positive");
  require(c.n_steps >= 1, "propagation.n_steps", "must be at least 1");

  count("ensemble.particles", c.particles);
  if (auto v = get("ensemble.seed")) c.seed = to_unsigned("ensemble.seed", *v);
  if (auto v = get("ensemble.threads")) {
    const auto t = to_unsigned("ensemble.threads", *v);
    require(t <= 4096, "ensemble.threads", "too large");
    c.threads = static_cast<unsigned>(t);
  }
  require(c.particles >= 1, "ensemble.particles", "must be at least 1");

  if (auto v = get("output.directory")) c.directory = *v;
  if (auto v = get("output.artifacts")) {
    c.artifacts.clear();
    std::istringstream list(*v);
    std::string item;
    while (std::getline(list, item, ',')) {
      item = trim(item);
      if (item == "all") {
        c.artifacts = all_artifacts();
        continue;
      }
      bool known = false;
      for (Artifact a : all_artifacts()) {
        if (artifact_name(a) == item) {
          if (!c.wants(a)) c.artifacts.push_back(a);
          known = true;
        }
      }
      require(known, "output.artifacts", "unknown artifact '" + item + "'");
    }
    std::sort(c.artifacts.begin(), c.artifacts.end());
  }
  count("output.trajectory_sample", c.trajectory_sample);

  if (auto v = get("transport.cost")) {
    if (*v == "quadratic") {
      c.cost = CostVariant::Quadratic;
    } else if (*v == "relativistic") {
      c.cost = CostVariant::Relativistic;
    } else {
      throw ConfigError("transport.cost", "expected quadratic or relativistic, got '" + *v + "'");
    }
  }

  number("analysis.net_threshold", c.net_threshold);
  require(c.net_threshold > 0 && c.net_threshold < 1, "analysis.net_threshold",
          "must lie in (0, 1)");
  optional_number("analysis.final_x", c.final_x);
  if (c.final_x) {
    require(*c.final_x >= c.x_min && *c.final_x <= c.x_max, "analysis.final_x",
            "must lie on the grid");
  }

  count("verify.oracle_instances", c.oracle_instances);
  count("verify.random_instances", c.random_instances);

  try {
    (void)c.time();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("wave", e.what());
  }
  return c;
}

ExperimentConfig load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("file", "cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

std::string to_ini(const ExperimentConfig& c) {
  std::string out;
  auto line = [&](std::string_view key, const std::string& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  out += "[meta]\n";
  line("name", c.name);
  if (!c.description.empty()) line("description", c.description);
  out += "\n[geometry]\n";
  line("slit_width", fmt_double(c.slit_width));
  line("slit_separation", fmt_double(c.slit_separation));
  out += "\n[wave]\n";
  if (c.wavelength) line("wavelength", fmt_double(*c.wavelength));
  if (c.mass) line("mass", fmt_double(*c.mass));
  if (c.v_y) line("v_y", fmt_double(*c.v_y));
  out += "\n[grid]\n";
  line("x_min", fmt_double(c.x_min));
  line("x_max", fmt_double(c.x_max));
  line("n_sites", std::to_string(c.n_sites));
  line("aperture", c.aperture == wavefield::ApertureAlignment::FullyCovered ? "fully_covered"
                                                                           : "site_center");
  out += "\n[propagation]\n";
  line("screen_y", fmt_double(c.screen_y));
  line("n_steps", std::to_string(c.n_steps));
  out += "\n[ensemble]\n";
  line("particles", std::to_string(c.particles));
  line("seed", std::to_string(c.seed));
  line("threads", std::to_string(c.threads));
  out += "\n[output]\n";
  if (!c.directory.empty()) line("directory", c.directory);
  std::string names;
  for (Artifact a : c.artifacts) {
    if (!names.empty()) names += ", ";
    names += artifact_name(a);
  }
  line("artifacts", names);
  line("trajectory_sample", std::to_string(c.trajectory_sample));
  out += "\n[transport]\n";
  line("cost", c.cost == CostVariant::Quadratic ? "quadratic" : "relativistic");
  out += "\n[analysis]\n";
  line("net_threshold", fmt_double(c.net_threshold));
  if (c.final_x) line("final_x", fmt_double(*c.final_x));
  out += "\n[verify]\n";
  line("oracle_instances", std::to_string(c.oracle_instances));
  line("random_instances", std::to_string(c.random_instances));
  return out;
}

std::vector<std::string> warnings(const ExperimentConfig& c) {
  std::vector<std::string> out;
  const auto grid = c.grid();
  const auto t = c.time();

  const double cells = c.slit_width / grid->spacing();
  if (cells < 3.0) {
    out.push_back(fmt::format("slit width spans only {:.3g} grid cells", cells));
  }
  if (c.slit_separation / 2 + c.slit_width / 2 > std::max(-c.x_min, c.x_max)) {
    out.push_back("slits extend beyond the grid");
  }

  const auto screen =
      wavefield::line_distribution(grid, c.screen_y, c.geometry(), t.wavelength(), c.aperture);
  const double peak = screen.max_weight();
  const double edge = std::max(screen[0], screen[screen.size() - 1]);
  if (peak > 0 && edge / peak >= 1e-9) {
    out.push_back(fmt::format(
        "boundary site weight is {:.3g} of the maximum on the screen line (want < 1e-9); "
        "widen the grid to reduce tail truncation",
        edge / peak));
  }

  if (c.cost == CostVariant::Relativistic) {
    const double beta = (c.x_max - c.x_min) / (lattice::kSpeedOfLight * t.tau());
    if (beta >= 1.0) {
      out.push_back(fmt::format(
          "largest jump reaches {:.3g} c; transitions beyond the light cone get infinite cost",
          beta));
    }
  }
  return out;
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> list = [] {
    std::vector<Preset> v;
    for (const auto& p : detail::kPresetTable) v.push_back({p.first, p.second});
    return v;
  }();
  return list;
}

ExperimentConfig preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) return parse(p.ini);
  }
  std::string known;
  for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + std::string(p.name);
  throw ConfigError("preset", "unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace pilotwave::config
