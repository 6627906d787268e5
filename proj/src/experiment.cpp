#include "pilotwave/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "pilotwave/analysis.hpp"
#include "pilotwave/markov.hpp"
#include "pilotwave/transport.hpp"

namespace pilotwave::experiment {

namespace fs = std::filesystem;
using config::Artifact;
using config::ExperimentConfig;

std::string format_number(double v) { return fmt::format("{}", v); }

OutputWriter::OutputWriter(fs::path directory) : dir_(std::move(directory)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) {
    throw std::runtime_error("cannot create output directory '" + dir_.string() +
                             "': " + ec.message());
  }
}

void OutputWriter::write(const std::string& name, std::string_view kind,
                         const std::string& content, std::size_t rows) {
  if (name.empty() || name.find_first_of("/\\") != std::string::npos || name == "manifest.json") {
    throw std::runtime_error("invalid output file name '" + name + "'");
  }
  std::lock_guard lock(mutex_);
  if (finished_) throw std::runtime_error("writer already finished");
  for (const auto& f : files_) {
    if (f.name == name) throw std::runtime_error("output file '" + name + "' written twice");
  }
  std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + (dir_ / name).string() + "'");
  files_.push_back(WrittenFile{name, std::string(kind), rows, content.size()});
}

void OutputWriter::warn(std::string message) {
  std::lock_guard lock(mutex_);
  warnings_.push_back(std::move(message));
}

std::vector<WrittenFile> OutputWriter::files() const {
  std::lock_guard lock(mutex_);
  return files_;
}

std::vector<std::string> OutputWriter::warnings() const {
  std::lock_guard lock(mutex_);
  return warnings_;
}

fs::path OutputWriter::finish(nlohmann::ordered_json header) {
  std::lock_guard lock(mutex_);
  if (finished_) throw std::runtime_error("writer already finished");
  auto files = nlohmann::ordered_json::array();
  for (const auto& f : files_) {
    files.push_back({{"name", f.name}, {"kind", f.kind}, {"rows", f.rows}, {"bytes", f.bytes}});
  }
  header["files"] = std::move(files);
  header["warnings"] = warnings_;
  const fs::path path = dir_ / "manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << header.dump(2) << '\n';
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
  finished_ = true;
  return path;
}

namespace {

void say(std::ostream* log, const std::string& text) {
  if (log) *log << text << '\n' << std::flush;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::ordered_json config_echo(const ExperimentConfig& c) {
  nlohmann::ordered_json echo = nlohmann::ordered_json::object();
  std::istringstream in(config::to_ini(c));
  std::string line;
  std::string section;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line.substr(1, line.size() - 2);
      echo[section] = nlohmann::ordered_json::object();
      continue;
    }
    const auto eq = line.find(" = ");
    echo[section][line.substr(0, eq)] = line.substr(eq + 3);
  }
  return echo;
}

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(name) + ": " + e.what());
  }
}

struct Csv {
  std::string text;
  std::size_t rows = 0;
  explicit Csv(std::string_view header) : text(header) { text += '\n'; }
  template <class... Args>
  void row(fmt::format_string<Args...> f, Args&&... args) {
    fmt::format_to(std::back_inserter(text), f, std::forward<Args>(args)...);
    text += '\n';
    ++rows;
  }
};

}  // namespace

RunSummary run_experiment(const ExperimentConfig& c, const fs::path& directory,
                          std::ostream* log) {
  OutputWriter writer(directory);
  for (auto& w : config::warnings(c)) {
    say(log, "warning: " + w);
    writer.warn(std::move(w));
  }

  const auto time = c.time();
  const auto grid = c.grid();
  say(log, fmt::format("building chain: {} sites, {} steps, dy = {} m", grid->size(), c.n_steps,
                       format_number(c.dy())));
  const auto chain = stage("building chain", [&] {
    return markov::build_chain(grid, c.geometry(), time, c.n_steps, c.aperture, c.threads);
  });
  const std::size_t last = chain.n_lines() - 1;

  say(log, fmt::format("sampling {} trajectories (seed {})", c.particles, c.seed));
  const auto ensemble =
      stage("sampling ensemble", [&] { return markov::run_ensemble(chain, c.particles, c.seed, c.threads); });

  auto cost_for = [&](std::size_t j) {
    const auto& from = chain.line(j).grid_ptr();
    const auto& to = chain.line(j + 1).grid_ptr();
    return c.cost == config::CostVariant::Relativistic
               ? transport::CostMatrix::relativistic(from, to, time.mass(), time.tau())
               : transport::CostMatrix::quadratic(from, to);
  };

  RunSummary summary;
  summary.max_pushforward_residual = chain.max_pushforward_residual();
  summary.max_row_residual = chain.max_row_residual();

  if (c.wants(Artifact::Distributions)) {
    Csv csv("line,y,x,p");
    for (std::size_t j = 0; j < chain.n_lines(); ++j) {
      const auto& p = chain.line(j);
      const auto y = format_number(chain.y(j));
      for (std::size_t i = 0; i < p.size(); ++i) {
        csv.row("{},{},{},{}", j, y, format_number(p.grid().position(i)), format_number(p[i]));
      }
    }
    writer.write("distributions.csv", "distributions", csv.text, csv.rows);
  }

  if (c.wants(Artifact::Matrices)) {
    Csv csv("line,i,k,prob");
    for (std::size_t j = 0; j < chain.n_steps(); ++j) {
      const auto& m = chain.step(j);
      for (std::size_t i = 0; i < m.n_sources(); ++i) {
        for (const auto& e : m.row(i)) {
          csv.row("{},{},{},{}", j, i, e.target, format_number(e.probability));
        }
      }
    }
    writer.write("matrices.csv", "matrices", csv.text, csv.rows);
  }

  {
    const auto net = stage("transition net", [&] { return analysis::transition_net(chain, c.net_threshold); });
    summary.p_max = net.p_max;
    summary.net_edges = net.edges.size();
    if (c.wants(Artifact::Net)) {
      Csv csv("step,x_source,x_target,total_probability,relative,band");
      for (const auto& e : net.edges) {
        csv.row("{},{},{},{},{},{}", e.step,
                format_number(chain.line(e.step).grid().position(e.source)),
                format_number(chain.line(e.step + 1).grid().position(e.target)),
                format_number(e.total), format_number(e.total / net.p_max),
                analysis::band_name(e.band));
      }
      writer.write("net.csv", "net", csv.text, csv.rows);
    }
  }

  if (c.wants(Artifact::Trajectories)) {
    Csv csv("pid,line,x,y");
    const std::size_t n = std::min(c.trajectory_sample, ensemble.size());
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t j = 0; j < ensemble.n_lines(); ++j) {
        csv.row("{},{},{},{}", p, j,
                format_number(chain.line(j).grid().position(ensemble.site(p, j))),
                format_number(chain.y(j)));
      }
    }
    writer.write("trajectories.csv", "trajectories", csv.text, csv.rows);
  }

  {
    const auto& screen = chain.line(last);
    const auto counts = analysis::screen_histogram(ensemble, last, screen.grid());
    summary.screen_tv = analysis::tv_distance(counts, screen);
    if (c.wants(Artifact::Histogram)) {
      Csv csv("x,count,theory,theory_density");
      const double n = static_cast<double>(ensemble.size());
      const double dx = screen.grid().spacing();
      for (std::size_t i = 0; i < screen.size(); ++i) {
        csv.row("{},{},{},{}", format_number(screen.grid().position(i)), counts[i],
                format_number(n * screen[i]), format_number(screen[i] / dx));
      }
      writer.write("histogram.csv", "histogram", csv.text, csv.rows);
    }
  }

  if (c.wants(Artifact::TotalVariation)) {
    Csv csv("line,y,tv");
    for (std::size_t j = 0; j < chain.n_lines(); ++j) {
      const auto& p = chain.line(j);
      const auto counts = analysis::screen_histogram(ensemble, j, p.grid());
      csv.row("{},{},{}", j, format_number(chain.y(j)),
              format_number(analysis::tv_distance(counts, p)));
    }
    writer.write("tv.csv", "tv", csv.text, csv.rows);
  }

  if (c.wants(Artifact::Transport)) {
    Csv csv("step,average_action,w2,total_msd,global_jump_action,nonzeros");
    for (std::size_t j = 0; j < chain.n_steps(); ++j) {
      stage(fmt::format("transport report, step {}", j).c_str(), [&] {
        const auto cost = cost_for(j);
        const auto& from = chain.line(j);
        const auto& to = chain.line(j + 1);
        const auto rep = transport::msd_report(chain.step(j), from, from.grid(), to.grid());
        csv.row("{},{},{},{},{},{}", j,
                format_number(transport::average_action(chain.step(j), from, cost)),
                format_number(transport::wasserstein(from, to, 2.0)),
                format_number(rep.total_msd),
                format_number(analysis::global_jump_action(from, to, cost)), rep.nonzeros);
        return 0;
      });
    }
    writer.write("transport.csv", "transport", csv.text, csv.rows);
  }

  if (c.wants(Artifact::Region)) {
    const auto& screen = chain.line(last);
    std::uint32_t site = 0;
    if (c.final_x) {
      site = static_cast<std::uint32_t>(screen.grid().nearest(*c.final_x));
    } else {
      const auto w = screen.weights();
      site = static_cast<std::uint32_t>(std::max_element(w.begin(), w.end()) - w.begin());
    }
    const auto region =
        stage("backward region", [&] { return analysis::backward_reachable(chain, site); });
    Csv csv("line,site,x,reachable");
    for (std::size_t j = 0; j < chain.n_lines(); ++j) {
      const auto& g = chain.line(j).grid();
      std::vector<char> mark(g.size(), 0);
      for (auto s : region[j]) mark[s] = 1;
      for (std::size_t i = 0; i < g.size(); ++i) {
        csv.row("{},{},{},{}", j, i, format_number(g.position(i)), int(mark[i]));
      }
    }
    writer.write("region.csv", "region", csv.text, csv.rows);
  }

  nlohmann::ordered_json header;
  header["name"] = c.name;
  header["version"] = kVersion;
  header["seed"] = c.seed;
  header["particles"] = c.particles;
  header["timestamp"] = utc_timestamp();
  header["config"] = config_echo(c);
  header["derived"] = {{"dy", c.dy()},
                       {"tau", time.tau()},
                       {"v_y", time.v_y()},
                       {"mass", time.mass()},
                       {"wavelength", time.wavelength()},
                       {"grid_spacing", grid->spacing()}};
  header["summary"] = {{"screen_tv", summary.screen_tv},
                       {"p_max", summary.p_max},
                       {"net_edges", summary.net_edges},
                       {"max_pushforward_residual", summary.max_pushforward_residual},
                       {"max_row_residual", summary.max_row_residual}};

  summary.files = writer.files();
  summary.warnings = writer.warnings();
  summary.manifest = writer.finish(std::move(header));
  summary.directory = directory;
  say(log, fmt::format("wrote {} files and manifest.json to {}", summary.files.size(),
                       directory.string()));
  return summary;
}

}  // namespace pilotwave::experiment
