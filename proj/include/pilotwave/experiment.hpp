#pragma once

// End-to-end run of a configured experiment: chain, ensemble, analysis and
// the CSV/JSON artifacts that hold the data behind each figure.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pilotwave/config.hpp"

namespace pilotwave::experiment {

inline constexpr std::string_view kVersion = "1.0.0";

struct WrittenFile {
  std::string name;
  std::string kind;
  std::size_t rows = 0;
  std::size_t bytes = 0;
};

/// The only path through which a run touches the output directory, so the
/// manifest always lists exactly the files that were written.
class OutputWriter {
 public:
  /// Creates the directory if needed.
  explicit OutputWriter(std::filesystem::path directory);

  const std::filesystem::path& directory() const noexcept { return dir_; }

  /// Writes `content` to directory/name (name may not contain a separator)
  /// and records it. Throws std::runtime_error on I/O failure or a repeated
  /// name.
  void write(const std::string& name, std::string_view kind, const std::string& content,
             std::size_t rows);
  void warn(std::string message);

  std::vector<WrittenFile> files() const;
  std::vector<std::string> warnings() const;

  /// Writes manifest.json: `header` fields, then files and warnings.
  std::filesystem::path finish(nlohmann::ordered_json header);

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::vector<WrittenFile> files_;
  std::vector<std::string> warnings_;
  bool finished_ = false;
};

struct RunSummary {
  std::filesystem::path directory;
  std::filesystem::path manifest;
  std::vector<WrittenFile> files;
  std::vector<std::string> warnings;
  double screen_tv = 0.0;
  double p_max = 0.0;
  std::size_t net_edges = 0;
  double max_pushforward_residual = 0.0;
  double max_row_residual = 0.0;
};

/// Builds the chain, samples the ensemble and writes the requested artifacts
/// plus manifest.json into `directory`. Progress goes to `log` (may be null).
/// Failures are rethrown as std::runtime_error prefixed with the stage.
RunSummary run_experiment(const config::ExperimentConfig& config,
                          const std::filesystem::path& directory, std::ostream* log = nullptr);

/// Shortest round-trip decimal form used by every CSV.
std::string format_number(double v);

}  // namespace pilotwave::experiment
