#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedmrl/data.hpp"
#include "fedmrl/federation.hpp"

namespace fedmrl {

inline constexpr int kExperimentSchemaVersion = 1;

enum class DatasetSource { Synthetic, Csv };
enum class PartitionKind { ClassCount, Dirichlet };
enum class ReportFormat { Csv, Json, Both };

/// File form of one experiment. See docs/formats.md for every key.
struct ExperimentConfig {
  std::string name = "experiment";

  DatasetSource source = DatasetSource::Synthetic;
  std::filesystem::path csv_path;
  std::size_t classes = 10;
  std::size_t input_dim = 32;
  std::size_t per_class = 100;
  double spread = 1.0;
  std::optional<std::uint64_t> data_seed;  // defaults to run.seed
  bool standardize = false;

  PartitionKind partition = PartitionKind::ClassCount;
  std::size_t classes_per_client = 2;
  double alpha = 0.5;

  RunConfig run;

  std::filesystem::path out_dir = "out";
  ReportFormat format = ReportFormat::Both;
  std::optional<double> target_accuracy;

  /// key -> values; each combination is one run. Only sweepable keys.
  std::vector<std::pair<std::string, std::vector<std::string>>> sweeps;
};

/// Keys that may take comma lists / --sweep values.
bool is_sweepable_key(std::string_view key);

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, missing
/// required keys (`schema_version`) and bad values throw ConfigError naming
/// the line.
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Applies one `key = value` assignment; shared by the parser and sweeps.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);

struct ExperimentOverrides {
  std::optional<TrainingMode> mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  std::vector<std::string> sweeps;  // "key=v1,v2,..."
};

void apply_overrides(ExperimentConfig& cfg, const ExperimentOverrides& ov);

struct ExperimentRun {
  std::vector<std::pair<std::string, std::string>> assignment;  // sweep values for this run
  std::uint64_t partition_hash = 0;
  std::vector<RoundReport> reports;
  std::vector<std::filesystem::path> files;
};

/// Builds dataset -> partition -> split -> training -> export for every sweep
/// combination. Output files are `<out>/<name>[_<key>-<value>...].{csv,json}`.
std::vector<ExperimentRun> run_experiment(const ExperimentConfig& cfg);

/// CLI entry: load, override, run. Returns 0 on success, 2 on configuration
/// errors and 1 on any other failure; messages go to `err`.
int run_experiment(const std::filesystem::path& config_path, const ExperimentOverrides& ov,
                   std::ostream& out, std::ostream& err);

}  // namespace fedmrl
