#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "optionforge/env.hpp"
#include "optionforge/text.hpp"
#include "optionforge/trainers.hpp"

namespace optionforge {

inline constexpr std::string_view kRunLogHeader =
    "episode,mean_r_intrinsic,disc_loss,prior_entropy,empirical_mi,room0_frac,static_frac";
inline constexpr std::string_view kEpisodesHeader = "episode,option,start,final_state,length,mean_reward,disc_loss";
inline constexpr const char* kOutputRootVariable = "OPTIONFORGE_OUT";

// RunLog CSV: one row per record, missing metrics as empty fields.
void write_runlog_csv(std::ostream& out, const RunLog& log);
std::vector<RunRecord> read_runlog_csv(std::istream& in);
void write_episodes_csv(std::ostream& out, const RunLog& log);
std::vector<EpisodeStats> read_episodes_csv(std::istream& in);
/// Both CSV files read back into a RunLog.
RunLog load_runlog(const std::filesystem::path& run_directory);

/// Grid-shaped CSV of visit fractions aligned to env.layout (a single row for
/// layout-free environments). The first line is `# total_visits=<n>`.
void emit_heatmap_data(std::span<const double> counts, const EnvSpec& env, const std::filesystem::path& path);
/// Reads a heatmap file back into per-state visit counts.
std::vector<double> read_heatmap_counts(const std::filesystem::path& path, const EnvSpec& env);

struct ExperimentVariant {
  std::string name;
  KeyValues keys;
};

struct ExperimentManifest {
  std::string name;
  std::vector<ExperimentVariant> variants;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_root = "runs";
  std::size_t jobs = 1;
};

// Manifest text: experiment.name, experiment.seeds (comma list),
// experiment.output, experiment.jobs; shared train./env. keys; per-variant
// overrides as variant.<name>.<key>. Without variant keys a single variant
// named "default" runs.
ExperimentManifest parse_manifest(const KeyValues& keys);
ExperimentManifest load_manifest(const std::filesystem::path& path);

struct RunOutcome {
  std::string variant;
  std::uint64_t seed = 0;
  std::filesystem::path directory;
  bool ok = false;
  std::string error;
  std::optional<RunRecord> final_record;
};

struct ExperimentResult {
  std::filesystem::path directory;
  std::vector<RunOutcome> runs;
  nlohmann::json summary;
  /// 0 when every run succeeded, 1 when any run failed.
  int exit_status = 0;
};

/// Runs every (variant, seed) pair into a fresh timestamped directory under
/// the output root ($OPTIONFORGE_OUT overrides the manifest). Invalid
/// configurations throw InvalidSpecError before any run starts.
ExperimentResult run_experiment(const ExperimentManifest& manifest);

/// Runs one configuration into `directory`: runlog.csv, episodes.csv,
/// config.txt, checkpoint.json (plus periodic checkpoints) and heatmap.csv.
RunOutcome run_single(const TrainConfig& config, const std::string& variant, const std::filesystem::path& directory);

/// Mean and sample standard deviation (0 for a single value).
std::pair<double, double> mean_and_sd(std::span<const double> values);

/// Command-line entry point: run | eval | oracle mi | oracle capacity | report.
/// Exit codes: 0 success, 1 numerical failure in a run, 2 invalid input.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace optionforge
