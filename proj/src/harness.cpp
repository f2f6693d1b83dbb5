#include "optionforge/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "optionforge/checkpoint.hpp"
#include "optionforge/oracle.hpp"

namespace optionforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string optional_field(const std::optional<double>& value) { return value ? format_double(*value) : std::string{}; }

std::optional<double> parse_optional(const std::string& field) {
  if (trim(field).empty()) return std::nullopt;
  return parse_double(field);
}

std::vector<std::string> read_csv_rows(std::istream& in, std::string_view header, std::size_t columns) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != header) {
    throw InvalidSpecError("csv: expected header '" + std::string(header) + "'");
  }
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (split(line, ',').size() != columns) throw InvalidSpecError("csv: malformed row '" + line + "'");
    rows.push_back(line);
  }
  return rows;
}

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y%m%d-%H%M%S", &tm);
  return buffer;
}

fs::path unique_directory(const fs::path& root, const std::string& name) {
  fs::create_directories(root);
  const std::string base = name + "-" + timestamp();
  for (std::size_t suffix = 0;; ++suffix) {
    const fs::path candidate = root / (suffix == 0 ? base : base + "-" + std::to_string(suffix));
    // create_directory returns false when the path already exists.
    if (fs::create_directory(candidate)) return candidate;
  }
}

json record_to_json(const RunRecord& r) {
  json j{{"episode", r.episode}};
  auto put = [&j](const char* key, const std::optional<double>& v) { j[key] = v ? json(*v) : json(nullptr); };
  put("mean_r_intrinsic", r.mean_r_intrinsic);
  put("disc_loss", r.disc_loss);
  put("prior_entropy", r.prior_entropy);
  put("empirical_mi", r.empirical_mi);
  put("room0_frac", r.room0_frac);
  put("static_frac", r.static_frac);
  return j;
}

}  // namespace

// --- RunLog CSV --------------------------------------------------------------

void write_runlog_csv(std::ostream& out, const RunLog& log) {
  out << kRunLogHeader << '\n';
  for (const auto& r : log.records) {
    out << r.episode << ',' << optional_field(r.mean_r_intrinsic) << ',' << optional_field(r.disc_loss) << ','
        << optional_field(r.prior_entropy) << ',' << optional_field(r.empirical_mi) << ','
        << optional_field(r.room0_frac) << ',' << optional_field(r.static_frac) << '\n';
  }
}

std::vector<RunRecord> read_runlog_csv(std::istream& in) {
  std::vector<RunRecord> records;
  for (const auto& row : read_csv_rows(in, kRunLogHeader, 7)) {
    const auto f = split(row, ',');
    records.push_back({parse_size(f[0]), parse_optional(f[1]), parse_optional(f[2]), parse_optional(f[3]),
                       parse_optional(f[4]), parse_optional(f[5]), parse_optional(f[6])});
  }
  return records;
}

void write_episodes_csv(std::ostream& out, const RunLog& log) {
  out << kEpisodesHeader << '\n';
  for (const auto& e : log.episodes) {
    out << e.episode << ',' << e.option.value() << ',' << e.start.value() << ',' << e.final_state.value() << ','
        << e.length << ',' << format_double(e.mean_reward) << ',' << format_double(e.disc_loss) << '\n';
  }
}

std::vector<EpisodeStats> read_episodes_csv(std::istream& in) {
  std::vector<EpisodeStats> episodes;
  for (const auto& row : read_csv_rows(in, kEpisodesHeader, 7)) {
    const auto f = split(row, ',');
    episodes.push_back({parse_size(f[0]), OptionId{parse_size(f[1])}, StateId{parse_size(f[2])},
                        StateId{parse_size(f[3])}, parse_size(f[4]), parse_double(f[5]), parse_double(f[6])});
  }
  return episodes;
}

RunLog load_runlog(const fs::path& run_directory) {
  std::ifstream records(run_directory / "runlog.csv");
  std::ifstream episodes(run_directory / "episodes.csv");
  if (!records || !episodes) throw InvalidSpecError("no run log in " + run_directory.string());
  return {read_runlog_csv(records), read_episodes_csv(episodes)};
}

// --- Heat maps ---------------------------------------------------------------

void emit_heatmap_data(std::span<const double> counts, const EnvSpec& env, const fs::path& path) {
  if (counts.size() != env.num_states) {
    throw ContractViolation("emit_heatmap_data: " + std::to_string(counts.size()) + " counts for " +
                            std::to_string(env.num_states) + " states");
  }
  const std::size_t rows = env.layout ? env.layout->rows : 1;
  const std::size_t cols = env.layout ? env.layout->cols : env.num_states;
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  std::vector<double> grid(rows * cols, 0.0);
  for (std::size_t s = 0; s < env.num_states; ++s) {
    const std::size_t cell = env.layout ? env.layout->row_of[s] * cols + env.layout->col_of[s] : s;
    if (total > 0.0) grid[cell] += counts[s] / total;
  }
  auto out = open_for_write(path);
  out << "# total_visits=" << format_double(total) << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out << ',';
      out << format_double(grid[r * cols + c]);
    }
    out << '\n';
  }
}

std::vector<double> read_heatmap_counts(const fs::path& path, const EnvSpec& env) {
  std::ifstream in(path);
  if (!in) throw InvalidSpecError("cannot read heatmap " + path.string());
  std::string line;
  constexpr std::string_view prefix = "# total_visits=";
  if (!std::getline(in, line) || !line.starts_with(prefix)) throw InvalidSpecError("heatmap: missing total line");
  const double total = parse_double(std::string_view(line).substr(prefix.size()));
  const std::size_t cols = env.layout ? env.layout->cols : env.num_states;
  std::vector<double> grid;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != cols) throw InvalidSpecError("heatmap: row has the wrong width");
    for (const auto& f : fields) grid.push_back(parse_double(f));
  }
  const std::size_t rows = env.layout ? env.layout->rows : 1;
  if (grid.size() != rows * cols) throw InvalidSpecError("heatmap: wrong number of rows");
  std::vector<double> counts(env.num_states, 0.0);
  for (std::size_t s = 0; s < env.num_states; ++s) {
    const std::size_t cell = env.layout ? env.layout->row_of[s] * cols + env.layout->col_of[s] : s;
    counts[s] = std::round(grid[cell] * total);
  }
  return counts;
}

// --- Manifests and runs --------------------------------------------------------

ExperimentManifest parse_manifest(const KeyValues& keys) {
  ExperimentManifest manifest;
  KeyValues shared;
  std::map<std::string, KeyValues> overrides;
  for (const auto& [key, value] : keys) {
    if (key == "experiment.name") {
      manifest.name = value;
    } else if (key == "experiment.seeds") {
      for (const auto& item : split(value, ',')) manifest.seeds.push_back(static_cast<std::uint64_t>(parse_size(item)));
    } else if (key == "experiment.output") {
      manifest.output_root = value;
    } else if (key == "experiment.jobs") {
      manifest.jobs = std::max<std::size_t>(1, parse_size(value));
    } else if (key.starts_with("variant.")) {
      const auto rest = key.substr(8);
      const auto dot = rest.find('.');
      if (dot == std::string::npos || dot == 0) throw InvalidSpecError("manifest: malformed variant key '" + key + "'");
      overrides[rest.substr(0, dot)][rest.substr(dot + 1)] = value;
    } else if (key.starts_with("train.") || key.starts_with("env.")) {
      shared[key] = value;
    } else {
      throw InvalidSpecError("manifest: unknown key '" + key + "'");
    }
  }
  if (manifest.name.empty()) throw InvalidSpecError("manifest: experiment.name is required");
  if (manifest.seeds.empty()) throw InvalidSpecError("manifest: experiment.seeds must list at least one seed");
  if (overrides.empty()) overrides["default"] = {};
  for (auto& [name, own] : overrides) {
    KeyValues merged = shared;
    for (const auto& [key, value] : own) merged[key] = value;
    manifest.variants.push_back({name, std::move(merged)});
  }
  return manifest;
}

ExperimentManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidSpecError("cannot read manifest " + path.string());
  return parse_manifest(parse_key_values(in));
}

RunOutcome run_single(const TrainConfig& config, const std::string& variant, const fs::path& directory) {
  RunOutcome outcome{variant, config.seed, directory, false, {}, std::nullopt};
  fs::create_directories(directory);
  {
    auto out = open_for_write(directory / "config.txt");
    write_key_values(out, to_key_values(config));
  }
  Trainer trainer(config);
  try {
    while (!trainer.finished()) {
      trainer.run_episode();
      if (config.checkpoint_every > 0 && trainer.episodes_done() % config.checkpoint_every == 0 && !trainer.finished()) {
        save_checkpoint(directory / ("checkpoint-" + std::to_string(trainer.episodes_done()) + ".json"),
                        trainer.snapshot());
      }
    }
    outcome.ok = true;
  } catch (const NumericalFailure& e) {
    outcome.error = e.what();
  }
  {
    auto out = open_for_write(directory / "runlog.csv");
    write_runlog_csv(out, trainer.log());
  }
  {
    auto out = open_for_write(directory / "episodes.csv");
    write_episodes_csv(out, trainer.log());
  }
  if (!outcome.ok) return outcome;
  save_checkpoint(directory / "checkpoint.json", trainer.snapshot());
  // Occupancy of the trained options, from a stream independent of training.
  Rng rng(config.seed ^ 0x3c6ef372fe94f82bULL);
  const auto rollouts = trainer.sample_rollouts(std::max<std::size_t>(1, config.eval_rollouts), false, rng);
  emit_heatmap_data(occupancy_metrics(rollouts, trainer.env()).state_counts, trainer.env(), directory / "heatmap.csv");
  if (!trainer.log().records.empty()) outcome.final_record = trainer.log().records.back();
  return outcome;
}

std::pair<double, double> mean_and_sd(std::span<const double> values) {
  if (values.empty()) throw ContractViolation("mean_and_sd: no values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

ExperimentResult run_experiment(const ExperimentManifest& manifest) {
  if (manifest.variants.empty() || manifest.seeds.empty()) throw InvalidSpecError("manifest: nothing to run");
  struct Job {
    std::string variant;
    TrainConfig config;
  };
  std::vector<Job> jobs;
  for (const auto& variant : manifest.variants) {
    for (const auto seed : manifest.seeds) {
      KeyValues keys = variant.keys;
      keys["train.seed"] = std::to_string(seed);
      try {
        jobs.push_back({variant.name, config_from_key_values(keys)});
      } catch (const InvalidSpecError& e) {
        throw InvalidSpecError("variant '" + variant.name + "': " + e.what());
      }
    }
  }

  fs::path root = manifest.output_root;
  if (const char* env_root = std::getenv(kOutputRootVariable); env_root && *env_root) root = env_root;
  ExperimentResult result;
  result.directory = unique_directory(root, manifest.name);
  result.runs.resize(jobs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      const fs::path dir = result.directory / job.variant / ("seed-" + std::to_string(job.config.seed));
      try {
        result.runs[i] = run_single(job.config, job.variant, dir);
      } catch (const std::exception& e) {
        result.runs[i] = RunOutcome{job.variant, job.config.seed, dir, false, e.what(), std::nullopt};
      }
    }
  };
  const std::size_t threads = std::min(manifest.jobs, jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  json summary{{"experiment", manifest.name}, {"directory", result.directory.string()}, {"variants", json::object()}};
  bool all_ok = true;
  for (const auto& variant : manifest.variants) {
    json runs = json::array();
    std::map<std::string, std::vector<double>> metrics;
    for (const auto& run : result.runs) {
      if (run.variant != variant.name) continue;
      all_ok = all_ok && run.ok;
      json entry{{"seed", run.seed},
                 {"status", run.ok ? "ok" : "failed"},
                 {"directory", fs::relative(run.directory, result.directory).string()}};
      if (!run.ok) entry["error"] = run.error;
      if (run.final_record) {
        entry["final"] = record_to_json(*run.final_record);
        const auto& r = *run.final_record;
        const std::pair<const char*, std::optional<double>> fields[] = {
            {"mean_r_intrinsic", r.mean_r_intrinsic}, {"disc_loss", r.disc_loss},     {"prior_entropy", r.prior_entropy},
            {"empirical_mi", r.empirical_mi},         {"room0_frac", r.room0_frac},   {"static_frac", r.static_frac}};
        if (run.ok) {
          for (const auto& [name, value] : fields) {
            if (value) metrics[name].push_back(*value);
          }
        }
      }
      runs.push_back(std::move(entry));
    }
    json aggregate = json::object();
    for (const auto& [name, values] : metrics) {
      const auto [mean, sd] = mean_and_sd(values);
      aggregate[name] = {{"mean", mean}, {"sd", sd}, {"n", values.size()}};
    }
    summary["variants"][variant.name] = {{"runs", std::move(runs)}, {"metrics", std::move(aggregate)}};
  }
  summary["status"] = all_ok ? "ok" : "failed";
  {
    auto out = open_for_write(result.directory / "summary.json");
    out << summary.dump(2) << '\n';
  }
  result.summary = std::move(summary);
  result.exit_status = all_ok ? 0 : 1;
  return result;
}

}  // namespace optionforge
