#include <CLI11.hpp>

#include <fstream>
#include <numeric>
#include <ostream>

#include "optionforge/checkpoint.hpp"
#include "optionforge/harness.hpp"
#include "optionforge/oracle.hpp"

namespace optionforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// A checkpoint when the file parses as JSON, a key-value config otherwise.
Trainer trainer_from_path(const fs::path& path) {
  if (path.extension() == ".json") return Trainer(load_checkpoint(path));
  std::ifstream in(path);
  if (!in) throw InvalidSpecError("cannot read config " + path.string());
  return Trainer(config_from_key_values(parse_key_values(in)));
}

StateId start_state(const Trainer& trainer, std::optional<std::size_t> s0) {
  if (!s0) return trainer.env().initial_state;
  if (*s0 >= trainer.env().num_states) throw InvalidSpecError("--s0 out of range");
  return StateId{*s0};
}

int command_run(const std::string& manifest_path, std::optional<std::size_t> jobs, std::ostream& out) {
  auto manifest = load_manifest(manifest_path);
  if (jobs) manifest.jobs = std::max<std::size_t>(1, *jobs);
  const auto result = run_experiment(manifest);
  for (const auto& run : result.runs) {
    out << run.variant << " seed=" << run.seed << ' ' << (run.ok ? "ok" : "FAILED");
    if (!run.ok) out << " (" << run.error << ')';
    out << '\n';
  }
  out << "results: " << result.directory.string() << '\n';
  return result.exit_status;
}

int command_eval(const std::string& checkpoint_path, std::size_t episodes, bool greedy, std::uint64_t seed,
                 std::ostream& out) {
  Trainer trainer(load_checkpoint(checkpoint_path));
  Rng rng(seed);
  const auto rollouts = trainer.sample_rollouts(episodes, greedy, rng);
  std::vector<std::pair<OptionId, StateId>> samples;
  double total_return = 0.0;
  double per_step = 0.0;
  std::size_t steps = 0;
  for (const auto& t : rollouts) {
    samples.emplace_back(t.option, t.final_state);
    total_return += t.intrinsic_return;
    const auto rewards = trainer.step_rewards(t);
    per_step += std::accumulate(rewards.begin(), rewards.end(), 0.0);
    steps += t.length();
  }
  const auto occ = occupancy_metrics(rollouts, trainer.env());
  Rng greedy_rng(seed + 1);
  json report{{"episodes", episodes},
              {"greedy", greedy},
              {"mean_intrinsic_return", total_return / static_cast<double>(episodes)},
              {"empirical_mi", empirical_mi(samples, trainer.config().num_options, trainer.env().num_states)},
              {"static_frac", detect_static_collapse(trainer.greedy_rollouts(greedy_rng))},
              {"coverage", occ.coverage}};
  if (trainer.config().algorithm == Algorithm::diayn && steps > 0) {
    report["mean_step_reward"] = per_step / static_cast<double>(steps);
  }
  if (!occ.room_fractions.empty()) report["room_fractions"] = occ.room_fractions;
  out << report.dump(2) << '\n';
  return 0;
}

int command_oracle_mi(const std::string& path, std::optional<std::size_t> s0_arg, std::ostream& out) {
  const Trainer trainer = trainer_from_path(path);
  const StateId s0 = start_state(trainer, s0_arg);
  const std::size_t horizon = trainer.config().effective_horizon();
  const auto joint = exact_joint(trainer.env(), trainer.policy(), trainer.prior(), s0, horizon);
  json report{{"s0", s0.value()},
              {"horizon", horizon},
              {"exact_mi", joint.mi_state_form()},
              {"exact_mi_option_form", joint.mi_option_form()},
              {"max_possible", std::log(static_cast<double>(std::min(trainer.config().num_options,
                                                                       trainer.env().num_states)))}};
  out << report.dump(2) << '\n';
  return 0;
}

int command_oracle_capacity(const std::string& path, std::optional<std::size_t> s0_arg, double tolerance,
                            std::ostream& out) {
  const Trainer trainer = trainer_from_path(path);
  const StateId s0 = start_state(trainer, s0_arg);
  const std::size_t horizon = trainer.config().effective_horizon();
  const auto best = optimal_prior(trainer.env(), trainer.policy(), s0, horizon, tolerance);
  const double uniform_mi =
      exact_mi(trainer.env(), trainer.policy(), OptionPrior::uniform(trainer.config().num_options), s0, horizon);
  json report{{"s0", s0.value()},
              {"horizon", horizon},
              {"capacity", best.capacity},
              {"uniform_prior_mi", uniform_mi},
              {"prior", best.details.prior},
              {"iterations", best.details.iterations},
              {"upper_bound_gap", best.details.upper_bound_gap}};
  out << report.dump(2) << '\n';
  return 0;
}

int command_report(const std::string& directory, std::ostream& out) {
  const fs::path root(directory);
  if (!fs::is_directory(root)) throw InvalidSpecError("not a directory: " + directory);
  std::vector<fs::path> logs;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "runlog.csv") logs.push_back(entry.path());
  }
  std::sort(logs.begin(), logs.end());
  if (logs.empty()) throw InvalidSpecError("no runlog.csv under " + directory);
  out << "run," << kRunLogHeader << '\n';
  for (const auto& path : logs) {
    std::ifstream in(path);
    const auto records = read_runlog_csv(in);
    const auto run = fs::relative(path.parent_path(), root).string();
    if (records.empty()) {
      out << run << ",,,,,,,\n";
      continue;
    }
    std::ostringstream row;
    RunLog single{{records.back()}, {}};
    write_runlog_csv(row, single);
    const auto text = row.str();
    out << (run == "." ? std::string("run") : run) << ',' << text.substr(text.find('\n') + 1);
  }
  if (const auto summary = root / "summary.json"; fs::exists(summary)) {
    std::ifstream in(summary);
    const auto j = json::parse(in);
    out << "status: " << j.value("status", "unknown") << '\n';
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Intrinsically motivated option learning on enumerable environments", "optionforge"};
  app.require_subcommand(1);

  std::string manifest_path;
  std::optional<std::size_t> jobs;
  auto* run = app.add_subcommand("run", "Train every (variant, seed) pair of a manifest");
  run->add_option("manifest", manifest_path, "Experiment manifest")->required();
  run->add_option("--jobs", jobs, "Runs executed concurrently");

  std::string checkpoint_path;
  std::size_t episodes = 100;
  bool greedy = false;
  std::uint64_t seed = 1;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("checkpoint", checkpoint_path, "checkpoint.json from a run")->required();
  eval->add_option("--episodes", episodes, "Evaluation rollouts")->check(CLI::PositiveNumber);
  eval->add_flag("--greedy", greedy, "Use argmax intra-option policies");
  eval->add_option("--seed", seed, "Evaluation random seed");

  std::string oracle_path;
  std::optional<std::size_t> s0;
  double tolerance = 1e-8;
  auto* oracle = app.add_subcommand("oracle", "Exact ground-truth quantities");
  oracle->require_subcommand(1);
  auto* mi = oracle->add_subcommand("mi", "Exact I(option; s_f | s0)");
  mi->add_option("config", oracle_path, "Config (key=value) or checkpoint (.json)")->required();
  mi->add_option("--s0", s0, "Start state (default: the environment's initial state)");
  auto* capacity = oracle->add_subcommand("capacity", "MI-maximizing option prior for fixed policies");
  capacity->add_option("config", oracle_path, "Config (key=value) or checkpoint (.json)")->required();
  capacity->add_option("--s0", s0, "Start state (default: the environment's initial state)");
  capacity->add_option("--tolerance", tolerance, "Stop when an iteration gains less than this")
      ->check(CLI::PositiveNumber);

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Summarize the run logs under a directory");
  report->add_option("run-dir", report_dir, "Experiment or run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 2;
  }

  try {
    if (run->parsed()) return command_run(manifest_path, jobs, out);
    if (eval->parsed()) return command_eval(checkpoint_path, episodes, greedy, seed, out);
    if (mi->parsed()) return command_oracle_mi(oracle_path, s0, out);
    if (capacity->parsed()) return command_oracle_capacity(oracle_path, s0, tolerance, out);
    if (report->parsed()) return command_report(report_dir, out);
  } catch (const InvalidSpecError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace optionforge
