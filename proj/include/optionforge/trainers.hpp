#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "optionforge/discriminator.hpp"
#include "optionforge/env.hpp"
#include "optionforge/option.hpp"
#include "optionforge/policy.hpp"
#include "optionforge/rng.hpp"
#include "optionforge/text.hpp"

namespace optionforge {

enum class BackendKind { tabular, mlp };

struct TrainConfig {
  Algorithm algorithm = Algorithm::diayn;
  EnvSpec env;
  /// The env.* keys `env` was built from; kept so the config can be written back.
  KeyValues env_source;
  std::size_t num_options = 8;
  /// Steps per option; 0 selects env.horizon_default.
  std::size_t horizon = 0;
  std::size_t episodes = 1000;
  double policy_step = 0.05;
  double discriminator_step = 0.1;
  double prior_step = 0.05;
  double entropy_coefficient = 0.01;
  double gamma = 0.99;
  double baseline_decay = 0.99;
  std::uint64_t seed = 1;
  std::size_t vic_reset_period = 50;
  std::size_t eval_every = 100;
  /// 0 writes only the final checkpoint.
  std::size_t checkpoint_every = 0;
  BackendKind backend = BackendKind::tabular;
  std::vector<std::size_t> hidden{32};
  double smoothing = 1.0;
  /// Stochastic rollouts behind each empirical MI estimate.
  std::size_t eval_rollouts = 200;

  [[nodiscard]] std::size_t effective_horizon() const { return horizon == 0 ? env.horizon_default : horizon; }
  /// Throws InvalidSpecError on out-of-range values.
  void validate() const;
};

/// Builds an environment from env.* keys (env.name = four_rooms | chain |
/// point_mass | file).
EnvSpec make_env(const KeyValues& keys);
TrainConfig config_from_key_values(const KeyValues& keys);
/// Same, with an already-built environment (env.* keys are only recorded).
TrainConfig config_from_key_values(const KeyValues& keys, EnvSpec env);
KeyValues to_key_values(const TrainConfig& config);

struct EpisodeStats {
  std::size_t episode = 0;
  OptionId option;
  StateId start;
  StateId final_state;
  std::size_t length = 0;
  /// Mean intrinsic reward per rewarded step (VIC/VALOR: the single terminal reward).
  double mean_reward = 0.0;
  /// Mean cross-entropy over the episode's discriminator updates.
  double disc_loss = 0.0;

  friend bool operator==(const EpisodeStats&, const EpisodeStats&) = default;
};

struct RunRecord {
  std::size_t episode = 0;
  std::optional<double> mean_r_intrinsic;
  std::optional<double> disc_loss;
  std::optional<double> prior_entropy;
  std::optional<double> empirical_mi;
  std::optional<double> room0_frac;
  std::optional<double> static_frac;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Append-only run history: one record per eval_every boundary plus the
/// per-episode statistics the records are aggregated from.
struct RunLog {
  std::vector<RunRecord> records;
  std::vector<EpisodeStats> episodes;

  [[nodiscard]] std::vector<double> episode_losses() const;
  [[nodiscard]] std::vector<double> episode_rewards() const;

  friend bool operator==(const RunLog&, const RunLog&) = default;
};

/// Trailing moving average with windows truncated at the start.
std::vector<double> moving_average(const std::vector<double>& values, std::size_t window);
/// Mean of values[begin, end).
double mean_of(const std::vector<double>& values, std::size_t begin, std::size_t end);

struct Checkpoint;

/// One training run. Holds the learned prior, intra-option policies and
/// discriminator, and advances them one episode at a time.
class Trainer {
 public:
  explicit Trainer(TrainConfig config);
  explicit Trainer(const Checkpoint& checkpoint);

  /// Runs the remaining episodes and returns the log.
  const RunLog& train();
  /// One training episode; returns its statistics.
  EpisodeStats run_episode();

  /// Rollout of one option from s0. Greedy uses argmax actions; the random
  /// stream still drives stochastic transitions.
  Trajectory rollout(StateId s0, OptionId option, bool greedy, Rng& rng) const;
  /// Greedy rollout of every option from the initial state.
  std::vector<Trajectory> greedy_rollouts(Rng& rng) const;
  /// `count` rollouts from the initial state with options drawn from the prior.
  std::vector<Trajectory> sample_rollouts(std::size_t count, bool greedy, Rng& rng) const;

  [[nodiscard]] const TrainConfig& config() const { return config_; }
  [[nodiscard]] const EnvSpec& env() const { return config_.env; }
  [[nodiscard]] const OptionPrior& prior() const { return prior_; }
  [[nodiscard]] const IntraOptionPolicy& policy() const { return policy_; }
  [[nodiscard]] const Discriminator& discriminator() const { return discriminator_; }
  [[nodiscard]] const RunLog& log() const { return log_; }
  [[nodiscard]] std::size_t episodes_done() const { return episodes_done_; }
  [[nodiscard]] bool finished() const { return episodes_done_ >= config_.episodes; }

  [[nodiscard]] Checkpoint snapshot() const;

  /// Intrinsic reward of a finished trajectory under the current prior and
  /// discriminator: per-step rewards for DIAYN, a single terminal one otherwise.
  [[nodiscard]] std::vector<double> step_rewards(const Trajectory& trajectory) const;

 private:
  EpisodeStats vic_episode();
  EpisodeStats diayn_episode();
  EpisodeStats valor_episode();
  void apply_policy_update(const Trajectory& trajectory, const std::vector<double>& rewards);
  void record_boundary();

  TrainConfig config_;
  OptionPrior prior_;
  IntraOptionPolicy policy_;
  Discriminator discriminator_;
  Rng rng_;
  Rng eval_rng_;
  std::size_t episodes_done_ = 0;
  StateId vic_start_;
  RunLog log_;
  std::vector<Trajectory> window_;
};

RunLog train_vic(const TrainConfig& config);
RunLog train_diayn(const TrainConfig& config);
RunLog train_valor(const TrainConfig& config);

}  // namespace optionforge
