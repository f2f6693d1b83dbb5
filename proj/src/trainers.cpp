#include "optionforge/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "optionforge/checkpoint.hpp"
#include "optionforge/oracle.hpp"
#include "optionforge/rewards.hpp"

namespace optionforge {

namespace {

constexpr std::uint64_t kEvalSalt = 0x6a09e667f3bcc909ULL;
constexpr std::uint64_t kMlpSalt = 0xbb67ae8584caa73bULL;

std::string get(const KeyValues& keys, const std::string& key, const std::string& fallback) {
  const auto it = keys.find(key);
  return it == keys.end() ? fallback : it->second;
}

std::string join_sizes(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

Discriminator make_discriminator(const TrainConfig& config) {
  const auto kind = discriminator_kind_for(config.algorithm);
  if (config.backend == BackendKind::tabular) return Discriminator::tabular(kind, config.num_options, config.smoothing);
  return Discriminator::mlp(kind, config.env, config.num_options, config.hidden, config.seed ^ kMlpSalt);
}

OptionPrior make_prior(const TrainConfig& config) {
  if (config.algorithm == Algorithm::vic) return OptionPrior::learned(config.num_options, config.env.num_states);
  return OptionPrior::uniform(config.num_options);
}

TrainConfig apply_train_keys(const KeyValues& keys, EnvSpec env) {
  static const std::vector<std::string> known = {
      "train.algorithm", "train.n_options",     "train.horizon",         "train.episodes",
      "train.policy_step", "train.disc_step",   "train.prior_step",      "train.entropy_coef",
      "train.gamma",     "train.baseline_decay", "train.seed",           "train.vic_reset_period",
      "train.eval_every", "train.checkpoint_every", "train.backend",     "train.hidden",
      "train.smoothing", "train.eval_rollouts"};
  for (const auto& [key, value] : keys) {
    if (key.starts_with("train.") && std::find(known.begin(), known.end(), key) == known.end()) {
      throw InvalidSpecError("unknown config key '" + key + "'");
    }
  }
  TrainConfig config;
  config.env = std::move(env);
  for (const auto& [key, value] : keys) {
    if (key.starts_with("env.")) config.env_source[key] = value;
  }
  config.algorithm = algorithm_from_string(get(keys, "train.algorithm", "diayn"));
  if (auto it = keys.find("train.n_options"); it != keys.end()) config.num_options = parse_size(it->second);
  if (auto it = keys.find("train.horizon"); it != keys.end()) config.horizon = parse_size(it->second);
  if (auto it = keys.find("train.episodes"); it != keys.end()) config.episodes = parse_size(it->second);
  if (auto it = keys.find("train.policy_step"); it != keys.end()) config.policy_step = parse_double(it->second);
  if (auto it = keys.find("train.disc_step"); it != keys.end()) config.discriminator_step = parse_double(it->second);
  if (auto it = keys.find("train.prior_step"); it != keys.end()) config.prior_step = parse_double(it->second);
  if (auto it = keys.find("train.entropy_coef"); it != keys.end()) config.entropy_coefficient = parse_double(it->second);
  if (auto it = keys.find("train.gamma"); it != keys.end()) config.gamma = parse_double(it->second);
  if (auto it = keys.find("train.baseline_decay"); it != keys.end()) config.baseline_decay = parse_double(it->second);
  if (auto it = keys.find("train.seed"); it != keys.end()) config.seed = static_cast<std::uint64_t>(parse_size(it->second));
  if (auto it = keys.find("train.vic_reset_period"); it != keys.end()) config.vic_reset_period = parse_size(it->second);
  if (auto it = keys.find("train.eval_every"); it != keys.end()) config.eval_every = parse_size(it->second);
  if (auto it = keys.find("train.checkpoint_every"); it != keys.end()) config.checkpoint_every = parse_size(it->second);
  if (auto it = keys.find("train.smoothing"); it != keys.end()) config.smoothing = parse_double(it->second);
  if (auto it = keys.find("train.eval_rollouts"); it != keys.end()) config.eval_rollouts = parse_size(it->second);
  if (auto it = keys.find("train.backend"); it != keys.end()) {
    if (it->second == "tabular") config.backend = BackendKind::tabular;
    else if (it->second == "mlp") config.backend = BackendKind::mlp;
    else throw InvalidSpecError("train.backend must be tabular or mlp, got '" + it->second + "'");
  }
  if (auto it = keys.find("train.hidden"); it != keys.end()) {
    config.hidden.clear();
    if (!it->second.empty()) {
      for (const auto& width : split(it->second, ',')) config.hidden.push_back(parse_size(width));
    }
  }
  config.validate();
  return config;
}

}  // namespace

void TrainConfig::validate() const {
  env.validate();
  if (num_options == 0) throw InvalidSpecError("train.n_options must be positive");
  if (episodes == 0) throw InvalidSpecError("train.episodes must be positive");
  if (effective_horizon() == 0) throw InvalidSpecError("train.horizon must be positive");
  if (!(policy_step > 0.0) || !(discriminator_step > 0.0) || !(prior_step > 0.0)) {
    throw InvalidSpecError("step sizes must be positive");
  }
  if (!(entropy_coefficient >= 0.0)) throw InvalidSpecError("train.entropy_coef must be non-negative");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidSpecError("train.gamma must lie in (0, 1]");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) throw InvalidSpecError("train.baseline_decay must lie in [0, 1)");
  if (algorithm == Algorithm::vic && vic_reset_period == 0) throw InvalidSpecError("train.vic_reset_period must be positive");
  if (eval_every == 0) throw InvalidSpecError("train.eval_every must be positive");
  // Record windows are not part of a checkpoint, so checkpoints sit on record boundaries.
  if (checkpoint_every % eval_every != 0) {
    throw InvalidSpecError("train.checkpoint_every must be a multiple of train.eval_every");
  }
  if (!(smoothing > 0.0)) throw InvalidSpecError("train.smoothing must be positive");
  if (backend == BackendKind::mlp && std::any_of(hidden.begin(), hidden.end(), [](std::size_t w) { return w == 0; })) {
    throw InvalidSpecError("train.hidden widths must be positive");
  }
  if (backend == BackendKind::mlp && env.feature_dim == 0) throw InvalidSpecError("mlp backend needs state features");
}

EnvSpec make_env(const KeyValues& keys) {
  const std::string name = get(keys, "env.name", "");
  if (name == "four_rooms") return make_four_rooms(parse_size(get(keys, "env.side", "11")));
  if (name == "chain") {
    return make_chain(parse_size(get(keys, "env.n", "5")), parse_double(get(keys, "env.slip", "0")),
                      parse_size(get(keys, "env.start", "0")));
  }
  if (name == "point_mass") return make_point_mass(parse_size(get(keys, "env.grid", "5")));
  if (name == "file") {
    const auto path = get(keys, "env.path", "");
    if (path.empty()) throw InvalidSpecError("env.name=file needs env.path");
    return load_env(path);
  }
  throw InvalidSpecError("env.name must be four_rooms, chain, point_mass or file; got '" + name + "'");
}

TrainConfig config_from_key_values(const KeyValues& keys) { return apply_train_keys(keys, make_env(keys)); }

TrainConfig config_from_key_values(const KeyValues& keys, EnvSpec env) { return apply_train_keys(keys, std::move(env)); }

KeyValues to_key_values(const TrainConfig& config) {
  KeyValues keys = config.env_source;
  keys["train.algorithm"] = to_string(config.algorithm);
  keys["train.n_options"] = std::to_string(config.num_options);
  keys["train.horizon"] = std::to_string(config.horizon);
  keys["train.episodes"] = std::to_string(config.episodes);
  keys["train.policy_step"] = format_double(config.policy_step);
  keys["train.disc_step"] = format_double(config.discriminator_step);
  keys["train.prior_step"] = format_double(config.prior_step);
  keys["train.entropy_coef"] = format_double(config.entropy_coefficient);
  keys["train.gamma"] = format_double(config.gamma);
  keys["train.baseline_decay"] = format_double(config.baseline_decay);
  keys["train.seed"] = std::to_string(config.seed);
  keys["train.vic_reset_period"] = std::to_string(config.vic_reset_period);
  keys["train.eval_every"] = std::to_string(config.eval_every);
  keys["train.checkpoint_every"] = std::to_string(config.checkpoint_every);
  keys["train.backend"] = config.backend == BackendKind::tabular ? "tabular" : "mlp";
  keys["train.hidden"] = join_sizes(config.hidden);
  keys["train.smoothing"] = format_double(config.smoothing);
  keys["train.eval_rollouts"] = std::to_string(config.eval_rollouts);
  return keys;
}

std::vector<double> RunLog::episode_losses() const {
  std::vector<double> out;
  for (const auto& e : episodes) out.push_back(e.disc_loss);
  return out;
}

std::vector<double> RunLog::episode_rewards() const {
  std::vector<double> out;
  for (const auto& e : episodes) out.push_back(e.mean_reward);
  return out;
}

std::vector<double> moving_average(const std::vector<double>& values, std::size_t window) {
  if (window == 0) throw ContractViolation("moving_average: window must be positive");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

double mean_of(const std::vector<double>& values, std::size_t begin, std::size_t end) {
  if (begin >= end || end > values.size()) throw ContractViolation("mean_of: empty or out-of-range slice");
  return std::accumulate(values.begin() + static_cast<std::ptrdiff_t>(begin),
                         values.begin() + static_cast<std::ptrdiff_t>(end), 0.0) /
         static_cast<double>(end - begin);
}

// ---------------------------------------------------------------------------

Trainer::Trainer(TrainConfig config)
    : config_(std::move(config)),
      prior_(make_prior(config_)),
      policy_(config_.num_options, config_.env.num_states, config_.env.num_actions, config_.entropy_coefficient,
              config_.baseline_decay),
      discriminator_(make_discriminator(config_)),
      rng_(config_.seed),
      eval_rng_(config_.seed ^ kEvalSalt),
      vic_start_(config_.env.initial_state) {
  config_.validate();
}

Trainer::Trainer(const Checkpoint& checkpoint)
    : config_(config_from_key_values(checkpoint.config, checkpoint.env)),
      prior_(checkpoint.prior),
      policy_(checkpoint.policy),
      discriminator_(checkpoint.discriminator),
      rng_(0),
      eval_rng_(0),
      episodes_done_(checkpoint.episodes_done),
      vic_start_(checkpoint.vic_start) {
  rng_.restore(checkpoint.rng_state);
  eval_rng_.restore(checkpoint.eval_rng_state);
  if (prior_.num_options() != config_.num_options || policy_.num_options() != config_.num_options ||
      discriminator_.num_options() != config_.num_options) {
    throw InvalidSpecError("checkpoint: option counts disagree with its config");
  }
  if (policy_.num_states() != config_.env.num_states || policy_.num_actions() != config_.env.num_actions) {
    throw InvalidSpecError("checkpoint: policy shape disagrees with its environment");
  }
  if (discriminator_.kind() != discriminator_kind_for(config_.algorithm)) {
    throw InvalidSpecError("checkpoint: discriminator kind disagrees with the algorithm");
  }
}

Checkpoint Trainer::snapshot() const {
  return Checkpoint{to_key_values(config_), config_.env, episodes_done_, vic_start_, prior_, policy_, discriminator_,
                    rng_.state(), eval_rng_.state()};
}

Trajectory Trainer::rollout(StateId s0, OptionId option, bool greedy, Rng& rng) const {
  Trajectory trajectory{option, s0, {}, s0, 0.0};
  StateId s = s0;
  const std::size_t horizon = config_.effective_horizon();
  for (std::size_t t = 0; t < horizon && !env().is_terminal(s); ++t) {
    const ActionId a = greedy ? policy_.greedy(s, option) : policy_.act(s, option, rng);
    const auto result = step(env(), s, a, rng);
    trajectory.steps.push_back({s, a, result.next_state});
    s = result.next_state;
  }
  trajectory.final_state = s;
  return trajectory;
}

std::vector<Trajectory> Trainer::greedy_rollouts(Rng& rng) const {
  std::vector<Trajectory> out;
  for (std::size_t w = 0; w < config_.num_options; ++w) out.push_back(rollout(env().initial_state, OptionId{w}, true, rng));
  return out;
}

std::vector<Trajectory> Trainer::sample_rollouts(std::size_t count, bool greedy, Rng& rng) const {
  std::vector<Trajectory> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const OptionId w = prior_.sample(env().initial_state, rng);
    auto trajectory = rollout(env().initial_state, w, greedy, rng);
    const auto rewards = step_rewards(trajectory);
    trajectory.intrinsic_return = std::accumulate(rewards.begin(), rewards.end(), 0.0);
    out.push_back(std::move(trajectory));
  }
  return out;
}

std::vector<double> Trainer::step_rewards(const Trajectory& trajectory) const {
  const IntrinsicRewardSpec spec(config_.algorithm, env(), prior_, discriminator_);
  std::vector<double> rewards(trajectory.length(), 0.0);
  if (trajectory.length() == 0) return rewards;
  switch (config_.algorithm) {
    case Algorithm::vic:
      rewards.back() = r_vic(spec, trajectory.start, trajectory.final_state, trajectory.option);
      break;
    case Algorithm::diayn:
      // Reward for arriving in s_{t+1}; the shared start state is never scored.
      for (std::size_t t = 0; t < trajectory.length(); ++t) {
        rewards[t] = r_diayn(spec, trajectory.steps[t].next_state, trajectory.option);
      }
      break;
    case Algorithm::valor:
      rewards.back() = r_valor(spec, trajectory, trajectory.option);
      break;
  }
  return rewards;
}

void Trainer::apply_policy_update(const Trajectory& trajectory, const std::vector<double>& rewards) {
  if (trajectory.length() == 0) return;
  const auto returns = returns_to_go(rewards, config_.gamma);
  policy_.update_reinforce(trajectory, returns, config_.policy_step);
}

EpisodeStats Trainer::vic_episode() {
  if (episodes_done_ % config_.vic_reset_period == 0 || env().is_terminal(vic_start_)) {
    vic_start_ = env().initial_state;
  }
  const StateId s0 = vic_start_;
  const OptionId option = prior_.sample(s0, rng_);
  auto trajectory = rollout(s0, option, false, rng_);

  // Reward from the discriminator before it sees this episode.
  const double reward = r_vic(IntrinsicRewardSpec(config_.algorithm, env(), prior_, discriminator_), s0,
                              trajectory.final_state, option);
  const double loss = discriminator_.update(pair_key(env(), s0, trajectory.final_state), option,
                                            config_.discriminator_step);
  std::vector<double> rewards(trajectory.length(), 0.0);
  if (!rewards.empty()) rewards.back() = reward;
  apply_policy_update(trajectory, rewards);
  prior_.reinforce(s0, option, reward, config_.prior_step);
  vic_start_ = trajectory.final_state;
  trajectory.intrinsic_return = reward;
  window_.push_back(trajectory);
  return {episodes_done_, option, s0, trajectory.final_state, trajectory.length(), reward, loss};
}

EpisodeStats Trainer::diayn_episode() {
  const StateId s0 = env().initial_state;
  const OptionId option = prior_.sample(s0, rng_);
  auto trajectory = rollout(s0, option, false, rng_);
  const auto rewards = step_rewards(trajectory);
  double loss = 0.0;
  for (const auto& record : trajectory.steps) {
    loss += discriminator_.update(state_key(env(), record.next_state), option, config_.discriminator_step);
  }
  apply_policy_update(trajectory, rewards);
  const double total = std::accumulate(rewards.begin(), rewards.end(), 0.0);
  const double n = std::max<double>(1.0, static_cast<double>(trajectory.length()));
  trajectory.intrinsic_return = total;
  window_.push_back(trajectory);
  return {episodes_done_, option, s0, trajectory.final_state, trajectory.length(), total / n, loss / n};
}

EpisodeStats Trainer::valor_episode() {
  const StateId s0 = env().initial_state;
  const OptionId option = prior_.sample(s0, rng_);
  auto trajectory = rollout(s0, option, false, rng_);
  const auto rewards = step_rewards(trajectory);
  const double loss = discriminator_.update(trajectory_key(env(), trajectory), option, config_.discriminator_step);
  apply_policy_update(trajectory, rewards);
  const double reward = rewards.empty() ? 0.0 : rewards.back();
  trajectory.intrinsic_return = reward;
  window_.push_back(trajectory);
  return {episodes_done_, option, s0, trajectory.final_state, trajectory.length(), reward, loss};
}

EpisodeStats Trainer::run_episode() {
  if (finished()) throw ContractViolation("trainer: all configured episodes already ran");
  EpisodeStats stats;
  switch (config_.algorithm) {
    case Algorithm::vic: stats = vic_episode(); break;
    case Algorithm::diayn: stats = diayn_episode(); break;
    case Algorithm::valor: stats = valor_episode(); break;
  }
  if (!std::isfinite(stats.mean_reward) || !std::isfinite(stats.disc_loss)) {
    throw NumericalFailure("trainer: non-finite episode statistics at episode " + std::to_string(episodes_done_) +
                           " (reward " + std::to_string(stats.mean_reward) + ", loss " +
                           std::to_string(stats.disc_loss) + ")");
  }
  log_.episodes.push_back(stats);
  ++episodes_done_;
  if (episodes_done_ % config_.eval_every == 0) record_boundary();
  return stats;
}

void Trainer::record_boundary() {
  RunRecord record;
  record.episode = episodes_done_;
  const std::size_t window = std::min(config_.eval_every, log_.episodes.size());
  const std::size_t begin = log_.episodes.size() - window;
  double reward = 0.0;
  double loss = 0.0;
  for (std::size_t i = begin; i < log_.episodes.size(); ++i) {
    reward += log_.episodes[i].mean_reward;
    loss += log_.episodes[i].disc_loss;
  }
  record.mean_r_intrinsic = reward / static_cast<double>(window);
  record.disc_loss = loss / static_cast<double>(window);
  record.prior_entropy = prior_.entropy(env().initial_state);

  if (config_.eval_rollouts > 0) {
    std::vector<std::pair<OptionId, StateId>> samples;
    for (std::size_t i = 0; i < config_.eval_rollouts; ++i) {
      const OptionId w = prior_.sample(env().initial_state, eval_rng_);
      samples.emplace_back(w, rollout(env().initial_state, w, false, eval_rng_).final_state);
    }
    record.empirical_mi = empirical_mi(samples, config_.num_options, env().num_states);
  }
  if (env().has_rooms() && !window_.empty()) {
    record.room0_frac = occupancy_metrics(window_, env()).room_fractions.at(0);
  }
  record.static_frac = detect_static_collapse(greedy_rollouts(eval_rng_));
  window_.clear();
  log_.records.push_back(record);
}

const RunLog& Trainer::train() {
  while (!finished()) run_episode();
  return log_;
}

namespace {

RunLog train_checked(const TrainConfig& config, Algorithm expected) {
  if (config.algorithm != expected) {
    throw ContractViolation("train_" + to_string(expected) + ": config is for " + to_string(config.algorithm));
  }
  Trainer trainer(config);
  return trainer.train();
}

}  // namespace

RunLog train_vic(const TrainConfig& config) { return train_checked(config, Algorithm::vic); }
RunLog train_diayn(const TrainConfig& config) { return train_checked(config, Algorithm::diayn); }
RunLog train_valor(const TrainConfig& config) { return train_checked(config, Algorithm::valor); }

}  // namespace optionforge
