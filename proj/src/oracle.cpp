#include "optionforge/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace optionforge {

namespace {

constexpr double kJointTolerance = 1e-10;

double entropy_nats(std::span<const double> p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

void guard_enumerable(const EnvSpec& env, std::size_t horizon) {
  if (env.num_states > kMaxExactStates) {
    throw ContractViolation("exact oracle: " + std::to_string(env.num_states) + " states exceeds the limit of " +
                            std::to_string(kMaxExactStates));
  }
  if (horizon > kMaxExactHorizon) {
    throw ContractViolation("exact oracle: horizon " + std::to_string(horizon) + " exceeds the limit of " +
                            std::to_string(kMaxExactHorizon));
  }
}

struct SparseEntry {
  std::size_t next;
  double prob;
};

// Policy-averaged transition rows; `action_probs(s)` gives pi(.|s).
template <typename ActionProbs>
std::vector<double> propagate(const EnvSpec& env, StateId s0, std::size_t horizon, ActionProbs action_probs) {
  guard_enumerable(env, horizon);
  if (s0.value() >= env.num_states) throw ContractViolation("exact oracle: start state out of range");
  std::vector<std::vector<SparseEntry>> rows(env.num_states);
  for (std::size_t s = 0; s < env.num_states; ++s) {
    if (env.is_terminal(StateId{s})) {
      rows[s].push_back({s, 1.0});
      continue;
    }
    std::vector<double> dense(env.num_states, 0.0);
    const auto pi = action_probs(StateId{s});
    for (std::size_t a = 0; a < env.num_actions; ++a) {
      if (pi[a] == 0.0) continue;
      const auto row = env.row(StateId{s}, ActionId{a});
      for (std::size_t next = 0; next < env.num_states; ++next) dense[next] += pi[a] * row[next];
    }
    for (std::size_t next = 0; next < env.num_states; ++next) {
      if (dense[next] != 0.0) rows[s].push_back({next, dense[next]});
    }
  }
  std::vector<double> dist(env.num_states, 0.0);
  dist[s0.value()] = 1.0;
  std::vector<double> next_dist(env.num_states);
  for (std::size_t t = 0; t < horizon; ++t) {
    std::fill(next_dist.begin(), next_dist.end(), 0.0);
    for (std::size_t s = 0; s < env.num_states; ++s) {
      if (dist[s] == 0.0) continue;
      for (const auto& e : rows[s]) next_dist[e.next] += dist[s] * e.prob;
    }
    dist.swap(next_dist);
  }
  return dist;
}

}  // namespace

JointDistribution::JointDistribution(std::size_t num_options, std::size_t num_states, std::vector<double> table)
    : num_options_(num_options), num_states_(num_states), table_(std::move(table)) {
  if (table_.size() != num_options_ * num_states_) throw ContractViolation("joint: table size mismatch");
  double total = 0.0;
  for (double p : table_) {
    if (!(p >= 0.0)) throw ContractViolation("joint: negative entry");
    total += p;
  }
  if (std::abs(total - 1.0) > kJointTolerance) {
    throw ContractViolation("joint: entries sum to " + std::to_string(total));
  }
}

JointDistribution JointDistribution::from_channel(std::span<const double> prior,
                                                  const std::vector<std::vector<double>>& channel) {
  if (prior.size() != channel.size() || channel.empty()) throw ContractViolation("joint: prior/channel mismatch");
  const std::size_t states = channel.front().size();
  std::vector<double> table(prior.size() * states);
  for (std::size_t w = 0; w < prior.size(); ++w) {
    if (channel[w].size() != states) throw ContractViolation("joint: ragged channel");
    for (std::size_t s = 0; s < states; ++s) table[w * states + s] = prior[w] * channel[w][s];
  }
  return {prior.size(), states, std::move(table)};
}

std::vector<double> JointDistribution::option_marginal() const {
  std::vector<double> m(num_options_, 0.0);
  for (std::size_t w = 0; w < num_options_; ++w) {
    for (std::size_t s = 0; s < num_states_; ++s) m[w] += at(w, s);
  }
  return m;
}

std::vector<double> JointDistribution::state_marginal() const {
  std::vector<double> m(num_states_, 0.0);
  for (std::size_t w = 0; w < num_options_; ++w) {
    for (std::size_t s = 0; s < num_states_; ++s) m[s] += at(w, s);
  }
  return m;
}

double JointDistribution::mi_state_form() const {
  const auto options = option_marginal();
  double conditional = 0.0;  // H(s_f | option)
  for (std::size_t w = 0; w < num_options_; ++w) {
    if (options[w] <= 0.0) continue;
    for (std::size_t s = 0; s < num_states_; ++s) {
      const double joint = at(w, s);
      if (joint > 0.0) conditional -= joint * std::log(joint / options[w]);
    }
  }
  return entropy_nats(state_marginal()) - conditional;
}

double JointDistribution::mi_option_form() const {
  const auto states = state_marginal();
  double conditional = 0.0;  // H(option | s_f)
  for (std::size_t s = 0; s < num_states_; ++s) {
    if (states[s] <= 0.0) continue;
    for (std::size_t w = 0; w < num_options_; ++w) {
      const double joint = at(w, s);
      if (joint > 0.0) conditional -= joint * std::log(joint / states[s]);
    }
  }
  return entropy_nats(option_marginal()) - conditional;
}

std::vector<double> exact_final_state_distribution(const EnvSpec& env, const IntraOptionPolicy& policy,
                                                   OptionId option, StateId s0, std::size_t horizon) {
  return propagate(env, s0, horizon, [&](StateId s) { return policy.probabilities(s, option); });
}

std::vector<double> exact_final_state_distribution_greedy(const EnvSpec& env, const IntraOptionPolicy& policy,
                                                          OptionId option, StateId s0, std::size_t horizon) {
  return propagate(env, s0, horizon, [&](StateId s) {
    std::vector<double> pi(env.num_actions, 0.0);
    pi[policy.greedy(s, option).value()] = 1.0;
    return pi;
  });
}

std::vector<std::vector<double>> exact_channel(const EnvSpec& env, const IntraOptionPolicy& policy, StateId s0,
                                               std::size_t horizon) {
  if (policy.num_states() != env.num_states || policy.num_actions() != env.num_actions) {
    throw ContractViolation("exact oracle: policy shape does not match the environment");
  }
  std::vector<std::vector<double>> channel;
  for (std::size_t w = 0; w < policy.num_options(); ++w) {
    channel.push_back(exact_final_state_distribution(env, policy, OptionId{w}, s0, horizon));
  }
  return channel;
}

JointDistribution exact_joint(const EnvSpec& env, const IntraOptionPolicy& policy, const OptionPrior& prior,
                              StateId s0, std::size_t horizon) {
  if (prior.num_options() != policy.num_options()) throw ContractViolation("exact oracle: option count mismatch");
  return JointDistribution::from_channel(prior.probabilities(s0), exact_channel(env, policy, s0, horizon));
}

double exact_mi(const EnvSpec& env, const IntraOptionPolicy& policy, const OptionPrior& prior, StateId s0,
                std::size_t horizon) {
  return exact_joint(env, policy, prior, s0, horizon).mi_state_form();
}

double empirical_mi(std::span<const std::pair<OptionId, StateId>> samples, std::size_t num_options,
                    std::size_t num_states) {
  if (samples.empty()) throw ContractViolation("empirical_mi: no samples");
  std::vector<double> joint(num_options * num_states, 0.0);
  std::vector<double> options(num_options, 0.0);
  std::vector<double> states(num_states, 0.0);
  for (const auto& [w, s] : samples) {
    if (w.value() >= num_options || s.value() >= num_states) throw ContractViolation("empirical_mi: sample out of range");
    joint[w.value() * num_states + s.value()] += 1.0;
    options[w.value()] += 1.0;
    states[s.value()] += 1.0;
  }
  const double n = static_cast<double>(samples.size());
  double mi = 0.0;
  for (std::size_t w = 0; w < num_options; ++w) {
    for (std::size_t s = 0; s < num_states; ++s) {
      const double c = joint[w * num_states + s];
      if (c > 0.0) mi += (c / n) * std::log(c * n / (options[w] * states[s]));
    }
  }
  return std::max(mi, 0.0);
}

CapacityResult channel_capacity(const std::vector<std::vector<double>>& channel, double tolerance,
                                std::size_t max_iterations) {
  if (!(tolerance > 0.0)) throw ContractViolation("channel_capacity: tolerance must be positive");
  if (channel.empty()) throw ContractViolation("channel_capacity: empty channel");
  const std::size_t options = channel.size();
  const std::size_t states = channel.front().size();

  CapacityResult result;
  result.prior.assign(options, 1.0 / static_cast<double>(options));

  // D(channel_w || output) per option under the current prior; returns the MI.
  std::vector<double> divergence(options);
  auto evaluate = [&]() {
    std::vector<double> output(states, 0.0);
    for (std::size_t w = 0; w < options; ++w) {
      for (std::size_t s = 0; s < states; ++s) output[s] += result.prior[w] * channel[w][s];
    }
    double mi = 0.0;
    for (std::size_t w = 0; w < options; ++w) {
      double d = 0.0;
      for (std::size_t s = 0; s < states; ++s) {
        const double q = channel[w][s];
        if (q > 0.0 && output[s] > 0.0) d += q * std::log(q / output[s]);
      }
      divergence[w] = d;
      mi += result.prior[w] * d;
    }
    return mi;
  };

  double mi = evaluate();
  result.history.push_back(mi);
  while (result.iterations < max_iterations) {
    // Multiplicative update, shifted by the max divergence for stability.
    const double shift = *std::max_element(divergence.begin(), divergence.end());
    double total = 0.0;
    for (std::size_t w = 0; w < options; ++w) {
      result.prior[w] *= std::exp(divergence[w] - shift);
      total += result.prior[w];
    }
    for (double& p : result.prior) p /= total;
    ++result.iterations;
    const double next = evaluate();
    result.history.push_back(next);
    const double improvement = next - mi;
    mi = next;
    if (improvement < tolerance) break;
  }
  result.capacity = mi;
  result.upper_bound_gap = *std::max_element(divergence.begin(), divergence.end()) - mi;
  return result;
}

OptimalPrior optimal_prior(const EnvSpec& env, const IntraOptionPolicy& policy, StateId s0, std::size_t horizon,
                           double tolerance) {
  auto details = channel_capacity(exact_channel(env, policy, s0, horizon), tolerance);
  const std::size_t options = policy.num_options();
  std::vector<double> logits(options * env.num_states, 0.0);
  for (std::size_t w = 0; w < options; ++w) {
    // Clamp so a vanishing probability keeps a finite logit.
    logits[s0.value() * options + w] = std::max(std::log(details.prior[w]), -700.0);
  }
  const double capacity = details.capacity;
  return {OptionPrior::from_logits(options, env.num_states, std::move(logits)), capacity, std::move(details)};
}

Occupancy occupancy_metrics(std::span<const Trajectory> trajectories, const EnvSpec& env) {
  if (trajectories.empty()) throw ContractViolation("occupancy_metrics: no trajectories");
  Occupancy occ;
  occ.state_counts.assign(env.num_states, 0.0);
  for (const auto& trajectory : trajectories) {
    for (const StateId s : trajectory.visited_states()) {
      if (s.value() >= env.num_states) throw ContractViolation("occupancy_metrics: state out of range");
      occ.state_counts[s.value()] += 1.0;
      ++occ.total_visits;
    }
  }
  const auto visited = std::count_if(occ.state_counts.begin(), occ.state_counts.end(), [](double c) { return c > 0.0; });
  occ.coverage = static_cast<double>(visited) / static_cast<double>(env.num_states);
  if (env.has_rooms()) {
    occ.room_fractions.assign(env.num_rooms(), 0.0);
    for (std::size_t s = 0; s < env.num_states; ++s) {
      occ.room_fractions[static_cast<std::size_t>(env.room_of[s])] += occ.state_counts[s];
    }
    for (double& f : occ.room_fractions) f /= static_cast<double>(occ.total_visits);
  }
  return occ;
}

bool is_static(const Trajectory& trajectory) {
  const std::size_t length = trajectory.length();
  if (length == 0) return false;
  const std::size_t skip = length / 10;
  std::vector<std::size_t> tail;
  for (std::size_t t = skip; t < length; ++t) tail.push_back(trajectory.steps[t].next_state.value());
  std::sort(tail.begin(), tail.end());
  std::size_t best = 0;
  for (std::size_t i = 0; i < tail.size();) {
    std::size_t j = i;
    while (j < tail.size() && tail[j] == tail[i]) ++j;
    best = std::max(best, j - i);
    i = j;
  }
  return static_cast<double>(best) >= 0.9 * static_cast<double>(tail.size());
}

double detect_static_collapse(std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) throw ContractViolation("detect_static_collapse: no trajectories");
  const auto count = std::count_if(trajectories.begin(), trajectories.end(), is_static);
  return static_cast<double>(count) / static_cast<double>(trajectories.size());
}

}  // namespace optionforge
