#pragma once

// Reference computations used only by the tests. They are written as
// direct sums over definitions so they share no code with the library.

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "optionforge/env.hpp"
#include "optionforge/policy.hpp"

namespace optionforge::testing {

// Probability of ending in each state after `depth` steps, by recursive
// enumeration of every (action, next state) path.
inline void enumerate_paths(const EnvSpec& env, const IntraOptionPolicy& policy, OptionId option, std::size_t s,
                            std::size_t depth, double mass, std::vector<double>& out) {
  if (depth == 0 || env.terminal[s]) {
    out[s] += mass;
    return;
  }
  const auto pi = policy.probabilities(StateId{s}, option);
  for (std::size_t a = 0; a < env.num_actions; ++a) {
    for (std::size_t next = 0; next < env.num_states; ++next) {
      const double p = env.transition[(s * env.num_actions + a) * env.num_states + next];
      if (p > 0.0 && pi[a] > 0.0) enumerate_paths(env, policy, option, next, depth - 1, mass * pi[a] * p, out);
    }
  }
}

inline std::vector<double> brute_force_final(const EnvSpec& env, const IntraOptionPolicy& policy, OptionId option,
                                             StateId s0, std::size_t horizon) {
  std::vector<double> out(env.num_states, 0.0);
  enumerate_paths(env, policy, option, s0.value(), horizon, 1.0, out);
  return out;
}

// sum p(w, s) ln(p(w, s) / (p(w) p(s))) over a joint given as rows per option.
inline double direct_mi(const std::vector<std::vector<double>>& joint) {
  std::vector<double> pw(joint.size(), 0.0);
  std::vector<double> ps(joint.front().size(), 0.0);
  for (std::size_t w = 0; w < joint.size(); ++w) {
    for (std::size_t s = 0; s < ps.size(); ++s) {
      pw[w] += joint[w][s];
      ps[s] += joint[w][s];
    }
  }
  double mi = 0.0;
  for (std::size_t w = 0; w < joint.size(); ++w) {
    for (std::size_t s = 0; s < ps.size(); ++s) {
      if (joint[w][s] > 0.0) mi += joint[w][s] * std::log(joint[w][s] / (pw[w] * ps[s]));
    }
  }
  return mi;
}

inline void randomize_policy(IntraOptionPolicy& policy, std::mt19937_64& gen, double scale = 2.0) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> logits(policy.all_logits().size());
  for (auto& z : logits) z = normal(gen);
  policy.set_state(std::move(logits), policy.all_baselines());
}

// Random row-stochastic environment with dense transitions.
inline EnvSpec random_env(std::size_t states, std::size_t actions, std::mt19937_64& gen) {
  EnvSpec env;
  env.name = "random";
  env.num_states = states;
  env.num_actions = actions;
  env.transition.assign(states * actions * states, 0.0);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (std::size_t row = 0; row < states * actions; ++row) {
    double total = 0.0;
    for (std::size_t s = 0; s < states; ++s) total += env.transition[row * states + s] = u(gen);
    for (std::size_t s = 0; s < states; ++s) env.transition[row * states + s] /= total;
    double sum = 0.0;
    for (std::size_t s = 0; s + 1 < states; ++s) sum += env.transition[row * states + s];
    env.transition[row * states + states - 1] = 1.0 - sum;
  }
  env.terminal.assign(states, false);
  env.horizon_default = 3;
  env.feature_dim = 1;
  for (std::size_t s = 0; s < states; ++s) env.features.push_back(static_cast<double>(s));
  env.validate();
  return env;
}

}  // namespace optionforge::testing
