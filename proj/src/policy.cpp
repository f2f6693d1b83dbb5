#include "optionforge/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace optionforge {

IntraOptionPolicy::IntraOptionPolicy(std::size_t num_options, std::size_t num_states, std::size_t num_actions,
                                     double entropy_coefficient, double baseline_decay)
    : num_options_(num_options),
      num_states_(num_states),
      num_actions_(num_actions),
      entropy_coefficient_(entropy_coefficient),
      baseline_decay_(baseline_decay),
      logits_(num_options * num_states * num_actions, 0.0),
      baselines_(num_options * num_states, 0.0) {
  if (num_options == 0 || num_states == 0 || num_actions == 0) throw InvalidSpecError("policy: empty dimension");
  if (!(entropy_coefficient >= 0.0)) throw InvalidSpecError("policy: entropy coefficient must be non-negative");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) throw InvalidSpecError("policy: baseline decay in [0,1)");
}

std::size_t IntraOptionPolicy::offset(OptionId option, StateId s) const {
  if (option.value() >= num_options_ || s.value() >= num_states_) {
    throw ContractViolation("policy: option " + std::to_string(option.value()) + " / state " +
                            std::to_string(s.value()) + " out of range");
  }
  return (option.value() * num_states_ + s.value()) * num_actions_;
}

std::span<const double> IntraOptionPolicy::logits(OptionId option, StateId s) const {
  return {logits_.data() + offset(option, s), num_actions_};
}

std::span<double> IntraOptionPolicy::logits(OptionId option, StateId s) {
  return {logits_.data() + offset(option, s), num_actions_};
}

void IntraOptionPolicy::set_state(std::vector<double> logits, std::vector<double> baselines) {
  if (logits.size() != logits_.size() || baselines.size() != baselines_.size()) {
    throw InvalidSpecError("policy: restored state has the wrong shape");
  }
  logits_ = std::move(logits);
  baselines_ = std::move(baselines);
}

std::vector<double> IntraOptionPolicy::probabilities(StateId s, OptionId option) const {
  return softmax(logits(option, s));
}

double IntraOptionPolicy::entropy(StateId s, OptionId option) const { return entropy_of(probabilities(s, option)); }

double IntraOptionPolicy::baseline(StateId s, OptionId option) const {
  return baselines_[offset(option, s) / num_actions_];
}

ActionId IntraOptionPolicy::act(StateId s, OptionId option, Rng& rng) const {
  const auto p = probabilities(s, option);
  return ActionId{rng.categorical(p)};
}

ActionId IntraOptionPolicy::greedy(StateId s, OptionId option) const {
  const auto z = logits(option, s);
  // max_element returns the first maximum.
  return ActionId{static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin())};
}

void IntraOptionPolicy::update_reinforce(const Trajectory& trajectory, std::span<const double> returns,
                                         double step_size) {
  if (returns.size() != trajectory.length()) throw ContractViolation("update_reinforce: returns length mismatch");
  if (!(step_size > 0.0)) throw ContractViolation("update_reinforce: step_size must be positive");
  const OptionId option = trajectory.option;
  for (std::size_t t = 0; t < trajectory.length(); ++t) {
    const auto& record = trajectory.steps[t];
    const std::size_t base = offset(option, record.state);
    double& b = baselines_[base / num_actions_];
    const double advantage = returns[t] - b;
    std::span<double> z{logits_.data() + base, num_actions_};
    const auto score = log_prob_gradient(z, record.action.value());
    std::vector<double> bonus(num_actions_, 0.0);
    if (entropy_coefficient_ > 0.0) bonus = entropy_gradient(z);
    for (std::size_t a = 0; a < num_actions_; ++a) {
      const double delta = step_size * (advantage * score[a] + entropy_coefficient_ * bonus[a]);
      if (!std::isfinite(delta)) {
        throw NumericalFailure("update_reinforce: non-finite update at option " + std::to_string(option.value()) +
                               ", state " + std::to_string(record.state.value()) + ", step " + std::to_string(t) +
                               " (return " + std::to_string(returns[t]) + ", baseline " + std::to_string(b) + ")");
      }
      z[a] += delta;
    }
    b = baseline_decay_ * b + (1.0 - baseline_decay_) * returns[t];
  }
}

std::vector<double> returns_to_go(std::span<const double> rewards, double gamma) {
  std::vector<double> g(rewards.size(), 0.0);
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + gamma * running;
    g[t] = running;
  }
  return g;
}

std::vector<double> log_prob_gradient(std::span<const double> logits, std::size_t action) {
  auto grad = softmax(logits);
  for (double& g : grad) g = -g;
  grad[action] += 1.0;
  return grad;
}

std::vector<double> entropy_gradient(std::span<const double> logits) {
  const auto p = softmax(logits);
  const auto log_p = log_softmax(logits);
  double h = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) h -= p[k] * log_p[k];
  std::vector<double> grad(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) grad[k] = -p[k] * (log_p[k] + h);
  return grad;
}

}  // namespace optionforge
