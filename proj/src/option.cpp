#include "optionforge/option.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace optionforge {

std::vector<double> log_softmax(std::span<const double> logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - max);
  const double log_norm = max + std::log(total);
  std::vector<double> out(logits.size());
  std::transform(logits.begin(), logits.end(), out.begin(), [log_norm](double z) { return z - log_norm; });
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  std::transform(logits.begin(), logits.end(), out.begin(), [max](double z) { return std::exp(z - max); });
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& p : out) p /= total;
  return out;
}

double entropy_of(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

OptionPrior::OptionPrior(PriorKind kind, std::size_t num_options, std::size_t num_states, std::vector<double> logits)
    : kind_(kind), num_options_(num_options), num_states_(num_states), logits_(std::move(logits)) {
  if (num_options_ == 0) throw InvalidSpecError("option prior: need at least one option");
}

OptionPrior OptionPrior::uniform(std::size_t num_options) {
  return OptionPrior(PriorKind::uniform, num_options, 0, {});
}

OptionPrior OptionPrior::learned(std::size_t num_options, std::size_t num_states) {
  return OptionPrior(PriorKind::learned, num_options, num_states, std::vector<double>(num_options * num_states, 0.0));
}

OptionPrior OptionPrior::from_logits(std::size_t num_options, std::size_t num_states, std::vector<double> logits) {
  if (logits.size() != num_options * num_states) throw InvalidSpecError("option prior: logits size mismatch");
  return OptionPrior(PriorKind::learned, num_options, num_states, std::move(logits));
}

std::span<const double> OptionPrior::row(StateId s0) const {
  return {logits_.data() + s0.value() * num_options_, num_options_};
}

void OptionPrior::check(StateId s0, OptionId option) const {
  if (kind_ == PriorKind::learned && s0.value() >= num_states_) {
    throw ContractViolation("option prior: state " + std::to_string(s0.value()) + " out of range");
  }
  if (option.value() >= num_options_) {
    throw ContractViolation("option prior: option " + std::to_string(option.value()) + " out of range");
  }
}

std::vector<double> OptionPrior::probabilities(StateId s0) const {
  check(s0, OptionId{0});
  if (kind_ == PriorKind::uniform) return std::vector<double>(num_options_, 1.0 / static_cast<double>(num_options_));
  return softmax(row(s0));
}

double OptionPrior::log_prob(StateId s0, OptionId option) const {
  check(s0, option);
  if (kind_ == PriorKind::uniform) return -std::log(static_cast<double>(num_options_));
  return log_softmax(row(s0))[option.value()];
}

double OptionPrior::entropy(StateId s0) const {
  if (kind_ == PriorKind::uniform) return std::log(static_cast<double>(num_options_));
  return entropy_of(probabilities(s0));
}

OptionId OptionPrior::sample(StateId s0, Rng& rng) const {
  if (num_options_ == 1) {
    check(s0, OptionId{0});
    return OptionId{0};
  }
  const auto p = probabilities(s0);
  return OptionId{rng.categorical(p)};
}

void OptionPrior::reinforce(StateId s0, OptionId option, double reward, double step_size) {
  if (kind_ != PriorKind::learned) throw ContractViolation("reinforce_prior: uniform prior is fixed");
  if (!(step_size > 0.0)) throw ContractViolation("reinforce_prior: step_size must be positive");
  check(s0, option);
  if (!std::isfinite(reward)) throw NumericalFailure("reinforce_prior: non-finite reward");
  const auto p = softmax(row(s0));
  double* z = logits_.data() + s0.value() * num_options_;
  for (std::size_t k = 0; k < num_options_; ++k) {
    const double score = (k == option.value() ? 1.0 : 0.0) - p[k];
    z[k] += step_size * reward * score;
  }
}

OptionId sample_option(const OptionPrior& prior, StateId s0, Rng& rng) { return prior.sample(s0, rng); }

double prior_log_prob(const OptionPrior& prior, StateId s0, OptionId option) { return prior.log_prob(s0, option); }

void reinforce_prior(OptionPrior& prior, StateId s0, OptionId option, double reward, double step_size) {
  prior.reinforce(s0, option, reward, step_size);
}

std::vector<StateId> Trajectory::visited_states() const {
  std::vector<StateId> states{start};
  for (const auto& s : steps) states.push_back(s.next_state);
  return states;
}

void Trajectory::validate(std::size_t horizon) const {
  if (steps.size() > horizon) throw ContractViolation("trajectory longer than horizon");
  if (steps.empty()) {
    if (final_state != start) throw ContractViolation("empty trajectory must end at its start");
    return;
  }
  if (steps.front().state != start) throw ContractViolation("trajectory does not begin at its start state");
  for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
    if (steps[k].next_state != steps[k + 1].state) throw ContractViolation("trajectory steps do not chain");
  }
  if (steps.back().next_state != final_state) throw ContractViolation("final_state differs from last next_state");
}

}  // namespace optionforge
