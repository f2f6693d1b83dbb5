#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "optionforge/rng.hpp"
#include "optionforge/types.hpp"

namespace optionforge {

enum class PriorKind { uniform, learned };

/// Distribution over options given the start state. The uniform kind is the
/// fixed prior used by DIAYN and VALOR; the learned kind holds tabular
/// per-state logits and is reinforced by VIC.
class OptionPrior {
 public:
  static OptionPrior uniform(std::size_t num_options);
  /// Learned prior with all-zero logits (uniform at initialization).
  static OptionPrior learned(std::size_t num_options, std::size_t num_states);
  static OptionPrior from_logits(std::size_t num_options, std::size_t num_states, std::vector<double> logits);

  [[nodiscard]] PriorKind kind() const { return kind_; }
  [[nodiscard]] std::size_t num_options() const { return num_options_; }
  [[nodiscard]] std::size_t num_states() const { return num_states_; }
  [[nodiscard]] const std::vector<double>& logits() const { return logits_; }

  [[nodiscard]] std::vector<double> probabilities(StateId s0) const;
  [[nodiscard]] double log_prob(StateId s0, OptionId option) const;
  /// Shannon entropy in nats at s0.
  [[nodiscard]] double entropy(StateId s0) const;

  OptionId sample(StateId s0, Rng& rng) const;

  /// Score-function step: logits[s0] += step_size * reward * grad log p(option|s0).
  void reinforce(StateId s0, OptionId option, double reward, double step_size);

  friend bool operator==(const OptionPrior&, const OptionPrior&) = default;

 private:
  OptionPrior(PriorKind kind, std::size_t num_options, std::size_t num_states, std::vector<double> logits);
  [[nodiscard]] std::span<const double> row(StateId s0) const;
  void check(StateId s0, OptionId option) const;

  PriorKind kind_ = PriorKind::uniform;
  std::size_t num_options_ = 1;
  std::size_t num_states_ = 0;
  std::vector<double> logits_;
};

OptionId sample_option(const OptionPrior& prior, StateId s0, Rng& rng);
double prior_log_prob(const OptionPrior& prior, StateId s0, OptionId option);
void reinforce_prior(OptionPrior& prior, StateId s0, OptionId option, double reward, double step_size);

struct TransitionRecord {
  StateId state;
  ActionId action;
  StateId next_state;

  friend bool operator==(const TransitionRecord&, const TransitionRecord&) = default;
};

/// One option execution.
struct Trajectory {
  OptionId option;
  StateId start;
  std::vector<TransitionRecord> steps;
  StateId final_state;
  double intrinsic_return = 0.0;

  [[nodiscard]] std::size_t length() const { return steps.size(); }
  /// start followed by the next_state of every step.
  [[nodiscard]] std::vector<StateId> visited_states() const;
  /// Throws ContractViolation when the chain or horizon invariants fail.
  void validate(std::size_t horizon) const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Numerically stable softmax helpers shared by the policy and discriminator.
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);
double entropy_of(std::span<const double> probabilities);

}  // namespace optionforge
