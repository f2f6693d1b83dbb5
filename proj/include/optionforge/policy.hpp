#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "optionforge/option.hpp"
#include "optionforge/rng.hpp"
#include "optionforge/types.hpp"

namespace optionforge {

/// Tabular softmax intra-option policies pi(a|s, option), trained by
/// REINFORCE with a per-(option, state) moving-average baseline and an
/// optional entropy bonus.
class IntraOptionPolicy {
 public:
  IntraOptionPolicy(std::size_t num_options, std::size_t num_states, std::size_t num_actions,
                    double entropy_coefficient = 0.0, double baseline_decay = 0.99);

  [[nodiscard]] std::size_t num_options() const { return num_options_; }
  [[nodiscard]] std::size_t num_states() const { return num_states_; }
  [[nodiscard]] std::size_t num_actions() const { return num_actions_; }
  [[nodiscard]] double entropy_coefficient() const { return entropy_coefficient_; }
  [[nodiscard]] double baseline_decay() const { return baseline_decay_; }

  [[nodiscard]] std::span<const double> logits(OptionId option, StateId s) const;
  [[nodiscard]] std::span<double> logits(OptionId option, StateId s);
  [[nodiscard]] const std::vector<double>& all_logits() const { return logits_; }
  [[nodiscard]] const std::vector<double>& all_baselines() const { return baselines_; }
  void set_state(std::vector<double> logits, std::vector<double> baselines);

  [[nodiscard]] std::vector<double> probabilities(StateId s, OptionId option) const;
  [[nodiscard]] double entropy(StateId s, OptionId option) const;
  [[nodiscard]] double baseline(StateId s, OptionId option) const;

  ActionId act(StateId s, OptionId option, Rng& rng) const;
  /// Argmax action, lowest index on ties.
  [[nodiscard]] ActionId greedy(StateId s, OptionId option) const;

  /// One REINFORCE step over a trajectory. `returns[t]` is the return-to-go
  /// from step t. Baselines are read before being moved toward the returns.
  void update_reinforce(const Trajectory& trajectory, std::span<const double> returns, double step_size);

  friend bool operator==(const IntraOptionPolicy&, const IntraOptionPolicy&) = default;

 private:
  [[nodiscard]] std::size_t offset(OptionId option, StateId s) const;

  std::size_t num_options_;
  std::size_t num_states_;
  std::size_t num_actions_;
  double entropy_coefficient_;
  double baseline_decay_;
  std::vector<double> logits_;
  std::vector<double> baselines_;
};

/// G_t = r_t + gamma * G_{t+1}.
std::vector<double> returns_to_go(std::span<const double> rewards, double gamma);

/// d ln softmax(z)[action] / dz.
std::vector<double> log_prob_gradient(std::span<const double> logits, std::size_t action);
/// dH(softmax(z)) / dz.
std::vector<double> entropy_gradient(std::span<const double> logits);

}  // namespace optionforge
