#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "optionforge/env.hpp"
#include "optionforge/option.hpp"
#include "optionforge/policy.hpp"

namespace optionforge {

inline constexpr std::size_t kMaxExactStates = 10'000;
inline constexpr std::size_t kMaxExactHorizon = 200;

/// Joint p(option, s_f) for one start state.
class JointDistribution {
 public:
  JointDistribution(std::size_t num_options, std::size_t num_states, std::vector<double> table);

  /// Joint from prior probabilities and per-option final-state distributions.
  static JointDistribution from_channel(std::span<const double> prior, const std::vector<std::vector<double>>& channel);

  [[nodiscard]] std::size_t num_options() const { return num_options_; }
  [[nodiscard]] std::size_t num_states() const { return num_states_; }
  [[nodiscard]] double at(std::size_t option, std::size_t state) const { return table_[option * num_states_ + state]; }

  [[nodiscard]] std::vector<double> option_marginal() const;
  [[nodiscard]] std::vector<double> state_marginal() const;

  /// H(s_f) - H(s_f | option).
  [[nodiscard]] double mi_state_form() const;
  /// H(option) - H(option | s_f).
  [[nodiscard]] double mi_option_form() const;

 private:
  std::size_t num_options_;
  std::size_t num_states_;
  std::vector<double> table_;
};

/// Exact distribution of the state after `horizon` steps of pi(.|., option)
/// from s0. Terminal states absorb.
std::vector<double> exact_final_state_distribution(const EnvSpec& env, const IntraOptionPolicy& policy,
                                                   OptionId option, StateId s0, std::size_t horizon);

/// Same, under greedy (argmax) action selection.
std::vector<double> exact_final_state_distribution_greedy(const EnvSpec& env, const IntraOptionPolicy& policy,
                                                          OptionId option, StateId s0, std::size_t horizon);

/// Option-to-final-state channel: one row per option.
std::vector<std::vector<double>> exact_channel(const EnvSpec& env, const IntraOptionPolicy& policy, StateId s0,
                                               std::size_t horizon);

JointDistribution exact_joint(const EnvSpec& env, const IntraOptionPolicy& policy, const OptionPrior& prior,
                              StateId s0, std::size_t horizon);

/// I(option; s_f | s0) in nats.
double exact_mi(const EnvSpec& env, const IntraOptionPolicy& policy, const OptionPrior& prior, StateId s0,
                std::size_t horizon);

/// Plug-in MI of (option, state) samples. Non-empty input required.
double empirical_mi(std::span<const std::pair<OptionId, StateId>> samples, std::size_t num_options,
                    std::size_t num_states);

struct CapacityResult {
  std::vector<double> prior;
  double capacity = 0.0;
  /// MI after each iteration, starting from the uniform prior.
  std::vector<double> history;
  std::size_t iterations = 0;
  /// max_k D(channel_k || output) - capacity; zero at the optimum.
  double upper_bound_gap = 0.0;
};

/// Blahut-Arimoto iteration on a channel (rows: options). Starts from the
/// uniform prior and stops once an iteration improves the MI by less than
/// `tolerance`.
CapacityResult channel_capacity(const std::vector<std::vector<double>>& channel, double tolerance,
                                std::size_t max_iterations = 100'000);

struct OptimalPrior {
  OptionPrior prior;
  double capacity;
  CapacityResult details;
};

/// MI-maximizing prior at s0 for fixed intra-option policies. The returned
/// prior is a learned-kind prior whose row at s0 holds log-probabilities;
/// other rows are uniform.
OptimalPrior optimal_prior(const EnvSpec& env, const IntraOptionPolicy& policy, StateId s0, std::size_t horizon,
                           double tolerance);

struct Occupancy {
  std::vector<double> state_counts;
  /// Fraction of visits per room; empty when the environment has no rooms.
  std::vector<double> room_fractions;
  double coverage = 0.0;
  std::size_t total_visits = 0;
};

/// Visit histogram over s_0 .. s_T of every trajectory.
Occupancy occupancy_metrics(std::span<const Trajectory> trajectories, const EnvSpec& env);

/// Fraction of trajectories that hold one state for at least 90% of the
/// steps after the first 10% of the trajectory.
double detect_static_collapse(std::span<const Trajectory> trajectories);

/// True when a single trajectory meets the static-state criterion.
bool is_static(const Trajectory& trajectory);

}  // namespace optionforge
