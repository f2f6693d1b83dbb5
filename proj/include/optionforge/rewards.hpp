#pragma once

#include <cstddef>

#include "optionforge/discriminator.hpp"
#include "optionforge/env.hpp"
#include "optionforge/option.hpp"

namespace optionforge {

/// Read-only view of the pieces an intrinsic reward is computed from. All
/// rewards are in nats.
class IntrinsicRewardSpec {
 public:
  /// Throws ContractViolation when the discriminator kind does not match the
  /// algorithm, or when DIAYN/VALOR are given a learned prior.
  IntrinsicRewardSpec(Algorithm algorithm, const EnvSpec& env, const OptionPrior& prior,
                      const Discriminator& discriminator);

  [[nodiscard]] Algorithm algorithm() const { return algorithm_; }
  [[nodiscard]] const EnvSpec& env() const { return *env_; }
  [[nodiscard]] const OptionPrior& prior() const { return *prior_; }
  [[nodiscard]] const Discriminator& discriminator() const { return *discriminator_; }

 private:
  Algorithm algorithm_;
  const EnvSpec* env_;
  const OptionPrior* prior_;
  const Discriminator* discriminator_;
};

/// log q(option | s0, sf) - log p^C(option | s0).
double r_vic(const IntrinsicRewardSpec& spec, StateId s0, StateId sf, OptionId option);

/// log q(option | s) + ln N. The policy-entropy term is not part of it.
double r_diayn(const IntrinsicRewardSpec& spec, StateId s, OptionId option);

/// log q(option | digest(trajectory)) + ln N.
double r_valor(const IntrinsicRewardSpec& spec, const Trajectory& trajectory, OptionId option);

struct RewardGap {
  double known = 0.0;
  double unseen = 0.0;
};

/// Reward for a perfectly discriminated state (posterior 1) and for a never
/// seen state (posterior 1/N) under a uniform prior over N options.
RewardGap reward_gap_analysis(std::size_t num_options);

}  // namespace optionforge
