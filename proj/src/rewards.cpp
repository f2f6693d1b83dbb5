#include "optionforge/rewards.hpp"

#include <cmath>

namespace optionforge {

IntrinsicRewardSpec::IntrinsicRewardSpec(Algorithm algorithm, const EnvSpec& env, const OptionPrior& prior,
                                         const Discriminator& discriminator)
    : algorithm_(algorithm), env_(&env), prior_(&prior), discriminator_(&discriminator) {
  if (discriminator.kind() != discriminator_kind_for(algorithm)) {
    throw ContractViolation("intrinsic reward: " + to_string(algorithm) + " needs a " +
                            to_string(discriminator_kind_for(algorithm)) + " discriminator, got " +
                            to_string(discriminator.kind()));
  }
  if (algorithm != Algorithm::vic && prior.kind() != PriorKind::uniform) {
    throw ContractViolation("intrinsic reward: " + to_string(algorithm) + " requires the fixed uniform prior");
  }
  if (prior.num_options() != discriminator.num_options()) {
    throw ContractViolation("intrinsic reward: prior and discriminator disagree on the option count");
  }
}

namespace {

void require(const IntrinsicRewardSpec& spec, Algorithm algorithm) {
  if (spec.algorithm() != algorithm) {
    throw ContractViolation("intrinsic reward: called " + to_string(algorithm) + " reward on a " +
                            to_string(spec.algorithm()) + " spec");
  }
}

double log_num_options(const IntrinsicRewardSpec& spec) {
  return std::log(static_cast<double>(spec.prior().num_options()));
}

}  // namespace

double r_vic(const IntrinsicRewardSpec& spec, StateId s0, StateId sf, OptionId option) {
  require(spec, Algorithm::vic);
  return spec.discriminator().predict_log_prob(pair_key(spec.env(), s0, sf), option) -
         spec.prior().log_prob(s0, option);
}

double r_diayn(const IntrinsicRewardSpec& spec, StateId s, OptionId option) {
  require(spec, Algorithm::diayn);
  return spec.discriminator().predict_log_prob(state_key(spec.env(), s), option) + log_num_options(spec);
}

double r_valor(const IntrinsicRewardSpec& spec, const Trajectory& trajectory, OptionId option) {
  require(spec, Algorithm::valor);
  return spec.discriminator().predict_log_prob(trajectory_key(spec.env(), trajectory), option) +
         log_num_options(spec);
}

RewardGap reward_gap_analysis(std::size_t num_options) {
  if (num_options == 0) throw ContractViolation("reward_gap_analysis: need at least one option");
  const double log_n = std::log(static_cast<double>(num_options));
  // known: log 1 + log N; unseen: log(1/N) + log N.
  return {std::log(1.0) + log_n, 0.0};
}

}  // namespace optionforge
