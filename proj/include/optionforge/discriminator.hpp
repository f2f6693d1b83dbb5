#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "optionforge/env.hpp"
#include "optionforge/option.hpp"
#include "optionforge/types.hpp"

namespace optionforge {

/// What the posterior over options is conditioned on: (s0, s_f) for VIC, a
/// single state for DIAYN, a trajectory digest for VALOR.
enum class DiscriminatorKind { vic_pair, diayn_state, valor_trajectory };

std::string to_string(DiscriminatorKind kind);
DiscriminatorKind discriminator_kind_from_string(const std::string& name);
DiscriminatorKind discriminator_kind_for(Algorithm algorithm);

struct ConditioningKey {
  DiscriminatorKind kind = DiscriminatorKind::diayn_state;
  /// Exact identity used by the tabular backend.
  std::vector<double> identity;
  /// Input vector for the MLP backend.
  std::vector<double> features;
};

ConditioningKey pair_key(const EnvSpec& env, StateId s0, StateId sf);
ConditioningKey state_key(const EnvSpec& env, StateId s);
ConditioningKey trajectory_key(const EnvSpec& env, const Trajectory& trajectory);

/// Start-state features, final-state features, then the mean features of the
/// intermediate states (zeros when there are none).
std::vector<double> trajectory_digest(const EnvSpec& env, const Trajectory& trajectory);

/// Input width of the MLP backend for a kind on an environment.
std::size_t input_dim(DiscriminatorKind kind, const EnvSpec& env);

/// Laplace-smoothed empirical posterior: (counts + alpha) / (total + N alpha).
class TabularBackend {
 public:
  TabularBackend(std::size_t num_options, double alpha = 1.0);

  [[nodiscard]] std::size_t num_options() const { return num_options_; }
  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] const std::map<std::vector<double>, std::vector<double>>& counts() const { return counts_; }

  [[nodiscard]] std::vector<double> distribution(std::span<const double> identity) const;
  void observe(std::span<const double> identity, OptionId option);
  void set_counts(std::vector<double> identity, std::vector<double> counts);

  friend bool operator==(const TabularBackend&, const TabularBackend&) = default;

 private:
  std::size_t num_options_;
  double alpha_;
  std::map<std::vector<double>, std::vector<double>> counts_;
};

/// Fully connected tanh network with a softmax output, trained by plain SGD
/// on the cross-entropy. Parameters are kept in one flat vector: per layer,
/// the row-major weight matrix (out x in) followed by the bias.
class MlpBackend {
 public:
  /// layer_sizes = {input, hidden..., num_options}.
  MlpBackend(std::vector<std::size_t> layer_sizes, std::uint64_t seed);

  [[nodiscard]] const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  [[nodiscard]] std::size_t num_options() const { return sizes_.back(); }
  [[nodiscard]] std::size_t input_size() const { return sizes_.front(); }
  [[nodiscard]] const std::vector<double>& parameters() const { return params_; }
  [[nodiscard]] std::vector<double>& parameters() { return params_; }

  [[nodiscard]] std::vector<double> log_distribution(std::span<const double> input) const;
  [[nodiscard]] std::vector<double> distribution(std::span<const double> input) const;
  /// -ln q(option | input).
  [[nodiscard]] double loss(std::span<const double> input, OptionId option) const;
  /// Gradient of loss() with respect to parameters(), by backpropagation.
  [[nodiscard]] std::vector<double> gradient(std::span<const double> input, OptionId option) const;
  /// One SGD step; returns the loss measured before the step.
  double train_step(std::span<const double> input, OptionId option, double step_size);

  friend bool operator==(const MlpBackend&, const MlpBackend&) = default;

 private:
  void check_input(std::span<const double> input) const;
  /// Activations per layer (input first) and output logits.
  [[nodiscard]] std::vector<std::vector<double>> forward(std::span<const double> input) const;

  std::vector<std::size_t> sizes_;
  std::vector<double> params_;
};

using MlpGradientFn = std::function<std::vector<double>(const MlpBackend&, std::span<const double>, OptionId)>;

/// Maximum relative error between an analytic gradient (backprop by default)
/// and central finite differences with perturbation 1e-5 over all weights.
/// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double gradient_check(const MlpBackend& backend, std::span<const double> input, OptionId option,
                      const MlpGradientFn& analytic = {});

class Discriminator {
 public:
  using Backend = std::variant<TabularBackend, MlpBackend>;

  Discriminator(DiscriminatorKind kind, Backend backend);

  static Discriminator tabular(DiscriminatorKind kind, std::size_t num_options, double alpha = 1.0);
  static Discriminator mlp(DiscriminatorKind kind, const EnvSpec& env, std::size_t num_options,
                           std::vector<std::size_t> hidden, std::uint64_t seed);

  [[nodiscard]] DiscriminatorKind kind() const { return kind_; }
  [[nodiscard]] std::size_t num_options() const;
  [[nodiscard]] const Backend& backend() const { return backend_; }
  [[nodiscard]] Backend& backend() { return backend_; }
  [[nodiscard]] bool is_tabular() const { return std::holds_alternative<TabularBackend>(backend_); }

  [[nodiscard]] std::vector<double> distribution(const ConditioningKey& key) const;
  [[nodiscard]] double predict_log_prob(const ConditioningKey& key, OptionId option) const;
  /// Regresses toward `option`; returns -ln q(option | key) measured before
  /// the update. step_size is ignored by the tabular backend.
  double update(const ConditioningKey& key, OptionId option, double step_size);

  friend bool operator==(const Discriminator&, const Discriminator&) = default;

 private:
  void check(const ConditioningKey& key, OptionId option) const;

  DiscriminatorKind kind_;
  Backend backend_;
};

}  // namespace optionforge
