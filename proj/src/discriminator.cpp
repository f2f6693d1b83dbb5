#include "optionforge/discriminator.hpp"

#include <algorithm>
#include <cmath>

namespace optionforge {

std::string to_string(DiscriminatorKind kind) {
  switch (kind) {
    case DiscriminatorKind::vic_pair: return "vic_pair";
    case DiscriminatorKind::diayn_state: return "diayn_state";
    case DiscriminatorKind::valor_trajectory: return "valor_trajectory";
  }
  return "unknown";
}

DiscriminatorKind discriminator_kind_from_string(const std::string& name) {
  if (name == "vic_pair") return DiscriminatorKind::vic_pair;
  if (name == "diayn_state") return DiscriminatorKind::diayn_state;
  if (name == "valor_trajectory") return DiscriminatorKind::valor_trajectory;
  throw InvalidSpecError("unknown discriminator kind '" + name + "'");
}

DiscriminatorKind discriminator_kind_for(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::vic: return DiscriminatorKind::vic_pair;
    case Algorithm::diayn: return DiscriminatorKind::diayn_state;
    case Algorithm::valor: return DiscriminatorKind::valor_trajectory;
  }
  throw InvalidSpecError("unknown algorithm");
}

ConditioningKey pair_key(const EnvSpec& env, StateId s0, StateId sf) {
  ConditioningKey key{DiscriminatorKind::vic_pair,
                      {static_cast<double>(s0.value()), static_cast<double>(sf.value())},
                      {}};
  const auto f0 = env.feature_of(s0);
  const auto ff = env.feature_of(sf);
  key.features.assign(f0.begin(), f0.end());
  key.features.insert(key.features.end(), ff.begin(), ff.end());
  return key;
}

ConditioningKey state_key(const EnvSpec& env, StateId s) {
  const auto f = env.feature_of(s);
  return {DiscriminatorKind::diayn_state, {static_cast<double>(s.value())}, {f.begin(), f.end()}};
}

std::vector<double> trajectory_digest(const EnvSpec& env, const Trajectory& trajectory) {
  const std::size_t d = env.feature_dim;
  std::vector<double> digest(3 * d, 0.0);
  const auto f0 = env.feature_of(trajectory.start);
  const auto ff = env.feature_of(trajectory.final_state);
  std::copy(f0.begin(), f0.end(), digest.begin());
  std::copy(ff.begin(), ff.end(), digest.begin() + static_cast<std::ptrdiff_t>(d));
  // Intermediate states are s_1 .. s_{T-1}.
  const std::size_t intermediates = trajectory.length() > 0 ? trajectory.length() - 1 : 0;
  if (intermediates > 0) {
    for (std::size_t t = 0; t < intermediates; ++t) {
      const auto f = env.feature_of(trajectory.steps[t].next_state);
      for (std::size_t k = 0; k < d; ++k) digest[2 * d + k] += f[k];
    }
    for (std::size_t k = 0; k < d; ++k) digest[2 * d + k] /= static_cast<double>(intermediates);
  }
  return digest;
}

ConditioningKey trajectory_key(const EnvSpec& env, const Trajectory& trajectory) {
  auto digest = trajectory_digest(env, trajectory);
  return {DiscriminatorKind::valor_trajectory, digest, digest};
}

std::size_t input_dim(DiscriminatorKind kind, const EnvSpec& env) {
  switch (kind) {
    case DiscriminatorKind::vic_pair: return 2 * env.feature_dim;
    case DiscriminatorKind::diayn_state: return env.feature_dim;
    case DiscriminatorKind::valor_trajectory: return 3 * env.feature_dim;
  }
  return 0;
}

// ---------------------------------------------------------------------------

TabularBackend::TabularBackend(std::size_t num_options, double alpha) : num_options_(num_options), alpha_(alpha) {
  if (num_options == 0) throw InvalidSpecError("tabular discriminator: need at least one option");
  if (!(alpha > 0.0)) throw InvalidSpecError("tabular discriminator: smoothing must be positive");
}

std::vector<double> TabularBackend::distribution(std::span<const double> identity) const {
  const auto it = counts_.find(std::vector<double>(identity.begin(), identity.end()));
  const double n_alpha = static_cast<double>(num_options_) * alpha_;
  if (it == counts_.end()) return std::vector<double>(num_options_, alpha_ / n_alpha);
  double total = 0.0;
  for (double c : it->second) total += c;
  std::vector<double> q(num_options_);
  for (std::size_t k = 0; k < num_options_; ++k) q[k] = (it->second[k] + alpha_) / (total + n_alpha);
  return q;
}

void TabularBackend::observe(std::span<const double> identity, OptionId option) {
  auto& row = counts_[std::vector<double>(identity.begin(), identity.end())];
  if (row.empty()) row.assign(num_options_, 0.0);
  row[option.value()] += 1.0;
}

void TabularBackend::set_counts(std::vector<double> identity, std::vector<double> counts) {
  if (counts.size() != num_options_) throw InvalidSpecError("tabular discriminator: counts size mismatch");
  if (std::any_of(counts.begin(), counts.end(), [](double c) { return !(c >= 0.0); })) {
    throw InvalidSpecError("tabular discriminator: negative count");
  }
  counts_[std::move(identity)] = std::move(counts);
}

// ---------------------------------------------------------------------------

MlpBackend::MlpBackend(std::vector<std::size_t> layer_sizes, std::uint64_t seed) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw InvalidSpecError("mlp: need input and output sizes");
  if (std::any_of(sizes_.begin(), sizes_.end(), [](std::size_t n) { return n == 0; })) {
    throw InvalidSpecError("mlp: zero-width layer");
  }
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    // Glorot-uniform weights, zero biases.
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t i = 0; i < in * out; ++i) params_.push_back((2.0 * rng.uniform() - 1.0) * limit);
    params_.insert(params_.end(), out, 0.0);
  }
}

void MlpBackend::check_input(std::span<const double> input) const {
  if (input.size() != sizes_.front()) {
    throw ContractViolation("mlp: input has " + std::to_string(input.size()) + " entries, expected " +
                            std::to_string(sizes_.front()));
  }
}

std::vector<std::vector<double>> MlpBackend::forward(std::span<const double> input) const {
  check_input(input);
  std::vector<std::vector<double>> activations{{input.begin(), input.end()}};
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const double* w = params_.data() + offset;
    const double* b = w + in * out;
    const auto& a = activations.back();
    std::vector<double> z(out);
    for (std::size_t i = 0; i < out; ++i) {
      double sum = b[i];
      for (std::size_t j = 0; j < in; ++j) sum += w[i * in + j] * a[j];
      z[i] = sum;
    }
    const bool hidden = l + 2 < sizes_.size();
    if (hidden) {
      for (double& v : z) v = std::tanh(v);
    }
    activations.push_back(std::move(z));
    offset += in * out + out;
  }
  return activations;
}

std::vector<double> MlpBackend::log_distribution(std::span<const double> input) const {
  return log_softmax(forward(input).back());
}

std::vector<double> MlpBackend::distribution(std::span<const double> input) const {
  return softmax(forward(input).back());
}

double MlpBackend::loss(std::span<const double> input, OptionId option) const {
  if (option.value() >= num_options()) throw ContractViolation("mlp: option out of range");
  return -log_distribution(input)[option.value()];
}

std::vector<double> MlpBackend::gradient(std::span<const double> input, OptionId option) const {
  if (option.value() >= num_options()) throw ContractViolation("mlp: option out of range");
  const auto activations = forward(input);
  std::vector<double> grad(params_.size(), 0.0);

  // dL/dlogits = softmax - onehot.
  std::vector<double> delta = softmax(activations.back());
  delta[option.value()] -= 1.0;

  std::size_t offset = params_.size();
  for (std::size_t l = sizes_.size() - 1; l-- > 0;) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    offset -= in * out + out;
    const double* w = params_.data() + offset;
    double* gw = grad.data() + offset;
    double* gb = gw + in * out;
    const auto& a = activations[l];
    for (std::size_t i = 0; i < out; ++i) {
      for (std::size_t j = 0; j < in; ++j) gw[i * in + j] = delta[i] * a[j];
      gb[i] = delta[i];
    }
    if (l == 0) break;
    std::vector<double> previous(in, 0.0);
    for (std::size_t j = 0; j < in; ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < out; ++i) sum += w[i * in + j] * delta[i];
      previous[j] = sum * (1.0 - a[j] * a[j]);
    }
    delta = std::move(previous);
  }
  return grad;
}

double MlpBackend::train_step(std::span<const double> input, OptionId option, double step_size) {
  const double before = loss(input, option);
  const auto grad = gradient(input, option);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw NumericalFailure("mlp: non-finite gradient at parameter " + std::to_string(i) + " (loss " +
                             std::to_string(before) + ", option " + std::to_string(option.value()) + ")");
    }
  }
  for (std::size_t i = 0; i < grad.size(); ++i) params_[i] -= step_size * grad[i];
  return before;
}

double gradient_check(const MlpBackend& backend, std::span<const double> input, OptionId option,
                      const MlpGradientFn& analytic) {
  constexpr double kStep = 1e-5;
  constexpr double kFloor = 1e-8;
  const auto grad = analytic ? analytic(backend, input, option) : backend.gradient(input, option);
  if (grad.size() != backend.parameters().size()) throw ContractViolation("gradient_check: gradient size mismatch");
  MlpBackend probe = backend;
  double worst = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double original = probe.parameters()[i];
    probe.parameters()[i] = original + kStep;
    const double up = probe.loss(input, option);
    probe.parameters()[i] = original - kStep;
    const double down = probe.loss(input, option);
    probe.parameters()[i] = original;
    const double numeric = (up - down) / (2.0 * kStep);
    const double scale = std::max({std::abs(grad[i]), std::abs(numeric), kFloor});
    worst = std::max(worst, std::abs(grad[i] - numeric) / scale);
  }
  return worst;
}

// ---------------------------------------------------------------------------

Discriminator::Discriminator(DiscriminatorKind kind, Backend backend) : kind_(kind), backend_(std::move(backend)) {}

Discriminator Discriminator::tabular(DiscriminatorKind kind, std::size_t num_options, double alpha) {
  return {kind, TabularBackend(num_options, alpha)};
}

Discriminator Discriminator::mlp(DiscriminatorKind kind, const EnvSpec& env, std::size_t num_options,
                                 std::vector<std::size_t> hidden, std::uint64_t seed) {
  std::vector<std::size_t> sizes{input_dim(kind, env)};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(num_options);
  return {kind, MlpBackend(std::move(sizes), seed)};
}

std::size_t Discriminator::num_options() const {
  return std::visit([](const auto& b) { return b.num_options(); }, backend_);
}

void Discriminator::check(const ConditioningKey& key, OptionId option) const {
  if (key.kind != kind_) {
    throw ContractViolation("discriminator: key kind " + to_string(key.kind) + " does not match " + to_string(kind_));
  }
  if (option.value() >= num_options()) throw ContractViolation("discriminator: option out of range");
}

std::vector<double> Discriminator::distribution(const ConditioningKey& key) const {
  check(key, OptionId{0});
  if (const auto* t = std::get_if<TabularBackend>(&backend_)) return t->distribution(key.identity);
  return std::get<MlpBackend>(backend_).distribution(key.features);
}

double Discriminator::predict_log_prob(const ConditioningKey& key, OptionId option) const {
  check(key, option);
  if (const auto* t = std::get_if<TabularBackend>(&backend_)) {
    return std::log(t->distribution(key.identity)[option.value()]);
  }
  return std::get<MlpBackend>(backend_).log_distribution(key.features)[option.value()];
}

double Discriminator::update(const ConditioningKey& key, OptionId option, double step_size) {
  check(key, option);
  if (auto* t = std::get_if<TabularBackend>(&backend_)) {
    const double before = -std::log(t->distribution(key.identity)[option.value()]);
    t->observe(key.identity, option);
    return before;
  }
  if (!(step_size > 0.0)) throw ContractViolation("discriminator: step_size must be positive");
  return std::get<MlpBackend>(backend_).train_step(key.features, option, step_size);
}

}  // namespace optionforge
