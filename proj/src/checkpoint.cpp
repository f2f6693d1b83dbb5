#include "optionforge/checkpoint.hpp"

#include <fstream>
#include <sstream>

namespace optionforge {

using nlohmann::json;

namespace {

json prior_to_json(const OptionPrior& prior) {
  return {{"kind", prior.kind() == PriorKind::uniform ? "uniform" : "learned"},
          {"num_options", prior.num_options()},
          {"num_states", prior.num_states()},
          {"logits", prior.logits()}};
}

OptionPrior prior_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  const auto options = j.at("num_options").get<std::size_t>();
  if (kind == "uniform") return OptionPrior::uniform(options);
  if (kind != "learned") throw InvalidSpecError("checkpoint: unknown prior kind '" + kind + "'");
  return OptionPrior::from_logits(options, j.at("num_states").get<std::size_t>(),
                                  j.at("logits").get<std::vector<double>>());
}

json policy_to_json(const IntraOptionPolicy& policy) {
  return {{"num_options", policy.num_options()},
          {"num_states", policy.num_states()},
          {"num_actions", policy.num_actions()},
          {"entropy_coefficient", policy.entropy_coefficient()},
          {"baseline_decay", policy.baseline_decay()},
          {"logits", policy.all_logits()},
          {"baselines", policy.all_baselines()}};
}

IntraOptionPolicy policy_from_json(const json& j) {
  IntraOptionPolicy policy(j.at("num_options").get<std::size_t>(), j.at("num_states").get<std::size_t>(),
                           j.at("num_actions").get<std::size_t>(), j.at("entropy_coefficient").get<double>(),
                           j.at("baseline_decay").get<double>());
  policy.set_state(j.at("logits").get<std::vector<double>>(), j.at("baselines").get<std::vector<double>>());
  return policy;
}

json discriminator_to_json(const Discriminator& discriminator) {
  json j{{"kind", to_string(discriminator.kind())}};
  if (const auto* t = std::get_if<TabularBackend>(&discriminator.backend())) {
    j["backend"] = "tabular";
    j["num_options"] = t->num_options();
    j["alpha"] = t->alpha();
    json entries = json::array();
    for (const auto& [key, counts] : t->counts()) entries.push_back({{"key", key}, {"counts", counts}});
    j["entries"] = std::move(entries);
  } else {
    const auto& m = std::get<MlpBackend>(discriminator.backend());
    j["backend"] = "mlp";
    j["layer_sizes"] = m.layer_sizes();
    j["parameters"] = m.parameters();
  }
  return j;
}

Discriminator discriminator_from_json(const json& j) {
  const auto kind = discriminator_kind_from_string(j.at("kind").get<std::string>());
  const auto backend = j.at("backend").get<std::string>();
  if (backend == "tabular") {
    TabularBackend table(j.at("num_options").get<std::size_t>(), j.at("alpha").get<double>());
    for (const auto& entry : j.at("entries")) {
      table.set_counts(entry.at("key").get<std::vector<double>>(), entry.at("counts").get<std::vector<double>>());
    }
    return {kind, std::move(table)};
  }
  if (backend != "mlp") throw InvalidSpecError("checkpoint: unknown discriminator backend '" + backend + "'");
  MlpBackend net(j.at("layer_sizes").get<std::vector<std::size_t>>(), 0);
  auto params = j.at("parameters").get<std::vector<double>>();
  if (params.size() != net.parameters().size()) throw InvalidSpecError("checkpoint: mlp parameter count mismatch");
  net.parameters() = std::move(params);
  return {kind, std::move(net)};
}

}  // namespace

json checkpoint_to_json(const Checkpoint& checkpoint) {
  std::ostringstream env_text;
  write_env(env_text, checkpoint.env);
  return {{"format", "optionforge-checkpoint"},
          {"version", 1},
          {"config", checkpoint.config},
          {"env", env_text.str()},
          {"episodes_done", checkpoint.episodes_done},
          {"vic_start", checkpoint.vic_start.value()},
          {"prior", prior_to_json(checkpoint.prior)},
          {"policy", policy_to_json(checkpoint.policy)},
          {"discriminator", discriminator_to_json(checkpoint.discriminator)},
          {"rng_state", checkpoint.rng_state},
          {"eval_rng_state", checkpoint.eval_rng_state}};
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "optionforge-checkpoint") {
      throw InvalidSpecError("checkpoint: not an optionforge checkpoint");
    }
    std::istringstream env_text(j.at("env").get<std::string>());
    return Checkpoint{j.at("config").get<KeyValues>(),
                      read_env(env_text),
                      j.at("episodes_done").get<std::size_t>(),
                      StateId{j.at("vic_start").get<std::size_t>()},
                      prior_from_json(j.at("prior")),
                      policy_from_json(j.at("policy")),
                      discriminator_from_json(j.at("discriminator")),
                      j.at("rng_state").get<std::string>(),
                      j.at("eval_rng_state").get<std::string>()};
  } catch (const json::exception& e) {
    throw InvalidSpecError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << checkpoint_to_json(checkpoint).dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidSpecError("cannot read checkpoint " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidSpecError("checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace optionforge
