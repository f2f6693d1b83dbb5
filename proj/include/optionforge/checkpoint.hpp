#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "optionforge/discriminator.hpp"
#include "optionforge/env.hpp"
#include "optionforge/option.hpp"
#include "optionforge/policy.hpp"
#include "optionforge/text.hpp"

namespace optionforge {

/// Complete trainer state: reloading it yields a trainer that continues the
/// run exactly where it stopped.
struct Checkpoint {
  KeyValues config;
  EnvSpec env;
  std::size_t episodes_done = 0;
  StateId vic_start;
  OptionPrior prior;
  IntraOptionPolicy policy;
  Discriminator discriminator;
  std::string rng_state;
  std::string eval_rng_state;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& json);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace optionforge
