#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optionforge/rng.hpp"
#include "optionforge/types.hpp"

namespace optionforge {

/// Row/column placement of every state, for grid-shaped environments.
struct GridLayout {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_of;
  std::vector<std::size_t> col_of;

  friend bool operator==(const GridLayout&, const GridLayout&) = default;
};

/// Fully enumerable MDP. Immutable after construction (validate() is called
/// by every factory and by the loader) and safe to share between threads.
class EnvSpec {
 public:
  std::string name;
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  /// Flat P[s][a][s'], row-major.
  std::vector<double> transition;
  StateId initial_state{0};
  std::vector<bool> terminal;
  std::size_t horizon_default = 1;
  /// Room label per state; empty when the layout has no rooms.
  std::vector<int> room_of;
  std::size_t feature_dim = 0;
  /// Flat feature_of[s][k].
  std::vector<double> features;
  std::optional<GridLayout> layout;

  [[nodiscard]] double prob(StateId s, ActionId a, StateId next) const {
    return transition[(s.value() * num_actions + a.value()) * num_states + next.value()];
  }
  [[nodiscard]] std::span<const double> row(StateId s, ActionId a) const {
    return {transition.data() + (s.value() * num_actions + a.value()) * num_states, num_states};
  }
  [[nodiscard]] std::span<const double> feature_of(StateId s) const {
    return {features.data() + s.value() * feature_dim, feature_dim};
  }
  [[nodiscard]] bool is_terminal(StateId s) const { return terminal[s.value()]; }
  [[nodiscard]] bool has_rooms() const { return !room_of.empty(); }
  [[nodiscard]] std::size_t num_rooms() const;

  /// Throws InvalidSpecError when any structural invariant fails.
  void validate() const;

  friend bool operator==(const EnvSpec&, const EnvSpec&) = default;
};

struct StepResult {
  StateId next_state;
  bool terminated = false;
};

inline constexpr double kRowSumTolerance = 1e-12;

// Four rooms on a side x side grid. Walls sit between cells, so every cell is
// a state; each pair of adjacent rooms is joined by a single doorway.
// Actions: 0 up, 1 down, 2 left, 3 right. Starts at (0, 0) in room 0.
EnvSpec make_four_rooms(std::size_t side);

// Line of n states with actions 0 left, 1 right. The intended move happens
// with probability 1 - slip and is reversed with probability slip; moves off
// either end keep the state.
EnvSpec make_chain(std::size_t n, double slip, std::size_t start = 0);

// grid x grid discretized point mass. Actions: 0 up, 1 down, 2 left, 3 right,
// 4 stay. Features are cell centroids in [-1, 1]^2; starts at the center.
EnvSpec make_point_mass(std::size_t grid);

StepResult step(const EnvSpec& env, StateId s, ActionId a, Rng& rng);

/// States reachable from `from` under any action sequence.
std::vector<bool> reachable_states(const EnvSpec& env, StateId from);

// Key-value text form: env.name=..., env.transition.<s>.<a>=<s'>:<p> ...
void write_env(std::ostream& out, const EnvSpec& env);
EnvSpec read_env(std::istream& in);
void save_env(const std::filesystem::path& path, const EnvSpec& env);
EnvSpec load_env(const std::filesystem::path& path);

}  // namespace optionforge
