#include "optionforge/env.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "optionforge/text.hpp"

namespace optionforge {

namespace {

constexpr std::size_t kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4;

// Centroid of cell i out of n equal cells covering [-1, 1].
double centroid(std::size_t i, std::size_t n) {
  return -1.0 + (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
}

struct GridBuilder {
  std::size_t rows;
  std::size_t cols;
  std::size_t actions;

  [[nodiscard]] std::size_t index(std::size_t r, std::size_t c) const { return r * cols + c; }

  EnvSpec skeleton(std::string name) const {
    EnvSpec env;
    env.name = std::move(name);
    env.num_states = rows * cols;
    env.num_actions = actions;
    env.transition.assign(env.num_states * actions * env.num_states, 0.0);
    env.terminal.assign(env.num_states, false);
    env.feature_dim = 2;
    env.features.resize(env.num_states * 2);
    GridLayout layout{rows, cols, {}, {}};
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        layout.row_of.push_back(r);
        layout.col_of.push_back(c);
        env.features[index(r, c) * 2] = centroid(c, cols);
        // Row 0 is the top of the grid.
        env.features[index(r, c) * 2 + 1] = -centroid(r, rows);
      }
    }
    env.layout = std::move(layout);
    return env;
  }

  // Target cell of a move, ignoring walls; nullopt when leaving the grid.
  [[nodiscard]] std::optional<std::pair<std::size_t, std::size_t>> target(std::size_t r, std::size_t c,
                                                                          std::size_t action) const {
    switch (action) {
      case kUp: return r == 0 ? std::nullopt : std::optional{std::pair{r - 1, c}};
      case kDown: return r + 1 == rows ? std::nullopt : std::optional{std::pair{r + 1, c}};
      case kLeft: return c == 0 ? std::nullopt : std::optional{std::pair{r, c - 1}};
      case kRight: return c + 1 == cols ? std::nullopt : std::optional{std::pair{r, c + 1}};
      default: return std::pair{r, c};
    }
  }
};

void set_prob(EnvSpec& env, std::size_t s, std::size_t a, std::size_t next, double p) {
  env.transition[(s * env.num_actions + a) * env.num_states + next] += p;
}

}  // namespace

std::size_t EnvSpec::num_rooms() const {
  if (room_of.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(room_of.begin(), room_of.end())) + 1;
}

void EnvSpec::validate() const {
  if (num_states == 0 || num_actions == 0) throw InvalidSpecError(name + ": empty state or action set");
  if (transition.size() != num_states * num_actions * num_states) {
    throw InvalidSpecError(name + ": transition tensor has the wrong size");
  }
  for (std::size_t s = 0; s < num_states; ++s) {
    for (std::size_t a = 0; a < num_actions; ++a) {
      double total = 0.0;
      for (double p : row(StateId{s}, ActionId{a})) {
        if (!(p >= 0.0 && p <= 1.0)) {
          throw InvalidSpecError(name + ": probability outside [0,1] at s=" + std::to_string(s));
        }
        total += p;
      }
      if (std::abs(total - 1.0) > kRowSumTolerance) {
        throw InvalidSpecError(name + ": row P[" + std::to_string(s) + "][" + std::to_string(a) +
                               "] sums to " + format_double(total));
      }
    }
  }
  if (initial_state.value() >= num_states) throw InvalidSpecError(name + ": initial state out of range");
  if (terminal.size() != num_states) throw InvalidSpecError(name + ": terminal mask has the wrong size");
  if (terminal[initial_state.value()]) throw InvalidSpecError(name + ": initial state is terminal");
  if (horizon_default == 0) throw InvalidSpecError(name + ": horizon_default must be positive");
  if (!room_of.empty() && room_of.size() != num_states) throw InvalidSpecError(name + ": room map size");
  if (std::any_of(room_of.begin(), room_of.end(), [](int r) { return r < 0; })) {
    throw InvalidSpecError(name + ": negative room label");
  }
  if (features.size() != num_states * feature_dim) throw InvalidSpecError(name + ": feature table size");
  if (layout) {
    if (layout->row_of.size() != num_states || layout->col_of.size() != num_states) {
      throw InvalidSpecError(name + ": layout size");
    }
    for (std::size_t s = 0; s < num_states; ++s) {
      if (layout->row_of[s] >= layout->rows || layout->col_of[s] >= layout->cols) {
        throw InvalidSpecError(name + ": layout cell out of range");
      }
    }
  }
}

EnvSpec make_four_rooms(std::size_t side) {
  if (side < 5) throw InvalidSpecError("four_rooms: side must be at least 5");
  const GridBuilder grid{side, side, 4};
  EnvSpec env = grid.skeleton("four_rooms");
  env.horizon_default = 100;

  const std::size_t mid = side / 2;
  auto room = [mid](std::size_t r, std::size_t c) { return static_cast<int>((r >= mid ? 2 : 0) + (c >= mid ? 1 : 0)); };

  // Doorways sit at the middle of each wall segment.
  const std::size_t top_door_row = mid / 2;
  const std::size_t bottom_door_row = mid + (side - mid) / 2;
  const std::size_t left_door_col = mid / 2;
  const std::size_t right_door_col = mid + (side - mid) / 2;
  std::set<std::pair<std::size_t, std::size_t>> doorways;
  auto open = [&](std::size_t a, std::size_t b) {
    doorways.insert({a, b});
    doorways.insert({b, a});
  };
  open(grid.index(top_door_row, mid - 1), grid.index(top_door_row, mid));
  open(grid.index(bottom_door_row, mid - 1), grid.index(bottom_door_row, mid));
  open(grid.index(mid - 1, left_door_col), grid.index(mid, left_door_col));
  open(grid.index(mid - 1, right_door_col), grid.index(mid, right_door_col));

  env.room_of.resize(env.num_states);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const std::size_t s = grid.index(r, c);
      env.room_of[s] = room(r, c);
      for (std::size_t a = 0; a < 4; ++a) {
        std::size_t next = s;
        if (auto t = grid.target(r, c, a)) {
          const std::size_t candidate = grid.index(t->first, t->second);
          if (room(t->first, t->second) == room(r, c) || doorways.contains({s, candidate})) next = candidate;
        }
        set_prob(env, s, a, next, 1.0);
      }
    }
  }
  env.initial_state = StateId{0};
  env.validate();
  return env;
}

EnvSpec make_chain(std::size_t n, double slip, std::size_t start) {
  if (n < 2) throw InvalidSpecError("chain: n must be at least 2");
  if (!(slip >= 0.0 && slip <= 0.5)) throw InvalidSpecError("chain: slip must lie in [0, 0.5]");
  if (start >= n) throw InvalidSpecError("chain: start out of range");
  EnvSpec env;
  env.name = "chain";
  env.num_states = n;
  env.num_actions = 2;
  env.transition.assign(n * 2 * n, 0.0);
  env.terminal.assign(n, false);
  env.horizon_default = 20;
  env.feature_dim = 1;
  env.layout = GridLayout{1, n, std::vector<std::size_t>(n, 0), {}};
  for (std::size_t s = 0; s < n; ++s) {
    env.features.push_back(centroid(s, n));
    env.layout->col_of.push_back(s);
    const std::size_t left = s == 0 ? 0 : s - 1;
    const std::size_t right = s + 1 == n ? s : s + 1;
    set_prob(env, s, 0, left, 1.0 - slip);
    set_prob(env, s, 0, right, slip);
    set_prob(env, s, 1, right, 1.0 - slip);
    set_prob(env, s, 1, left, slip);
  }
  env.initial_state = StateId{start};
  env.validate();
  return env;
}

EnvSpec make_point_mass(std::size_t grid_size) {
  if (grid_size < 3) throw InvalidSpecError("point_mass: grid must be at least 3");
  const GridBuilder grid{grid_size, grid_size, 5};
  EnvSpec env = grid.skeleton("point_mass");
  env.horizon_default = 100;
  for (std::size_t r = 0; r < grid_size; ++r) {
    for (std::size_t c = 0; c < grid_size; ++c) {
      for (std::size_t a = 0; a < 5; ++a) {
        const auto t = grid.target(r, c, a);
        set_prob(env, grid.index(r, c), a, t ? grid.index(t->first, t->second) : grid.index(r, c), 1.0);
      }
    }
  }
  env.initial_state = StateId{grid.index(grid_size / 2, grid_size / 2)};
  env.validate();
  return env;
}

StepResult step(const EnvSpec& env, StateId s, ActionId a, Rng& rng) {
  if (s.value() >= env.num_states || a.value() >= env.num_actions) {
    throw ContractViolation("step: state or action out of range");
  }
  if (env.is_terminal(s)) throw ContractViolation("step: called from terminal state " + std::to_string(s.value()));
  const StateId next{rng.categorical(env.row(s, a))};
  return {next, env.is_terminal(next)};
}

std::vector<bool> reachable_states(const EnvSpec& env, StateId from) {
  std::vector<bool> seen(env.num_states, false);
  std::deque<std::size_t> frontier{from.value()};
  seen[from.value()] = true;
  while (!frontier.empty()) {
    const std::size_t s = frontier.front();
    frontier.pop_front();
    if (env.is_terminal(StateId{s})) continue;
    for (std::size_t a = 0; a < env.num_actions; ++a) {
      const auto row = env.row(StateId{s}, ActionId{a});
      for (std::size_t next = 0; next < env.num_states; ++next) {
        if (row[next] > 0.0 && !seen[next]) {
          seen[next] = true;
          frontier.push_back(next);
        }
      }
    }
  }
  return seen;
}

namespace {

std::string join_doubles(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

const std::string& require(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw InvalidSpecError("env file: missing key '" + key + "'");
  return it->second;
}

}  // namespace

void write_env(std::ostream& out, const EnvSpec& env) {
  out << "env.name=" << env.name << '\n'
      << "env.states=" << env.num_states << '\n'
      << "env.actions=" << env.num_actions << '\n'
      << "env.initial_state=" << env.initial_state.value() << '\n'
      << "env.horizon_default=" << env.horizon_default << '\n';
  std::string terminals;
  for (std::size_t s = 0; s < env.num_states; ++s) {
    if (!env.terminal[s]) continue;
    if (!terminals.empty()) terminals += ',';
    terminals += std::to_string(s);
  }
  out << "env.terminal_states=" << terminals << '\n';
  out << "env.feature_dim=" << env.feature_dim << '\n';
  if (env.layout) out << "env.layout=" << env.layout->rows << ',' << env.layout->cols << '\n';
  for (std::size_t s = 0; s < env.num_states; ++s) {
    const StateId sid{s};
    if (env.feature_dim > 0) out << "env.feature." << s << '=' << join_doubles(env.feature_of(sid)) << '\n';
    if (env.has_rooms()) out << "env.room." << s << '=' << env.room_of[s] << '\n';
    if (env.layout) out << "env.cell." << s << '=' << env.layout->row_of[s] << ',' << env.layout->col_of[s] << '\n';
    for (std::size_t a = 0; a < env.num_actions; ++a) {
      out << "env.transition." << s << '.' << a << '=';
      bool first = true;
      const auto row = env.row(sid, ActionId{a});
      for (std::size_t next = 0; next < env.num_states; ++next) {
        if (row[next] == 0.0) continue;
        if (!first) out << ' ';
        out << next << ':' << format_double(row[next]);
        first = false;
      }
      out << '\n';
    }
  }
}

EnvSpec read_env(std::istream& in) {
  const KeyValues kv = parse_key_values(in);
  EnvSpec env;
  env.name = require(kv, "env.name");
  env.num_states = parse_size(require(kv, "env.states"));
  env.num_actions = parse_size(require(kv, "env.actions"));
  if (env.num_states == 0 || env.num_actions == 0) throw InvalidSpecError("env file: empty state or action set");
  env.initial_state = StateId{parse_size(require(kv, "env.initial_state"))};
  env.horizon_default = parse_size(require(kv, "env.horizon_default"));
  env.terminal.assign(env.num_states, false);
  if (const auto it = kv.find("env.terminal_states"); it != kv.end() && !it->second.empty()) {
    for (const auto& item : split(it->second, ',')) {
      const auto s = parse_size(item);
      if (s >= env.num_states) throw InvalidSpecError("env file: terminal state out of range");
      env.terminal[s] = true;
    }
  }
  env.feature_dim = kv.contains("env.feature_dim") ? parse_size(kv.at("env.feature_dim")) : 0;
  if (const auto it = kv.find("env.layout"); it != kv.end()) {
    const auto dims = split(it->second, ',');
    if (dims.size() != 2) throw InvalidSpecError("env file: env.layout expects rows,cols");
    env.layout = GridLayout{parse_size(dims[0]), parse_size(dims[1]), {}, {}};
  }
  const bool has_rooms = kv.contains("env.room.0");
  env.transition.assign(env.num_states * env.num_actions * env.num_states, 0.0);
  for (std::size_t s = 0; s < env.num_states; ++s) {
    const std::string prefix = std::to_string(s);
    if (env.feature_dim > 0) {
      const auto parts = split(require(kv, "env.feature." + prefix), ',');
      if (parts.size() != env.feature_dim) throw InvalidSpecError("env file: feature " + prefix + " has wrong dimension");
      for (const auto& p : parts) env.features.push_back(parse_double(p));
    }
    if (has_rooms) env.room_of.push_back(static_cast<int>(parse_int(require(kv, "env.room." + prefix))));
    if (env.layout) {
      const auto cell = split(require(kv, "env.cell." + prefix), ',');
      if (cell.size() != 2) throw InvalidSpecError("env file: env.cell." + prefix + " expects row,col");
      env.layout->row_of.push_back(parse_size(cell[0]));
      env.layout->col_of.push_back(parse_size(cell[1]));
    }
    for (std::size_t a = 0; a < env.num_actions; ++a) {
      const auto& entry = require(kv, "env.transition." + prefix + "." + std::to_string(a));
      std::istringstream items(entry);
      std::string item;
      while (items >> item) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw InvalidSpecError("env file: transition entry '" + item + "'");
        const auto next = parse_size(std::string_view(item).substr(0, colon));
        if (next >= env.num_states) throw InvalidSpecError("env file: transition target out of range");
        set_prob(env, s, a, next, parse_double(std::string_view(item).substr(colon + 1)));
      }
    }
  }
  env.validate();
  return env;
}

void save_env(const std::filesystem::path& path, const EnvSpec& env) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_env(out, env);
}

EnvSpec load_env(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidSpecError("cannot read env file " + path.string());
  return read_env(in);
}

}  // namespace optionforge
