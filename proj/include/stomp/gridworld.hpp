#pragma once

#include "stomp/types.hpp"

#include <array>
#include <compare>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace stomp {

enum class Action : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

inline constexpr int kNumActions = 4;
inline constexpr std::array<Action, kNumActions> kAllActions{Action::kUp, Action::kDown,
                                                             Action::kLeft, Action::kRight};

const char* action_name(Action a);

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

/// Movement noise: the intended direction is taken with probability `intended`,
/// each of the other three with probability `other`.
struct NoiseModel {
  double intended = 1.0;
  double other = 0.0;
};

/// Plain description of an episodic gridworld. Validated and indexed by GridWorld.
struct GridLayout {
  std::string name;
  int width = 0;
  int height = 0;
  std::set<Cell> walls;
  std::vector<Cell> hallways;  // labelled H1..Hn in this order
  Cell start;
  Cell goal;  // terminal
  std::set<Cell> penalty_region;
  NoiseModel noise;
  double gamma = 0.99;
};

/// A non-terminal state index in [0, num_states), or the terminal state.
class EnvState {
 public:
  constexpr EnvState() = default;
  constexpr explicit EnvState(int index) : index_(index) {}
  static constexpr EnvState terminal() { return EnvState(); }

  constexpr bool is_terminal() const { return index_ < 0; }
  constexpr int index() const { return index_; }
  constexpr bool operator==(const EnvState&) const = default;

 private:
  int index_ = -1;
};

struct Outcome {
  EnvState next;
  double reward = 0.0;
  double probability = 0.0;
};

/// Exhaustive p(s', r | s, a) for every non-terminal s and action a.
class TransitionTable {
 public:
  TransitionTable() = default;
  TransitionTable(int num_states, std::vector<std::vector<Outcome>> rows)
      : num_states_(num_states), rows_(std::move(rows)) {}

  const std::vector<Outcome>& outcomes(EnvState s, Action a) const {
    return rows_[static_cast<std::size_t>(s.index() * kNumActions + static_cast<int>(a))];
  }
  int num_states() const { return num_states_; }

 private:
  int num_states_ = 0;
  std::vector<std::vector<Outcome>> rows_;
};

struct StepResult {
  EnvState next;
  double reward = 0.0;
  bool terminal = false;
};

/// Immutable, validated gridworld with a row-major index over non-terminal cells.
class GridWorld {
 public:
  explicit GridWorld(GridLayout layout);

  const GridLayout& layout() const { return layout_; }
  int num_states() const { return static_cast<int>(cells_.size()); }
  double gamma() const { return layout_.gamma; }

  Cell cell_of(EnvState s) const;
  /// Index of a non-terminal open cell; the goal maps to the terminal state.
  EnvState state_of(Cell c) const;
  EnvState start_state() const { return state_of(layout_.start); }

  bool is_penalty(EnvState s) const;
  /// Hallway by label ("H1".."Hn"), if present.
  std::optional<EnvState> hallway_state(std::string_view label) const;
  std::vector<std::string> hallway_labels() const;

  const TransitionTable& transitions() const { return table_; }

 private:
  GridLayout layout_;
  std::vector<Cell> cells_;
  std::vector<int> index_of_;  // row-major over the full grid, -1 for walls and the goal
  TransitionTable table_;
};

/// Samples one environment transition. Stepping from the terminal state throws.
StepResult step(const GridWorld& world, EnvState s, Action a, Rng& rng);

/// One-hot x(s) of dimension num_states; the terminal state maps to zero.
FeatureVector features(const GridWorld& world, EnvState s);

/// Index of phi(s,a) within the 4*d state-action features: index(s)*4 + index(a).
inline int state_action_index(EnvState s, Action a) {
  return s.index() * kNumActions + static_cast<int>(a);
}
FeatureVector state_action_features(const GridWorld& world, EnvState s, Action a);

const TransitionTable& transition_table(const GridWorld& world);

/// Two rooms joined by one hallway, deterministic moves, gamma 0.99.
/// Self-verifies 72 non-terminal cells, V*(start) = 0.99^18 and a penalty-free optimal route.
GridWorld build_two_room();

/// Classic 11x11 four-rooms topology, 2/3 intended move and 1/9 per other direction.
GridWorld build_four_room();

/// Builds a named layout ("two_room" or "four_room").
GridWorld build_world(std::string_view name);

/// One char per cell: '#' wall, '.' open, 'S' start, 'G' goal, '-' penalty, 'H' hallway.
std::string to_text(const GridLayout& layout);
GridLayout parse_layout_text(std::string_view text, NoiseModel noise, double gamma,
                             std::string name = "custom");

/// Result of the structural checks run by the layout builders.
struct LayoutReport {
  int non_terminal_states = 0;
  double start_value = 0.0;
  int optimal_path_length = 0;
  bool optimal_route_penalty_free = false;
  bool connected = false;
};
LayoutReport verify_layout(const GridWorld& world);

}  // namespace stomp
