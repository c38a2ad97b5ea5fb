#include "stomp/gridworld.hpp"

#include "stomp/models.hpp"
#include "stomp/planner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace stomp {

namespace {

constexpr std::array<Cell, kNumActions> kDelta{Cell{-1, 0}, Cell{1, 0}, Cell{0, -1}, Cell{0, 1}};

bool in_bounds(const GridLayout& g, Cell c) {
  return c.row >= 0 && c.row < g.height && c.col >= 0 && c.col < g.width;
}

bool is_open(const GridLayout& g, Cell c) { return in_bounds(g, c) && !g.walls.contains(c); }

Cell move(const GridLayout& g, Cell from, int direction) {
  Cell to{from.row + kDelta[direction].row, from.col + kDelta[direction].col};
  return is_open(g, to) ? to : from;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid layout: " + what);
}

}  // namespace

const char* action_name(Action a) {
  switch (a) {
    case Action::kUp: return "up";
    case Action::kDown: return "down";
    case Action::kLeft: return "left";
    case Action::kRight: return "right";
  }
  return "?";
}

GridWorld::GridWorld(GridLayout layout) : layout_(std::move(layout)) {
  const GridLayout& g = layout_;
  require(g.width > 0 && g.height > 0, "empty grid");
  require(g.gamma >= 0.0 && g.gamma < 1.0, "gamma must lie in [0,1)");
  require(g.noise.intended >= 0.0 && g.noise.other >= 0.0 &&
              std::abs(g.noise.intended + 3.0 * g.noise.other - 1.0) < 1e-12,
          "noise probabilities must satisfy intended + 3*other = 1");
  require(is_open(g, g.start), "start must be an open cell");
  require(is_open(g, g.goal), "goal must be an open cell");
  require(g.start != g.goal, "start and goal coincide");
  require(!g.penalty_region.contains(g.goal), "goal inside the penalty region");
  for (const Cell& h : g.hallways) require(is_open(g, h), "hallways must be open cells");
  for (const Cell& p : g.penalty_region) require(is_open(g, p), "penalty cells must be open");

  index_of_.assign(static_cast<std::size_t>(g.width * g.height), -1);
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const Cell cell{r, c};
      if (!is_open(g, cell) || cell == g.goal) continue;
      index_of_[static_cast<std::size_t>(r * g.width + c)] = static_cast<int>(cells_.size());
      cells_.push_back(cell);
    }
  }

  const double probs[2] = {g.noise.intended, g.noise.other};
  std::vector<std::vector<Outcome>> rows;
  rows.reserve(cells_.size() * kNumActions);
  for (const Cell& from : cells_) {
    for (int a = 0; a < kNumActions; ++a) {
      // Blocked moves collapse onto staying put, so merge outcomes by destination.
      std::map<Cell, double> mass;
      for (int dir = 0; dir < kNumActions; ++dir) {
        const double p = probs[dir == a ? 0 : 1];
        if (p <= 0.0) continue;
        mass[move(g, from, dir)] += p;
      }
      std::vector<Outcome> row;
      for (const auto& [to, p] : mass) {
        Outcome o;
        o.probability = p;
        if (to == g.goal) {
          o.next = EnvState::terminal();
          o.reward = 1.0;
        } else {
          o.next = state_of(to);
          // Any transition that ends in the penalty region costs -1.
          o.reward = g.penalty_region.contains(to) ? -1.0 : 0.0;
        }
        row.push_back(o);
      }
      rows.push_back(std::move(row));
    }
  }
  table_ = TransitionTable(num_states(), std::move(rows));
}

Cell GridWorld::cell_of(EnvState s) const {
  if (s.is_terminal()) return layout_.goal;
  return cells_.at(static_cast<std::size_t>(s.index()));
}

EnvState GridWorld::state_of(Cell c) const {
  if (c == layout_.goal) return EnvState::terminal();
  if (!in_bounds(layout_, c)) throw std::out_of_range("cell outside the grid");
  const int idx = index_of_[static_cast<std::size_t>(c.row * layout_.width + c.col)];
  if (idx < 0) throw std::invalid_argument("cell is a wall");
  return EnvState(idx);
}

bool GridWorld::is_penalty(EnvState s) const {
  return !s.is_terminal() && layout_.penalty_region.contains(cell_of(s));
}

std::optional<EnvState> GridWorld::hallway_state(std::string_view label) const {
  for (std::size_t i = 0; i < layout_.hallways.size(); ++i) {
    if (label == "H" + std::to_string(i + 1)) return state_of(layout_.hallways[i]);
  }
  return std::nullopt;
}

std::vector<std::string> GridWorld::hallway_labels() const {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < layout_.hallways.size(); ++i) labels.push_back("H" + std::to_string(i + 1));
  return labels;
}

StepResult step(const GridWorld& world, EnvState s, Action a, Rng& rng) {
  if (s.is_terminal()) throw std::logic_error("step called from the terminal state");
  const auto& row = world.transitions().outcomes(s, a);
  const Outcome* chosen = &row.back();
  if (row.size() > 1) {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (const Outcome& o : row) {
      if (u < o.probability) {
        chosen = &o;
        break;
      }
      u -= o.probability;
    }
  }
  return {chosen->next, chosen->reward, chosen->next.is_terminal()};
}

FeatureVector features(const GridWorld& world, EnvState s) {
  FeatureVector x = FeatureVector::Zero(world.num_states());
  if (!s.is_terminal()) x[s.index()] = 1.0;
  return x;
}

FeatureVector state_action_features(const GridWorld& world, EnvState s, Action a) {
  if (s.is_terminal()) throw std::logic_error("no state-action features for the terminal state");
  FeatureVector phi = FeatureVector::Zero(world.num_states() * kNumActions);
  phi[state_action_index(s, a)] = 1.0;
  return phi;
}

const TransitionTable& transition_table(const GridWorld& world) { return world.transitions(); }

std::string to_text(const GridLayout& g) {
  std::string out;
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const Cell cell{r, c};
      char ch = '.';
      if (g.walls.contains(cell)) ch = '#';
      else if (cell == g.start) ch = 'S';
      else if (cell == g.goal) ch = 'G';
      else if (std::find(g.hallways.begin(), g.hallways.end(), cell) != g.hallways.end()) ch = 'H';
      else if (g.penalty_region.contains(cell)) ch = '-';
      out.push_back(ch);
    }
    out.push_back('\n');
  }
  return out;
}

GridLayout parse_layout_text(std::string_view text, NoiseModel noise, double gamma,
                             std::string name) {
  GridLayout g;
  g.name = std::move(name);
  g.noise = noise;
  g.gamma = gamma;
  std::istringstream in{std::string(text)};
  std::string line;
  int row = 0;
  bool have_start = false;
  bool have_goal = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (g.width == 0) g.width = static_cast<int>(line.size());
    if (static_cast<int>(line.size()) != g.width) throw std::invalid_argument("ragged layout text");
    for (int c = 0; c < g.width; ++c) {
      const Cell cell{row, c};
      switch (line[static_cast<std::size_t>(c)]) {
        case '#': g.walls.insert(cell); break;
        case '.': break;
        case 'S': g.start = cell; have_start = true; break;
        case 'G': g.goal = cell; have_goal = true; break;
        case '-': g.penalty_region.insert(cell); break;
        case 'H': g.hallways.push_back(cell); break;
        default: throw std::invalid_argument("unknown layout character");
      }
    }
    ++row;
  }
  g.height = row;
  if (!have_start || !have_goal) throw std::invalid_argument("layout needs one S and one G");
  return g;
}

LayoutReport verify_layout(const GridWorld& world) {
  LayoutReport report;
  report.non_terminal_states = world.num_states();

  // Connectivity of the open cells under single moves, goal included.
  const GridLayout& g = world.layout();
  std::set<Cell> seen{g.start};
  std::queue<Cell> frontier;
  frontier.push(g.start);
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop();
    for (int dir = 0; dir < kNumActions; ++dir) {
      const Cell n = move(g, c, dir);
      if (seen.insert(n).second) frontier.push(n);
    }
  }
  report.connected = static_cast<int>(seen.size()) == world.num_states() + 1;

  std::vector<IdealizedModel> actions;
  for (Action a : kAllActions) actions.push_back(idealized_model(world, OptionDef::primitive(a)));
  const Vector v = exact_value_iteration(world, actions, 1e-12).values;
  report.start_value = v[world.start_state().index()];

  // Follow the most likely greedy outcome from the start.
  EnvState s = world.start_state();
  report.optimal_route_penalty_free = true;
  for (int steps = 0; steps < 10 * world.num_states() && !s.is_terminal(); ++steps) {
    double best = -1e300;
    Action best_a = Action::kUp;
    for (Action a : kAllActions) {
      double q = 0.0;
      for (const Outcome& o : world.transitions().outcomes(s, a)) {
        q += o.probability * (o.reward + world.gamma() * (o.next.is_terminal() ? 0.0 : v[o.next.index()]));
      }
      if (q > best + 1e-12) {
        best = q;
        best_a = a;
      }
    }
    const auto& row = world.transitions().outcomes(s, best_a);
    const Outcome* likely = &row.front();
    for (const Outcome& o : row) {
      if (o.probability > likely->probability) likely = &o;
    }
    if (likely->reward < 0.0) report.optimal_route_penalty_free = false;
    s = likely->next;
    report.optimal_path_length = steps + 1;
  }
  if (!s.is_terminal()) report.optimal_path_length = -1;
  return report;
}

namespace {

// Start (1,0) sits one row above the hallway row so that the route down and
// around the penalty block takes 19 moves, i.e. a return of 0.99^18.
constexpr std::string_view kTwoRoomText =
    "..---.#......\n"
    "S.---.#......\n"
    "..---.H.....G\n"
    "..---.#......\n"
    "..---.#......\n"
    "......#......\n";

// Classic four rooms (11x11 interior). Hallways in row-major order: H1 north,
// H2 west, H3 east, H4 south.
constexpr std::string_view kFourRoomText =
    ".....#....G\n"
    ".....#.....\n"
    ".....H.....\n"
    ".....#.....\n"
    ".....#.....\n"
    "#H####.....\n"
    ".....###H##\n"
    ".....#.....\n"
    "..--.#.....\n"
    ".S--.H.....\n"
    "..--.#.....\n";

}  // namespace

GridWorld build_two_room() {
  GridWorld world(parse_layout_text(kTwoRoomText, NoiseModel{1.0, 0.0}, 0.99, "two_room"));
  const LayoutReport r = verify_layout(world);
  if (r.non_terminal_states != 72) throw std::logic_error("two-room layout must have 72 non-terminal cells");
  if (std::abs(r.start_value - std::pow(0.99, 18)) > 1e-9) {
    throw std::logic_error("two-room layout must give V*(start) = 0.99^18");
  }
  if (!r.optimal_route_penalty_free || !r.connected) {
    throw std::logic_error("two-room optimal route must go around the penalty block");
  }
  return world;
}

GridWorld build_four_room() {
  GridWorld world(parse_layout_text(kFourRoomText, NoiseModel{2.0 / 3.0, 1.0 / 9.0}, 0.99, "four_room"));
  const LayoutReport r = verify_layout(world);
  if (world.layout().hallways.size() != 4) throw std::logic_error("four-room layout needs 4 hallways");
  if (!r.connected) throw std::logic_error("four-room layout is not connected");
  return world;
}

GridWorld build_world(std::string_view name) {
  if (name == "two_room") return build_two_room();
  if (name == "four_room") return build_four_room();
  throw std::invalid_argument("unknown environment: " + std::string(name));
}

}  // namespace stomp
