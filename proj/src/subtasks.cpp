#include "stomp/subtasks.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>

namespace stomp {

const char* task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kRewardRespecting: return "reward_respecting";
    case TaskKind::kShortestPath: return "shortest_path";
    case TaskKind::kEigen: return "eigen";
  }
  return "?";
}

double cumulant(const GvfTask& task, double reward) {
  switch (task.kind) {
    case TaskKind::kRewardRespecting: return reward;
    case TaskKind::kShortestPath: return task.step_cost_form ? -1.0 : 0.0;
    case TaskKind::kEigen: return 0.0;
  }
  return 0.0;
}

double stopping_value(const GvfTask& task, const FeatureVector& x, const Vector& w_primary) {
  switch (task.kind) {
    case TaskKind::kRewardRespecting: {
      const auto i = task.feature_index;
      // Grouped so the 1-hot target state yields exactly the bonus weight.
      return (w_primary.dot(x) - x[i] * w_primary[i]) + x[i] * task.bonus_weight;
    }
    case TaskKind::kShortestPath:
      return task.step_cost_form ? 0.0 : x[task.feature_index];
    case TaskKind::kEigen:
      return task.eigen_values.dot(x);
  }
  return 0.0;
}

double stopping_condition(const GvfTask& task, const FeatureVector& x, const Vector& w_task, double z,
                          bool is_terminal) {
  if (is_terminal) return 1.0;
  if (task.stop_rule == StopRule::kThreshold) return z >= w_task.dot(x) ? 1.0 : 0.0;
  for (int s : task.stop_states) {
    if (x[s] != 0.0) return 1.0;
  }
  return 0.0;
}

GvfTask make_feature_attainment_task(int feature, double bonus_weight, std::string label) {
  if (!std::isfinite(bonus_weight)) throw std::invalid_argument("bonus weight must be finite");
  if (feature < 0) throw std::invalid_argument("feature index must be non-negative");
  GvfTask task;
  task.kind = TaskKind::kRewardRespecting;
  task.feature_index = feature;
  task.bonus_weight = bonus_weight;
  task.stop_rule = StopRule::kThreshold;
  task.label = label.empty() ? "rr_" + std::to_string(feature) : std::move(label);
  return task;
}

GvfTask make_shortest_path_task(const GridWorld& world, EnvState subgoal, ShortestPathForm form,
                                std::string label) {
  if (subgoal.is_terminal()) throw std::invalid_argument("subgoal must be non-terminal");
  bool is_hallway = false;
  for (const Cell& h : world.layout().hallways) is_hallway |= world.state_of(h) == subgoal;
  if (!is_hallway) throw std::invalid_argument("shortest-path subgoal must be a hallway");
  GvfTask task;
  task.kind = TaskKind::kShortestPath;
  task.feature_index = subgoal.index();
  task.stop_rule = StopRule::kFixedSet;
  // The goal is terminal, where every option stops anyway.
  task.stop_states = {subgoal.index()};
  task.step_cost_form = form == ShortestPathForm::kStepCost;
  task.label = label.empty() ? "sp_" + std::to_string(subgoal.index()) : std::move(label);
  return task;
}

Matrix graph_laplacian(const GridWorld& world) {
  const int n = world.num_states();
  Matrix adjacency = Matrix::Zero(n, n);
  // Single-move reachability under the intended direction, ignoring noise.
  for (int s = 0; s < n; ++s) {
    const Cell from = world.cell_of(EnvState(s));
    for (Action a : kAllActions) {
      static constexpr int dr[] = {-1, 1, 0, 0};
      static constexpr int dc[] = {0, 0, -1, 1};
      const Cell to{from.row + dr[static_cast<int>(a)], from.col + dc[static_cast<int>(a)]};
      const auto& g = world.layout();
      if (to.row < 0 || to.row >= g.height || to.col < 0 || to.col >= g.width) continue;
      if (g.walls.contains(to) || to == g.goal) continue;
      const int t = world.state_of(to).index();
      adjacency(s, t) = 1.0;
      adjacency(t, s) = 1.0;
    }
  }
  Matrix laplacian = -adjacency;
  laplacian.diagonal() = adjacency.rowwise().sum();
  return laplacian;
}

GvfTask make_eigen_task(const GridWorld& world, int eigen_index, int sign, std::string label) {
  const int n = world.num_states();
  if (eigen_index < 0 || eigen_index >= n) throw std::out_of_range("eigen index out of range");
  if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(graph_laplacian(world));
  if (solver.info() != Eigen::Success) throw std::runtime_error("Laplacian eigendecomposition failed");
  const Vector& eigenvalues = solver.eigenvalues();
  int zero_modes = 0;
  for (int k = 0; k < n; ++k) zero_modes += eigenvalues[k] < 1e-9 ? 1 : 0;
  if (zero_modes != 1) {
    throw std::runtime_error("state graph is disconnected (" + std::to_string(zero_modes) +
                             " components); eigen tasks need a connected graph");
  }

  Vector v = solver.eigenvectors().col(eigen_index);
  Eigen::Index peak = 0;
  v.cwiseAbs().maxCoeff(&peak);
  if (v[peak] < 0.0) v = -v;

  GvfTask task;
  task.kind = TaskKind::kEigen;
  task.eigen_values = static_cast<double>(sign) * v;
  task.stop_rule = StopRule::kThreshold;
  task.label = label.empty() ? "eig" + std::to_string(eigen_index) + (sign > 0 ? "+" : "-")
                             : std::move(label);
  return task;
}

void validate_task_set(std::span<const GvfTask> tasks) {
  std::set<std::pair<TaskKind, int>> seen;
  std::set<std::string> labels;
  for (const GvfTask& t : tasks) {
    if (!labels.insert(t.label).second) throw std::invalid_argument("duplicate task label: " + t.label);
    if (t.feature_index < 0) continue;
    if (!seen.insert({t.kind, t.feature_index}).second) {
      throw std::invalid_argument("more than one " + std::string(task_kind_name(t.kind)) +
                                  " task for feature " + std::to_string(t.feature_index));
    }
  }
}

}  // namespace stomp
