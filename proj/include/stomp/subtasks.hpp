#pragma once

#include "stomp/gridworld.hpp"
#include "stomp/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace stomp {

enum class TaskKind { kRewardRespecting, kShortestPath, kEigen };
enum class StopRule {
  kThreshold,  // stop iff z(s) >= w_task . x(s)
  kFixedSet,   // stop exactly at the listed states
};

const char* task_kind_name(TaskKind kind);

/// A GVF subtask: cumulant rule, stopping-value rule and stopping rule.
struct GvfTask {
  TaskKind kind = TaskKind::kRewardRespecting;
  std::string label;
  int feature_index = -1;     // target feature; -1 for eigen tasks
  double bonus_weight = 0.0;  // reward-respecting only
  Vector eigen_values;        // eigen only, one entry per state feature
  StopRule stop_rule = StopRule::kThreshold;
  std::vector<int> stop_states;  // kFixedSet only, as feature indices
  // Shortest-path tasks in the step-cost form (cumulant -1, stopping value 0).
  bool step_cost_form = false;
};

double cumulant(const GvfTask& task, double reward);

/// z(x). Reward-respecting tasks use the primary value weights w_primary; the
/// value is 0 for the terminal (zero) feature vector in every case.
double stopping_value(const GvfTask& task, const FeatureVector& x, const Vector& w_primary);

/// beta in {0,1}. `z` is stopping_value for the same state.
double stopping_condition(const GvfTask& task, const FeatureVector& x, const Vector& w_task, double z,
                          bool is_terminal);

/// Reward-respecting feature-attainment subtask for feature `feature`.
GvfTask make_feature_attainment_task(int feature, double bonus_weight, std::string label = {});

enum class ShortestPathForm {
  kUnitStop,  // cumulant 0, stopping value 1 at the subgoal (experiment baseline)
  kStepCost,  // cumulant -1, stopping value 0 at the subgoal
};

/// Shortest path to `subgoal`, stopping at the subgoal or on termination at the goal.
GvfTask make_shortest_path_task(const GridWorld& world, EnvState subgoal,
                                ShortestPathForm form = ShortestPathForm::kUnitStop,
                                std::string label = {});

/// Unnormalized Laplacian L = D - A of the single-move graph over non-terminal states.
Matrix graph_laplacian(const GridWorld& world);

/// Stopping values from the eigenvector of L with the `eigen_index`-th smallest
/// eigenvalue (0-based, so 1 is the Fiedler vector), multiplied by `sign`.
/// The raw eigenvector is oriented so its largest-magnitude entry is positive.
GvfTask make_eigen_task(const GridWorld& world, int eigen_index, int sign, std::string label = {});

/// Rejects two tasks of the same kind targeting the same feature.
void validate_task_set(std::span<const GvfTask> tasks);

}  // namespace stomp
