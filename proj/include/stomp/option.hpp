#pragma once

#include "stomp/gridworld.hpp"
#include "stomp/policy.hpp"
#include "stomp/subtasks.hpp"
#include "stomp/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace stomp {

/// A way of behaving: a policy plus a stopping function. Primitive actions are
/// options that take their action and stop after one step.
class OptionDef {
 public:
  enum class Kind {
    kPrimitive,
    kLearned,  // softmax actor + GVF stopping rule, frozen after learning
    kTabular,  // deterministic per-state action and stop flag (e.g. an oracle option)
  };

  static OptionDef primitive(Action a);
  static OptionDef learned(std::string label, SoftmaxActor actor, GvfTask task, Vector critic_weights,
                           Vector primary_weights);
  static OptionDef tabular(std::string label, std::vector<Action> policy, std::vector<bool> stops);

  Kind kind() const { return kind_; }
  bool is_primitive() const { return kind_ == Kind::kPrimitive; }
  const std::string& label() const { return label_; }

  Action action() const { return action_; }
  const SoftmaxActor& actor() const { return actor_; }
  const GvfTask& task() const { return task_; }
  const Vector& critic_weights() const { return critic_w_; }
  const Vector& primary_weights() const { return primary_w_; }

  /// pi(a|s) for every action.
  std::array<double, kNumActions> action_probs(const GridWorld& world, EnvState s) const;
  /// beta(s); always 1 at the terminal state.
  double stop_prob(const GridWorld& world, EnvState s) const;
  /// Most probable action, lowest index on ties.
  Action greedy_action(const GridWorld& world, EnvState s) const;

 private:
  Kind kind_ = Kind::kPrimitive;
  std::string label_;
  Action action_ = Action::kUp;
  SoftmaxActor actor_;
  GvfTask task_;
  Vector critic_w_;
  Vector primary_w_;
  std::vector<Action> policy_;
  std::vector<bool> stops_;
};

/// Policy and stopping function evaluated at every non-terminal state.
struct OptionTable {
  Matrix probs;  // num_states x 4
  Vector stop;   // num_states
};
OptionTable tabulate(const OptionDef& option, const GridWorld& world);

std::vector<OptionDef> primitive_options();

/// Result of executing an option from a state until it stops.
struct Rollout {
  double discounted_reward = 0.0;  // sum of gamma^(k-1) R_k
  double penalty_reward = 0.0;     // undiscounted sum of negative rewards
  int steps = 0;
  bool stopped = false;            // false if the step cap was hit
  EnvState stop_state;
  std::vector<EnvState> path;      // visited states, starting state included
};

/// Runs `option` from `s`. With `greedy` set the most probable action is taken.
Rollout rollout_option(const GridWorld& world, const OptionDef& option, EnvState s, Rng& rng, bool greedy,
                       int max_steps = 1000);

}  // namespace stomp
