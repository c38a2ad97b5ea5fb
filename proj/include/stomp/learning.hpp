#pragma once

#include "stomp/gridworld.hpp"
#include "stomp/option.hpp"
#include "stomp/policy.hpp"
#include "stomp/run_log.hpp"
#include "stomp/subtasks.hpp"
#include "stomp/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace stomp {

struct Hyperparams {
  double alpha = 0.1;          // critic step size
  double alpha_prime = 0.1;    // actor step size
  double lambda = 0.0;         // critic trace decay
  double lambda_prime = 0.0;   // actor trace decay
  double alpha_primary = 0.9;  // TD step size for the behavior-policy value
  double lambda_primary = 0.0;
  double gamma = 0.99;

  void validate() const;
};

/// c + beta*z + gamma*(1-beta)*v_next - v.
inline double td_error(double c, double z, double v, double v_next, double beta, double gamma) {
  return c + beta * z + gamma * (1.0 - beta) * v_next - v;
}

/// A weight vector and its eligibility trace.
struct TraceSet {
  Vector w;
  Vector e;

  TraceSet() = default;
  explicit TraceSet(Eigen::Index dimension) : w(Vector::Zero(dimension)), e(Vector::Zero(dimension)) {}
};

/// UpdateWeights&Traces: e <- rho*(e + grad); w <- w + alpha_delta*e; e <- decay*e.
void uwt(TraceSet& ts, const Vector& grad, double alpha_delta, double rho, double decay);
void uwt(Vector& w, Vector& e, const Vector& grad, double alpha_delta, double rho, double decay);

/// The equiprobable behavior policy used to generate all experience.
inline constexpr double kBehaviorProb = 1.0 / kNumActions;

/// Values to log during learning. Empty oracle spans disable the RMSE curves.
struct LearningEval {
  int cadence = 0;                    // steps between log points; 0 disables logging
  Vector primary_oracle;              // exact v_mu over states
  std::vector<Vector> task_oracles;   // optimal subtask values, one per task
  int mc_rollouts = 0;                // Monte-Carlo start-state value samples per log point
  std::uint64_t eval_seed = 0;
};

/// On-policy TD(lambda) estimate of the behavior-policy value, stepped by the caller.
class PrimaryValueLearner {
 public:
  PrimaryValueLearner(int dimension, double alpha, double lambda, double gamma);
  void update(const FeatureVector& x, double reward, const FeatureVector& x_next, bool terminal);
  const Vector& weights() const { return ts_.w; }
  const TraceSet& traces() const { return ts_; }

 private:
  TraceSet ts_;
  double alpha_;
  double lambda_;
  double gamma_;
};

struct PrimaryValueResult {
  Vector w_primary;
  RunLog log;
};

/// TD(lambda) under the equiprobable policy, restarting at the start state.
PrimaryValueResult learn_primary_value(const GridWorld& world, const Hyperparams& hp, long steps,
                                       std::uint64_t seed, const LearningEval& eval = {});

/// Off-policy actor-critic learner for a set of GVF subtasks, fed one
/// behavior transition at a time.
class OptionLearner {
 public:
  OptionLearner(const GridWorld& world, std::vector<GvfTask> tasks, const Hyperparams& hp);

  /// One environment transition taken under the behavior policy. `w_primary` is
  /// the current (already updated) primary value used in the stopping values.
  void update(EnvState s, Action a, double reward, EnvState s_next, const Vector& w_primary);

  const std::vector<GvfTask>& tasks() const { return tasks_; }
  const TraceSet& critic(std::size_t i) const { return critics_[i]; }
  const TraceSet& actor_traces(std::size_t i) const { return actors_[i]; }
  SoftmaxActor actor(std::size_t i) const;

  /// Frozen options using the given primary weights for their stopping values.
  std::vector<OptionDef> options(const Vector& w_primary) const;

 private:
  const GridWorld* world_;
  std::vector<GvfTask> tasks_;
  Hyperparams hp_;
  std::vector<TraceSet> critics_;
  std::vector<TraceSet> actors_;
};

struct OptionLearningResult {
  std::vector<OptionDef> options;
  Vector w_primary;
  RunLog log;
};

/// Learns the primary value and one option per task concurrently from a single
/// equiprobable behavior stream. Per step the primary value is updated first.
OptionLearningResult learn_options(const GridWorld& world, const std::vector<GvfTask>& tasks,
                                   const Hyperparams& hp, long steps, std::uint64_t seed,
                                   const LearningEval& eval = {});

/// Root mean squared difference between w . x(s) and `reference` over all non-terminal states.
double value_rmse(const GridWorld& world, const Vector& w, const Vector& reference);

}  // namespace stomp
