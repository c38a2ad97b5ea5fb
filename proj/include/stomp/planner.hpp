#pragma once

#include "stomp/gridworld.hpp"
#include "stomp/models.hpp"
#include "stomp/option.hpp"
#include "stomp/run_log.hpp"
#include "stomp/subtasks.hpp"
#include "stomp/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stomp {

struct MenuEntry {
  std::string label;
  LinearOptionModel model;
};

/// Options considered at every state, in tie-breaking order.
using OptionMenu = std::vector<MenuEntry>;

/// Menu built from the exact models of `options`, injected as tabular linear models.
OptionMenu idealized_menu(const GridWorld& world, const std::vector<OptionDef>& options);

struct PlanState {
  Vector w;
  long updates_done = 0;
  RunLog curve;
};

/// r_hat(x,o) + w . n_hat(x,o).
double backed_up_value(const FeatureVector& x, const LinearOptionModel& model, const Vector& w);

/// Index of the menu entry with the largest backed-up value; ties go to the lowest index.
int greedy_option(const FeatureVector& x, const OptionMenu& menu, const Vector& w);

/// w += alpha * (max_o backed_up_value - w . x) * x. Returns the chosen option index.
int avi_update(Vector& w, const FeatureVector& x, const OptionMenu& menu, double alpha);
int avi_update(PlanState& ps, const FeatureVector& x, const OptionMenu& menu, double alpha);

enum class StateSampling { kUniform, kCyclic };

struct PlanSettings {
  long n_updates = 6000;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  int eval_cadence = 0;      // updates between log points; 0 disables the curve
  Vector reference;          // V* over states; empty disables rmse and updates_to_tol
  double tolerance = 0.01;   // for updates_to_tol
  StateSampling sampling = StateSampling::kUniform;
  std::string stage = "planning";
  std::string metric_prefix;  // e.g. "actions+rr/"
};

/// Repeated AVI updates from w = 0 on sampled non-terminal states. Logs
/// `v_start` and `rmse` against x = "updates", then `updates_to_tol`: the number
/// of updates after which |v_hat(start) - V*(start)| stayed within tolerance
/// (n_updates when it never settled).
PlanState plan(const OptionMenu& menu, const GridWorld& world, const PlanSettings& settings);

enum class SweepMode { kSynchronous, kInPlace };

struct VIResult {
  Vector values;
  int sweeps = 0;
  std::vector<double> deltas;  // max change per sweep
};

/// Value iteration with options over exact models until the max change per
/// sweep drops below `tol` (or `max_sweeps` is hit). In-place sweeps visit
/// states in index order.
VIResult exact_value_iteration(const GridWorld& world, const std::vector<IdealizedModel>& models, double tol,
                               SweepMode mode = SweepMode::kSynchronous, int max_sweeps = 1000000);

/// Exact value of the equiprobable policy from a linear solve.
Vector behavior_policy_values(const GridWorld& world);

/// Optimal GVF values of a subtask:
///   v(s) = max_a sum p(s',r|s,a) [c(r) + cont(s')],  cont(terminal) = 0,
/// with cont(s') = max(z(s'), gamma v(s')) for threshold tasks, and z(s') on
/// the stop set / gamma v(s') elsewhere for fixed-set tasks.
Vector optimal_subtask_values(const GridWorld& world, const GvfTask& task, const Vector& w_primary_exact,
                              double tol = 1e-12);

/// Deterministic option that is greedy for the subtask and stops exactly when
/// stopping is at least as good as continuing.
OptionDef optimal_option(const GridWorld& world, const GvfTask& task, const Vector& w_primary_exact);

}  // namespace stomp
