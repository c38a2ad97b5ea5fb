#include "stomp/planner.hpp"

#include "stomp/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stomp {

OptionMenu idealized_menu(const GridWorld& world, const std::vector<OptionDef>& options) {
  OptionMenu menu;
  for (const OptionDef& o : options) {
    menu.push_back({o.label(), to_linear_model(world, idealized_model(world, o))});
  }
  return menu;
}

double backed_up_value(const FeatureVector& x, const LinearOptionModel& model, const Vector& w) {
  if (w.size() != model.W.rows()) throw std::invalid_argument("backed_up_value: dimension mismatch");
  return predict_reward(model, x) + w.dot(predict_next(model, x));
}

namespace {

struct Best {
  int index = 0;
  double value = -std::numeric_limits<double>::infinity();
};

Best best_backup(const FeatureVector& x, const OptionMenu& menu, const Vector& w) {
  if (menu.empty()) throw std::invalid_argument("option menu is empty");
  Best best;
  for (std::size_t o = 0; o < menu.size(); ++o) {
    const double v = backed_up_value(x, menu[o].model, w);
    if (v > best.value) best = {static_cast<int>(o), v};
  }
  return best;
}

}  // namespace

int greedy_option(const FeatureVector& x, const OptionMenu& menu, const Vector& w) {
  return best_backup(x, menu, w).index;
}

int avi_update(Vector& w, const FeatureVector& x, const OptionMenu& menu, double alpha) {
  const Best best = best_backup(x, menu, w);
  const double delta = best.value - w.dot(x);
  if (alpha != 0.0 && delta != 0.0) {
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      if (x[k] != 0.0) w[k] += alpha * delta * x[k];
    }
  }
  return best.index;
}

int avi_update(PlanState& ps, const FeatureVector& x, const OptionMenu& menu, double alpha) {
  const int chosen = avi_update(ps.w, x, menu, alpha);
  ++ps.updates_done;
  return chosen;
}

PlanState plan(const OptionMenu& menu, const GridWorld& world, const PlanSettings& settings) {
  const int n = world.num_states();
  if (settings.n_updates < 0) throw std::invalid_argument("n_updates must be non-negative");
  const bool has_reference = settings.reference.size() == n;
  PlanState ps;
  ps.w = Vector::Zero(n);

  std::vector<FeatureVector> xs;
  xs.reserve(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) xs.push_back(features(world, EnvState(s)));
  const FeatureVector x_start = features(world, world.start_state());
  const double v_star_start = has_reference ? settings.reference.dot(x_start) : 0.0;
  const std::string& p = settings.metric_prefix;

  auto log_point = [&] {
    const double x = static_cast<double>(ps.updates_done);
    ps.curve.add(settings.stage, "updates", x, p + "v_start", ps.w.dot(x_start));
    if (has_reference) ps.curve.add(settings.stage, "updates", x, p + "rmse", value_rmse(world, ps.w, settings.reference));
  };
  auto outside = [&] { return std::abs(ps.w.dot(x_start) - v_star_start) > settings.tolerance; };

  if (settings.eval_cadence > 0) log_point();
  long last_outside = outside() ? 0 : -1;
  Rng rng(settings.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (long u = 0; u < settings.n_updates; ++u) {
    const int s = settings.sampling == StateSampling::kUniform ? pick(rng) : static_cast<int>(u % n);
    avi_update(ps, xs[static_cast<std::size_t>(s)], menu, settings.alpha);
    if (outside()) last_outside = ps.updates_done;
    if (settings.eval_cadence > 0 && ps.updates_done % settings.eval_cadence == 0) log_point();
  }
  if (has_reference) {
    const double settled = last_outside < 0 ? 0.0 : static_cast<double>(last_outside);
    ps.curve.add(settings.stage, "updates", static_cast<double>(settings.n_updates), p + "updates_to_tol", settled);
  }
  return ps;
}

VIResult exact_value_iteration(const GridWorld& world, const std::vector<IdealizedModel>& models, double tol,
                               SweepMode mode, int max_sweeps) {
  if (models.empty()) throw std::invalid_argument("exact_value_iteration needs at least one model");
  const int n = world.num_states();
  VIResult result;
  result.values = Vector::Zero(n);
  Vector next(n);
  while (result.sweeps < max_sweeps) {
    double max_change = 0.0;
    const Vector& source = result.values;
    for (int s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (const IdealizedModel& m : models) {
        const double v = m.r[s] + m.p.row(s).dot(mode == SweepMode::kInPlace ? result.values : source);
        if (v > best) best = v;
      }
      max_change = std::max(max_change, std::abs(best - result.values[s]));
      if (mode == SweepMode::kInPlace) {
        result.values[s] = best;
      } else {
        next[s] = best;
      }
    }
    if (mode == SweepMode::kSynchronous) result.values = next;
    ++result.sweeps;
    result.deltas.push_back(max_change);
    if (max_change < tol) break;
  }
  return result;
}

Vector behavior_policy_values(const GridWorld& world) {
  // The equiprobable policy as an option that only stops at termination.
  const int n = world.num_states();
  OptionTable table{Matrix::Constant(n, kNumActions, kBehaviorProb), Vector::Zero(n)};
  return idealized_model(world, table).r;
}

namespace {

struct SubtaskTables {
  std::vector<double> z;      // stopping value per state
  std::vector<bool> stop_set;  // fixed-set tasks only
};

SubtaskTables subtask_tables(const GridWorld& world, const GvfTask& task, const Vector& w_primary) {
  const int n = world.num_states();
  SubtaskTables t{std::vector<double>(static_cast<std::size_t>(n)), std::vector<bool>(static_cast<std::size_t>(n))};
  for (int s = 0; s < n; ++s) {
    t.z[static_cast<std::size_t>(s)] = stopping_value(task, features(world, EnvState(s)), w_primary);
  }
  for (int s : task.stop_states) t.stop_set.at(static_cast<std::size_t>(s)) = true;
  return t;
}

double continuation(const GvfTask& task, const SubtaskTables& t, const Vector& v, EnvState next, double gamma) {
  if (next.is_terminal()) return 0.0;
  const auto k = static_cast<std::size_t>(next.index());
  const double go_on = gamma * v[next.index()];
  if (task.stop_rule == StopRule::kFixedSet) return t.stop_set[k] ? t.z[k] : go_on;
  return std::max(t.z[k], go_on);
}

double action_value(const GridWorld& world, const GvfTask& task, const SubtaskTables& t, const Vector& v, int s,
                    Action a) {
  double q = 0.0;
  for (const Outcome& o : world.transitions().outcomes(EnvState(s), a)) {
    q += o.probability * (cumulant(task, o.reward) + continuation(task, t, v, o.next, world.gamma()));
  }
  return q;
}

}  // namespace

Vector optimal_subtask_values(const GridWorld& world, const GvfTask& task, const Vector& w_primary_exact,
                              double tol) {
  const int n = world.num_states();
  const SubtaskTables t = subtask_tables(world, task, w_primary_exact);
  Vector v = Vector::Zero(n);
  Vector next(n);
  for (int sweep = 0; sweep < 1000000; ++sweep) {
    double max_change = 0.0;
    for (int s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (Action a : kAllActions) best = std::max(best, action_value(world, task, t, v, s, a));
      next[s] = best;
      max_change = std::max(max_change, std::abs(best - v[s]));
    }
    v.swap(next);
    if (max_change < tol) return v;
  }
  throw std::runtime_error("optimal_subtask_values did not converge");
}

OptionDef optimal_option(const GridWorld& world, const GvfTask& task, const Vector& w_primary_exact) {
  const int n = world.num_states();
  const Vector v = optimal_subtask_values(world, task, w_primary_exact);
  const SubtaskTables t = subtask_tables(world, task, w_primary_exact);
  std::vector<Action> policy(static_cast<std::size_t>(n));
  std::vector<bool> stops(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const auto k = static_cast<std::size_t>(s);
    Action best = Action::kUp;
    double best_q = -std::numeric_limits<double>::infinity();
    for (Action a : kAllActions) {
      const double q = action_value(world, task, t, v, s, a);
      if (q > best_q + 1e-12) {
        best_q = q;
        best = a;
      }
    }
    policy[k] = best;
    stops[k] = task.stop_rule == StopRule::kFixedSet ? t.stop_set[k] : t.z[k] >= world.gamma() * v[s];
  }
  return OptionDef::tabular(task.label, std::move(policy), std::move(stops));
}

}  // namespace stomp
