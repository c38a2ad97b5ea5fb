#include "stomp/learning.hpp"

#include <cmath>
#include <stdexcept>

namespace stomp {

void Hyperparams::validate() const {
  if (!(alpha > 0 && alpha_prime > 0 && alpha_primary > 0)) {
    throw std::invalid_argument("step sizes must be positive");
  }
  for (double l : {lambda, lambda_prime, lambda_primary}) {
    if (l < 0.0 || l > 1.0) throw std::invalid_argument("trace decay parameters must lie in [0,1]");
  }
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("gamma must lie in [0,1)");
}

void uwt(TraceSet& ts, const Vector& grad, double alpha_delta, double rho, double decay) {
  uwt(ts.w, ts.e, grad, alpha_delta, rho, decay);
}

void uwt(Vector& w, Vector& e, const Vector& grad, double alpha_delta, double rho, double decay) {
  if (grad.size() != w.size() || e.size() != w.size()) throw std::invalid_argument("uwt: dimension mismatch");
  if (rho == 0.0) {
    // e <- 0*(e + grad) leaves nothing to apply.
    e.setZero();
    return;
  }
  e = rho * (e + grad);
  w += alpha_delta * e;
  e *= decay;
}

double value_rmse(const GridWorld& world, const Vector& w, const Vector& reference) {
  const int n = world.num_states();
  double sum = 0.0;
  for (int s = 0; s < n; ++s) {
    const double diff = w.dot(features(world, EnvState(s))) - reference[s];
    sum += diff * diff;
  }
  return std::sqrt(sum / n);
}

PrimaryValueLearner::PrimaryValueLearner(int dimension, double alpha, double lambda, double gamma)
    : ts_(dimension), alpha_(alpha), lambda_(lambda), gamma_(gamma) {}

void PrimaryValueLearner::update(const FeatureVector& x, double reward, const FeatureVector& x_next,
                                 bool terminal) {
  const double beta = terminal ? 1.0 : 0.0;
  const double delta = td_error(reward, 0.0, ts_.w.dot(x), ts_.w.dot(x_next), beta, gamma_);
  uwt(ts_, x, alpha_ * delta, 1.0, gamma_ * lambda_ * (1.0 - beta));
}

namespace {

Action sample_behavior(Rng& rng) {
  return static_cast<Action>(std::uniform_int_distribution<int>(0, kNumActions - 1)(rng));
}

}  // namespace

PrimaryValueResult learn_primary_value(const GridWorld& world, const Hyperparams& hp, long steps,
                                       std::uint64_t seed, const LearningEval& eval) {
  hp.validate();
  Rng rng(seed);
  PrimaryValueLearner learner(world.num_states(), hp.alpha_primary, hp.lambda_primary, hp.gamma);
  PrimaryValueResult result;
  const bool logging = eval.cadence > 0 && eval.primary_oracle.size() == world.num_states();
  if (logging) result.log.add("primary", "steps", 0, "rmse", value_rmse(world, learner.weights(), eval.primary_oracle));

  EnvState s = world.start_state();
  for (long t = 1; t <= steps; ++t) {
    if (s.is_terminal()) s = world.start_state();
    const Action a = sample_behavior(rng);
    const StepResult res = step(world, s, a, rng);
    learner.update(features(world, s), res.reward, features(world, res.next), res.terminal);
    s = res.next;
    if (logging && t % eval.cadence == 0) {
      result.log.add("primary", "steps", static_cast<double>(t), "rmse",
                     value_rmse(world, learner.weights(), eval.primary_oracle));
    }
  }
  result.w_primary = learner.weights();
  return result;
}

OptionLearner::OptionLearner(const GridWorld& world, std::vector<GvfTask> tasks, const Hyperparams& hp)
    : world_(&world), tasks_(std::move(tasks)), hp_(hp) {
  if (tasks_.empty()) throw std::invalid_argument("option learning needs at least one task");
  hp_.validate();
  validate_task_set(tasks_);
  const int d = world.num_states();
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    critics_.emplace_back(d);
    actors_.emplace_back(d * kNumActions);
  }
}

void OptionLearner::update(EnvState s, Action a, double reward, EnvState s_next, const Vector& w_primary) {
  const GridWorld& world = *world_;
  const FeatureVector x = features(world, s);
  const FeatureVector x_next = features(world, s_next);
  const bool terminal = s_next.is_terminal();
  const auto phi_all = action_features(world, s);
  const double gamma = hp_.gamma;

  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    const GvfTask& task = tasks_[i];
    TraceSet& critic = critics_[i];
    TraceSet& actor = actors_[i];
    const Vector probs = policy_probs(actor.w, phi_all);
    const double rho = importance_ratio(probs[static_cast<int>(a)], kBehaviorProb);
    const double z_next = stopping_value(task, x_next, w_primary);
    // Stopping is judged with the critic as it stands before this update.
    const double beta_next = stopping_condition(task, x_next, critic.w, z_next, terminal);
    const double delta =
        td_error(cumulant(task, reward), z_next, critic.w.dot(x), critic.w.dot(x_next), beta_next, gamma);

    Vector score = phi_all[static_cast<std::size_t>(a)];
    for (int b = 0; b < kNumActions; ++b) score -= probs[b] * phi_all[static_cast<std::size_t>(b)];

    uwt(critic, x, hp_.alpha * delta, rho, gamma * hp_.lambda * (1.0 - beta_next));
    uwt(actor, score, hp_.alpha_prime * delta, rho, gamma * hp_.lambda_prime * (1.0 - beta_next));
  }
}

SoftmaxActor OptionLearner::actor(std::size_t i) const {
  SoftmaxActor a;
  a.theta = actors_.at(i).w;
  return a;
}

std::vector<OptionDef> OptionLearner::options(const Vector& w_primary) const {
  std::vector<OptionDef> out;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    out.push_back(OptionDef::learned(tasks_[i].label, actor(i), tasks_[i], critics_[i].w, w_primary));
  }
  return out;
}

namespace {

/// Monte-Carlo GVF return of an option from `s`: discounted cumulants plus the
/// stopping value, both discounted by gamma^(k-1) at the stopping step k.
double mc_option_value(const GridWorld& world, const OptionDef& option, EnvState s, Rng& rng, int max_steps) {
  const GvfTask& task = option.task();
  double total = 0.0;
  double discount = 1.0;
  for (int k = 0; k < max_steps; ++k) {
    const auto probs = option.action_probs(world, s);
    std::discrete_distribution<int> pick(probs.begin(), probs.end());
    const StepResult res = step(world, s, static_cast<Action>(pick(rng)), rng);
    total += discount * cumulant(task, res.reward);
    if (option.stop_prob(world, res.next) >= 1.0) {
      total += discount * stopping_value(task, features(world, res.next), option.primary_weights());
      return total;
    }
    discount *= world.gamma();
    s = res.next;
  }
  return total;
}

void log_option_progress(const GridWorld& world, const OptionLearner& learner, const Vector& w_primary,
                         const LearningEval& eval, double t, Rng& eval_rng, RunLog& log) {
  if (eval.primary_oracle.size() == world.num_states()) {
    log.add("options", "steps", t, "primary/rmse", value_rmse(world, w_primary, eval.primary_oracle));
  }
  const FeatureVector x_start = features(world, world.start_state());
  const auto options = eval.mc_rollouts > 0 ? learner.options(w_primary) : std::vector<OptionDef>{};
  for (std::size_t i = 0; i < learner.tasks().size(); ++i) {
    const std::string& label = learner.tasks()[i].label;
    const Vector& w = learner.critic(i).w;
    if (i < eval.task_oracles.size()) {
      log.add("options", "steps", t, label + "/rmse", value_rmse(world, w, eval.task_oracles[i]));
    }
    log.add("options", "steps", t, label + "/v_start", w.dot(x_start));
    if (eval.mc_rollouts > 0) {
      double sum = 0.0;
      for (int k = 0; k < eval.mc_rollouts; ++k) {
        sum += mc_option_value(world, options[i], world.start_state(), eval_rng, 20 * world.num_states());
      }
      log.add("options", "steps", t, label + "/v_start_mc", sum / eval.mc_rollouts);
    }
  }
}

}  // namespace

OptionLearningResult learn_options(const GridWorld& world, const std::vector<GvfTask>& tasks,
                                   const Hyperparams& hp, long steps, std::uint64_t seed,
                                   const LearningEval& eval) {
  OptionLearner learner(world, tasks, hp);
  PrimaryValueLearner primary(world.num_states(), hp.alpha_primary, hp.lambda_primary, hp.gamma);
  Rng rng(seed);
  Rng eval_rng(eval.eval_seed);
  OptionLearningResult result;
  if (eval.cadence > 0) log_option_progress(world, learner, primary.weights(), eval, 0, eval_rng, result.log);

  EnvState s = world.start_state();
  for (long t = 1; t <= steps; ++t) {
    if (s.is_terminal()) s = world.start_state();
    const Action a = sample_behavior(rng);
    const StepResult res = step(world, s, a, rng);
    primary.update(features(world, s), res.reward, features(world, res.next), res.terminal);
    learner.update(s, a, res.reward, res.next, primary.weights());
    s = res.next;
    if (eval.cadence > 0 && t % eval.cadence == 0) {
      log_option_progress(world, learner, primary.weights(), eval, static_cast<double>(t), eval_rng, result.log);
    }
  }
  result.w_primary = primary.weights();
  result.options = learner.options(result.w_primary);
  return result;
}

}  // namespace stomp
