#include "stomp/option.hpp"

#include <cmath>
#include <stdexcept>

namespace stomp {

std::vector<FeatureVector> action_features(const GridWorld& world, EnvState s) {
  std::vector<FeatureVector> phi;
  phi.reserve(kNumActions);
  for (Action a : kAllActions) phi.push_back(state_action_features(world, s, a));
  return phi;
}

Vector policy_probs(const SoftmaxActor& actor, std::span<const FeatureVector> phi_all) {
  return policy_probs(actor.theta, phi_all);
}

Vector policy_probs(const Vector& theta, std::span<const FeatureVector> phi_all) {
  const auto n = static_cast<Eigen::Index>(phi_all.size());
  Vector prefs(n);
  for (Eigen::Index b = 0; b < n; ++b) prefs[b] = theta.dot(phi_all[static_cast<std::size_t>(b)]);
  const Vector expd = (prefs.array() - prefs.maxCoeff()).exp();
  return expd / expd.sum();
}

Vector grad_log_policy(const SoftmaxActor& actor, std::span<const FeatureVector> phi_all, Action a) {
  const Vector probs = policy_probs(actor, phi_all);
  Vector grad = phi_all[static_cast<std::size_t>(a)];
  for (std::size_t b = 0; b < phi_all.size(); ++b) grad -= probs[static_cast<Eigen::Index>(b)] * phi_all[b];
  return grad;
}

double importance_ratio(double pi_prob, double mu_prob) {
  if (!(mu_prob > 0.0)) throw std::invalid_argument("behavior probability must be positive");
  return pi_prob / mu_prob;
}

OptionDef OptionDef::primitive(Action a) {
  OptionDef o;
  o.kind_ = Kind::kPrimitive;
  o.action_ = a;
  o.label_ = action_name(a);
  return o;
}

OptionDef OptionDef::learned(std::string label, SoftmaxActor actor, GvfTask task, Vector critic_weights,
                             Vector primary_weights) {
  OptionDef o;
  o.kind_ = Kind::kLearned;
  o.label_ = std::move(label);
  o.actor_ = std::move(actor);
  o.task_ = std::move(task);
  o.critic_w_ = std::move(critic_weights);
  o.primary_w_ = std::move(primary_weights);
  return o;
}

OptionDef OptionDef::tabular(std::string label, std::vector<Action> policy, std::vector<bool> stops) {
  if (policy.size() != stops.size()) throw std::invalid_argument("policy and stop tables differ in size");
  OptionDef o;
  o.kind_ = Kind::kTabular;
  o.label_ = std::move(label);
  o.policy_ = std::move(policy);
  o.stops_ = std::move(stops);
  return o;
}

std::array<double, kNumActions> OptionDef::action_probs(const GridWorld& world, EnvState s) const {
  std::array<double, kNumActions> probs{};
  switch (kind_) {
    case Kind::kPrimitive:
      probs[static_cast<std::size_t>(action_)] = 1.0;
      break;
    case Kind::kTabular:
      probs[static_cast<std::size_t>(policy_.at(static_cast<std::size_t>(s.index())))] = 1.0;
      break;
    case Kind::kLearned: {
      const auto phi = action_features(world, s);
      const Vector p = policy_probs(actor_, phi);
      for (int a = 0; a < kNumActions; ++a) probs[static_cast<std::size_t>(a)] = p[a];
      break;
    }
  }
  return probs;
}

double OptionDef::stop_prob(const GridWorld& world, EnvState s) const {
  if (s.is_terminal()) return 1.0;
  switch (kind_) {
    case Kind::kPrimitive: return 1.0;
    case Kind::kTabular: return stops_.at(static_cast<std::size_t>(s.index())) ? 1.0 : 0.0;
    case Kind::kLearned: {
      const FeatureVector x = features(world, s);
      const double z = stopping_value(task_, x, primary_w_);
      return stopping_condition(task_, x, critic_w_, z, false);
    }
  }
  return 1.0;
}

Action OptionDef::greedy_action(const GridWorld& world, EnvState s) const {
  const auto probs = action_probs(world, s);
  int best = 0;
  for (int a = 1; a < kNumActions; ++a) {
    if (probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(best)]) best = a;
  }
  return static_cast<Action>(best);
}

OptionTable tabulate(const OptionDef& option, const GridWorld& world) {
  const int n = world.num_states();
  OptionTable table{Matrix::Zero(n, kNumActions), Vector::Zero(n)};
  for (int s = 0; s < n; ++s) {
    const auto probs = option.action_probs(world, EnvState(s));
    for (int a = 0; a < kNumActions; ++a) table.probs(s, a) = probs[static_cast<std::size_t>(a)];
    table.stop[s] = option.stop_prob(world, EnvState(s));
  }
  return table;
}

std::vector<OptionDef> primitive_options() {
  std::vector<OptionDef> out;
  for (Action a : kAllActions) out.push_back(OptionDef::primitive(a));
  return out;
}

Rollout rollout_option(const GridWorld& world, const OptionDef& option, EnvState s, Rng& rng, bool greedy,
                       int max_steps) {
  Rollout r;
  r.path.push_back(s);
  double discount = 1.0;
  while (r.steps < max_steps && !s.is_terminal()) {
    Action a;
    if (greedy) {
      a = option.greedy_action(world, s);
    } else {
      const auto probs = option.action_probs(world, s);
      std::discrete_distribution<int> pick(probs.begin(), probs.end());
      a = static_cast<Action>(pick(rng));
    }
    const StepResult res = step(world, s, a, rng);
    r.discounted_reward += discount * res.reward;
    if (res.reward < 0.0) r.penalty_reward += res.reward;
    discount *= world.gamma();
    ++r.steps;
    s = res.next;
    r.path.push_back(s);
    if (option.stop_prob(world, s) >= 1.0) {
      r.stopped = true;
      break;
    }
  }
  r.stop_state = s;
  return r;
}

}  // namespace stomp
