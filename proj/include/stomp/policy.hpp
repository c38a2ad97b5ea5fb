#pragma once

#include "stomp/gridworld.hpp"
#include "stomp/types.hpp"

#include <span>
#include <vector>

namespace stomp {

/// Softmax policy with linear preferences theta . phi(s,a).
struct SoftmaxActor {
  Vector theta;

  SoftmaxActor() = default;
  explicit SoftmaxActor(int dimension) : theta(Vector::Zero(dimension)) {}
};

/// phi(s,a) for each of the four actions, in action order.
std::vector<FeatureVector> action_features(const GridWorld& world, EnvState s);

/// Softmax probabilities, computed with the maximum preference subtracted.
Vector policy_probs(const SoftmaxActor& actor, std::span<const FeatureVector> phi_all);
Vector policy_probs(const Vector& theta, std::span<const FeatureVector> phi_all);

/// Score function: phi(s,a) - sum_b pi(b|s) phi(s,b).
Vector grad_log_policy(const SoftmaxActor& actor, std::span<const FeatureVector> phi_all, Action a);

/// pi / mu. The behavior probability must be positive.
double importance_ratio(double pi_prob, double mu_prob);

}  // namespace stomp
