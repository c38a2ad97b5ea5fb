#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace stomp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A state-feature vector x(s) or a state-action feature vector phi(s,a).
using FeatureVector = Eigen::VectorXd;

/// Every random decision in a run draws from a caller-owned engine of this type.
using Rng = std::mt19937_64;

/// Seed for one (base seed, run, stage) triple, so stages never share a stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t run, std::uint64_t stage) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(stage)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace stomp
