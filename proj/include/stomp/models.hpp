#pragma once

#include "stomp/gridworld.hpp"
#include "stomp/option.hpp"
#include "stomp/run_log.hpp"
#include "stomp/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace stomp {

/// Linear expectation model of one option: r_hat(x) = w_r . x, n_hat(x) = W x.
struct LinearOptionModel {
  Vector w_r;
  Matrix W;

  LinearOptionModel() = default;
  explicit LinearOptionModel(Eigen::Index dimension)
      : w_r(Vector::Zero(dimension)), W(Matrix::Zero(dimension, dimension)) {}
};

double predict_reward(const LinearOptionModel& m, const FeatureVector& x);
Vector predict_next(const LinearOptionModel& m, const FeatureVector& x);

/// Exact option model over environment states: discounted expected reward until
/// stopping, and discounted probability of stopping in each non-terminal state.
struct IdealizedModel {
  Vector r;  // r(s, o)
  Matrix p;  // p(s, s') = p(s' | s, o)
};

IdealizedModel idealized_model(const GridWorld& world, const OptionDef& option);
IdealizedModel idealized_model(const GridWorld& world, const OptionTable& table);

/// Tabular injection: w_r[s] = r(s,o) and column s of W is sum_s' p(s'|s,o) x(s').
LinearOptionModel to_linear_model(const GridWorld& world, const IdealizedModel& ideal);

struct ModelRmse {
  double reward = 0.0;
  double transition = 0.0;
};

/// Uniform RMSE over non-terminal states (reward part) and over state x feature
/// entries (transition part).
ModelRmse model_rmse(const LinearOptionModel& learned, const IdealizedModel& ideal, const GridWorld& world);

struct ModelHyperparams {
  double alpha_r = 0.1;
  double alpha_p = 0.1;
  double lambda = 0.0;
  double gamma = 0.99;
  /// Passes gamma * prediction(x_{t+1}) as the continuation value, as printed,
  /// so the continuation is discounted twice.
  bool literal_recursion = false;

  void validate() const;
};

/// Learns one linear model per option from a single behavior stream.
class ModelLearner {
 public:
  ModelLearner(const GridWorld& world, const std::vector<OptionDef>& options, const ModelHyperparams& hp);

  void update(EnvState s, Action a, double reward, EnvState s_next);

  const std::vector<LinearOptionModel>& models() const { return models_; }
  /// Shared trace of the transition rows for option `o`. All rows see the same
  /// gradient, ratio and decay, so their individual traces are identical.
  const Vector& transition_trace(std::size_t o) const { return e_p_[o]; }
  const Vector& reward_trace(std::size_t o) const { return e_r_[o]; }

 private:
  const GridWorld* world_;
  ModelHyperparams hp_;
  std::vector<OptionTable> tables_;
  std::vector<LinearOptionModel> models_;
  std::vector<Vector> e_r_;
  std::vector<Vector> e_p_;
};

struct ModelLearningEval {
  int cadence = 0;
  std::vector<IdealizedModel> ideals;  // one per option; empty disables RMSE logging
  std::vector<long> snapshot_steps;
};

struct ModelLearningResult {
  std::vector<LinearOptionModel> models;
  std::map<long, std::vector<LinearOptionModel>> snapshots;
  RunLog log;
};

ModelLearningResult learn_models(const GridWorld& world, const std::vector<OptionDef>& options,
                                 const ModelHyperparams& hp, long steps, std::uint64_t seed,
                                 const ModelLearningEval& eval = {});

/// Text snapshot: rows `option,step,part,row,v0,...` with part `reward` (row -1)
/// or `transition` (row j holds row j of W).
void write_model_snapshot(std::ostream& out, const std::string& option, long step, const LinearOptionModel& m,
                          bool header = true);

struct ModelSnapshot {
  std::string option;
  long step = 0;
  LinearOptionModel model;
};
std::vector<ModelSnapshot> read_model_snapshots(std::istream& in);

/// W x summed over the nonzero entries of x only.
Vector sparse_product(const Matrix& W, const Vector& x);

}  // namespace stomp
