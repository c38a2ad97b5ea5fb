#include "stomp/models.hpp"

#include "stomp/learning.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace stomp {

Vector sparse_product(const Matrix& W, const Vector& x) {
  if (W.cols() != x.size()) throw std::invalid_argument("model/feature dimension mismatch");
  Vector out = Vector::Zero(W.rows());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (x[k] != 0.0) out += x[k] * W.col(k);
  }
  return out;
}

double predict_reward(const LinearOptionModel& m, const FeatureVector& x) {
  if (m.w_r.size() != x.size()) throw std::invalid_argument("model/feature dimension mismatch");
  return m.w_r.dot(x);
}

Vector predict_next(const LinearOptionModel& m, const FeatureVector& x) { return sparse_product(m.W, x); }

IdealizedModel idealized_model(const GridWorld& world, const OptionDef& option) {
  return idealized_model(world, tabulate(option, world));
}

IdealizedModel idealized_model(const GridWorld& world, const OptionTable& table) {
  const int n = world.num_states();
  const double gamma = world.gamma();
  // A(s,s') = sum_a pi(a|s) P(s'|s,a) over non-terminal s'; b(s) = expected one-step reward.
  Matrix continue_part = Matrix::Zero(n, n);
  Matrix stop_part = Matrix::Zero(n, n);
  Vector b = Vector::Zero(n);
  for (int s = 0; s < n; ++s) {
    for (Action a : kAllActions) {
      const double pi = table.probs(s, static_cast<int>(a));
      if (pi == 0.0) continue;
      for (const Outcome& o : world.transitions().outcomes(EnvState(s), a)) {
        b[s] += pi * o.probability * o.reward;
        if (o.next.is_terminal()) continue;
        const int t = o.next.index();
        const double beta = table.stop[t];
        continue_part(s, t) += pi * o.probability * (1.0 - beta);
        stop_part(s, t) += pi * o.probability * beta;
      }
    }
  }
  // r = b + gamma*C r and P = gamma*S + gamma*C P share the operator (I - gamma*C).
  const Matrix op = Matrix::Identity(n, n) - gamma * continue_part;
  Eigen::PartialPivLU<Matrix> lu(op);
  IdealizedModel model;
  model.r = lu.solve(b);
  model.p = lu.solve(gamma * stop_part);
  const double residual = (op * model.r - b).cwiseAbs().maxCoeff() +
                          (op * model.p - gamma * stop_part).cwiseAbs().maxCoeff();
  if (!model.r.allFinite() || !model.p.allFinite() || !(residual < 1e-9)) {
    throw std::runtime_error("idealized model did not converge (option may never stop)");
  }
  return model;
}

LinearOptionModel to_linear_model(const GridWorld& world, const IdealizedModel& ideal) {
  const int n = world.num_states();
  LinearOptionModel m(n);
  m.w_r = ideal.r;
  m.W = ideal.p.transpose();
  return m;
}

ModelRmse model_rmse(const LinearOptionModel& learned, const IdealizedModel& ideal, const GridWorld& world) {
  const int n = world.num_states();
  double reward_sq = 0.0;
  double transition_sq = 0.0;
  for (int s = 0; s < n; ++s) {
    const FeatureVector x = features(world, EnvState(s));
    const double dr = predict_reward(learned, x) - ideal.r[s];
    reward_sq += dr * dr;
    // With 1-hot features sum_s' p(s'|s) x(s') is row s of p.
    transition_sq += (predict_next(learned, x) - ideal.p.row(s).transpose()).squaredNorm();
  }
  return {std::sqrt(reward_sq / n), std::sqrt(transition_sq / (static_cast<double>(n) * n))};
}

void ModelHyperparams::validate() const {
  if (!(alpha_r > 0 && alpha_p > 0)) throw std::invalid_argument("model step sizes must be positive");
  if (lambda < 0 || lambda > 1) throw std::invalid_argument("model lambda must lie in [0,1]");
  if (gamma < 0 || gamma >= 1) throw std::invalid_argument("gamma must lie in [0,1)");
}

ModelLearner::ModelLearner(const GridWorld& world, const std::vector<OptionDef>& options,
                           const ModelHyperparams& hp)
    : world_(&world), hp_(hp) {
  hp_.validate();
  const int d = world.num_states();
  for (const OptionDef& o : options) {
    tables_.push_back(tabulate(o, world));
    models_.emplace_back(d);
    e_r_.push_back(Vector::Zero(d));
    e_p_.push_back(Vector::Zero(d));
  }
}

void ModelLearner::update(EnvState s, Action a, double reward, EnvState s_next) {
  const GridWorld& world = *world_;
  const FeatureVector x = features(world, s);
  const FeatureVector x_next = features(world, s_next);
  const double gamma = hp_.gamma;
  const Eigen::Index d = x.size();

  for (std::size_t o = 0; o < models_.size(); ++o) {
    const double pi = tables_[o].probs(s.index(), static_cast<int>(a));
    const double rho = importance_ratio(pi, kBehaviorProb);
    if (rho == 0.0) {
      e_r_[o].setZero();
      e_p_[o].setZero();
      continue;
    }
    LinearOptionModel& m = models_[o];
    const double beta = s_next.is_terminal() ? 1.0 : tables_[o].stop[s_next.index()];
    const double decay = gamma * hp_.lambda * (1.0 - beta);
    const double cont_scale = hp_.literal_recursion ? gamma : 1.0;

    // Reward part.
    const double r_now = m.w_r.dot(x);
    const double r_next = cont_scale * m.w_r.dot(x_next);
    const double delta_r = td_error(reward, 0.0, r_now, r_next, beta, gamma);
    uwt(m.w_r, e_r_[o], x, hp_.alpha_r * delta_r, rho, decay);

    // Transition part, one TD error per row j with a shared trace.
    const Vector n_now = sparse_product(m.W, x);
    const Vector n_next = sparse_product(m.W, x_next);
    Vector alpha_delta(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      alpha_delta[j] = hp_.alpha_p * td_error(0.0, gamma * x_next[j], n_now[j], cont_scale * n_next[j], beta, gamma);
    }
    Vector& e = e_p_[o];
    e = rho * (e + x);
    for (Eigen::Index k = 0; k < d; ++k) {
      if (e[k] != 0.0) m.W.col(k) += alpha_delta * e[k];
    }
    e *= decay;
  }
}

ModelLearningResult learn_models(const GridWorld& world, const std::vector<OptionDef>& options,
                                 const ModelHyperparams& hp, long steps, std::uint64_t seed,
                                 const ModelLearningEval& eval) {
  ModelLearner learner(world, options, hp);
  ModelLearningResult result;
  const bool logging = eval.cadence > 0 && eval.ideals.size() == options.size();
  auto log_point = [&](long t) {
    if (!logging) return;
    for (std::size_t o = 0; o < options.size(); ++o) {
      const ModelRmse err = model_rmse(learner.models()[o], eval.ideals[o], world);
      result.log.add("models", "steps", static_cast<double>(t), options[o].label() + "/reward_rmse", err.reward);
      result.log.add("models", "steps", static_cast<double>(t), options[o].label() + "/transition_rmse",
                     err.transition);
    }
  };
  auto maybe_snapshot = [&](long t) {
    for (long snap : eval.snapshot_steps) {
      if (snap == t) result.snapshots[t] = learner.models();
    }
  };

  Rng rng(seed);
  log_point(0);
  maybe_snapshot(0);
  EnvState s = world.start_state();
  for (long t = 1; t <= steps; ++t) {
    if (s.is_terminal()) s = world.start_state();
    const Action a = static_cast<Action>(std::uniform_int_distribution<int>(0, kNumActions - 1)(rng));
    const StepResult res = step(world, s, a, rng);
    learner.update(s, a, res.reward, res.next);
    s = res.next;
    if (logging && t % eval.cadence == 0) log_point(t);
    maybe_snapshot(t);
  }
  result.models = learner.models();
  return result;
}

void write_model_snapshot(std::ostream& out, const std::string& option, long step, const LinearOptionModel& m,
                          bool header) {
  const Eigen::Index d = m.w_r.size();
  if (header) {
    out << "option,step,part,row";
    for (Eigen::Index k = 0; k < d; ++k) out << ",v" << k;
    out << '\n';
  }
  out << option << ',' << step << ",reward,-1";
  for (Eigen::Index k = 0; k < d; ++k) out << ',' << format_number(m.w_r[k]);
  out << '\n';
  for (Eigen::Index j = 0; j < d; ++j) {
    out << option << ',' << step << ",transition," << j;
    for (Eigen::Index k = 0; k < d; ++k) out << ',' << format_number(m.W(j, k));
    out << '\n';
  }
}

std::vector<ModelSnapshot> read_model_snapshots(std::istream& in) {
  std::vector<ModelSnapshot> out;
  std::string line;
  if (!std::getline(in, line) || line.rfind("option,step,part,row", 0) != 0) {
    throw std::runtime_error("model snapshot: missing header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string option, step, part, index, cell;
    std::getline(row, option, ',');
    std::getline(row, step, ',');
    std::getline(row, part, ',');
    std::getline(row, index, ',');
    std::vector<double> values;
    while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
    const auto d = static_cast<Eigen::Index>(values.size());
    if (out.empty() || out.back().option != option || out.back().step != std::stol(step)) {
      ModelSnapshot snap{option, std::stol(step), LinearOptionModel(d)};
      out.push_back(std::move(snap));
    }
    LinearOptionModel& m = out.back().model;
    if (m.w_r.size() != d) throw std::runtime_error("model snapshot: inconsistent row width");
    const Eigen::Map<const Vector> v(values.data(), d);
    if (part == "reward") {
      m.w_r = v;
    } else if (part == "transition") {
      const long j = std::stol(index);
      if (j < 0 || j >= d) throw std::runtime_error("model snapshot: row index out of range");
      m.W.row(j) = v.transpose();
    } else {
      throw std::runtime_error("model snapshot: unknown part '" + part + "'");
    }
  }
  return out;
}

}  // namespace stomp
