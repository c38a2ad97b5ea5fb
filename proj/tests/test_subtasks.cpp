#include "generators.hpp"
#include "stomp/planner.hpp"
#include "stomp/subtasks.hpp"

#include <doctest.h>

#include <cmath>

using namespace stomp;
using stomp::testing::Gen;
using stomp::testing::kCases;

namespace {

/// Discounted GVF return of one rollout: sum gamma^(k-1) c_k + gamma^(K-1) z(S_K).
double gvf_return(const GridWorld& world, const OptionDef& option, const GvfTask& task, const Vector& w_primary,
                  Rng& rng) {
  EnvState s = world.start_state();
  double total = 0.0;
  double discount = 1.0;
  for (int k = 0; k < 100000; ++k) {
    const StepResult r = step(world, s, option.greedy_action(world, s), rng);
    total += discount * cumulant(task, r.reward);
    if (r.next.is_terminal()) return total;
    if (option.stop_prob(world, r.next) >= 1.0) {
      return total + discount * stopping_value(task, features(world, r.next), w_primary);
    }
    discount *= world.gamma();
    s = r.next;
  }
  FAIL("option never stopped");
  return 0.0;
}

/// Value of a deterministic option under its own stopping rule, by iterative evaluation.
Vector evaluate_option(const GridWorld& world, const OptionDef& option, const GvfTask& task, const Vector& w_primary) {
  const int n = world.num_states();
  Vector v = Vector::Zero(n);
  for (int sweep = 0; sweep < 200000; ++sweep) {
    Vector next(n);
    for (int s = 0; s < n; ++s) {
      double q = 0.0;
      for (const Outcome& o : world.transitions().outcomes(EnvState(s), option.greedy_action(world, EnvState(s)))) {
        double cont = 0.0;
        if (!o.next.is_terminal()) {
          cont = option.stop_prob(world, o.next) >= 1.0 ? stopping_value(task, features(world, o.next), w_primary)
                                                         : world.gamma() * v[o.next.index()];
        }
        q += o.probability * (cumulant(task, o.reward) + cont);
      }
      next[s] = q;
    }
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (change < 1e-13) break;
  }
  return v;
}

}  // namespace

TEST_SUITE("subtasks") {
  TEST_CASE("cumulants by task kind") {
    const GridWorld world = build_two_room();
    const EnvState h = world.hallway_state("H1").value();
    const GvfTask rr = make_feature_attainment_task(h.index(), 1.0);
    const GvfTask sp_step = make_shortest_path_task(world, h, ShortestPathForm::kStepCost);
    const GvfTask sp_unit = make_shortest_path_task(world, h, ShortestPathForm::kUnitStop);
    const GvfTask eig = make_eigen_task(world, 1, 1);
    for (double r : {-1.0, 0.0, 1.0}) {
      CHECK(cumulant(rr, r) == r);
      CHECK(cumulant(sp_step, r) == -1.0);
      CHECK(cumulant(sp_unit, r) == 0.0);
      CHECK(cumulant(eig, r) == 0.0);
    }
  }

  TEST_CASE("reward-respecting stopping value swaps in the bonus at the target") {
    Gen gen(21);
    for (int i = 0; i < kCases; ++i) {
      const int d = gen.integer(2, 30);
      const int target = gen.integer(0, d - 1);
      const double bonus = gen.uniform(-5.0, 100.0);
      const GvfTask task = make_feature_attainment_task(target, bonus);
      const Vector w = gen.vector(d, -2.0, 2.0);
      const Vector x = gen.one_hot(d, 0.2);
      const double expected = x.isZero() ? 0.0 : (x[target] == 1.0 ? bonus : w.dot(x));
      CHECK(stopping_value(task, x, w) == expected);
    }
  }

  TEST_CASE("stopping condition") {
    Gen gen(22);
    for (int i = 0; i < kCases; ++i) {
      const int d = gen.integer(2, 20);
      const GvfTask task = make_feature_attainment_task(gen.integer(0, d - 1), gen.uniform(0.0, 10.0));
      const Vector w_task = gen.vector(d);
      const Vector x = gen.one_hot(d);
      const double z = gen.uniform(-1.0, 1.0);
      CHECK(stopping_condition(task, x, w_task, z, true) == 1.0);
      CHECK(stopping_condition(task, x, w_task, z, false) == (z >= w_task.dot(x) ? 1.0 : 0.0));
      CHECK(stopping_condition(task, x, w_task, w_task.dot(x), false) == 1.0);
    }
    const GridWorld world = build_four_room();
    const EnvState h = world.hallway_state("H2").value();
    const GvfTask sp = make_shortest_path_task(world, h);
    for (int s = 0; s < world.num_states(); ++s) {
      CHECK(stopping_condition(sp, features(world, EnvState(s)), Vector::Zero(world.num_states()), 0.0, false) ==
            (s == h.index() ? 1.0 : 0.0));
    }
  }

  TEST_CASE("task construction rejects bad input") {
    const GridWorld world = build_two_room();
    CHECK_THROWS(make_feature_attainment_task(-1, 1.0));
    CHECK_THROWS(make_feature_attainment_task(0, std::nan("")));
    CHECK_THROWS(make_shortest_path_task(world, EnvState(0)));
    CHECK_THROWS(make_shortest_path_task(world, EnvState::terminal()));
    CHECK_THROWS(make_eigen_task(world, world.num_states(), 1));
    CHECK_THROWS(make_eigen_task(world, 1, 0));

    const GvfTask a = make_feature_attainment_task(3, 1.0, "a");
    const GvfTask b = make_feature_attainment_task(3, 10.0, "b");
    const GvfTask c = make_feature_attainment_task(4, 1.0, "a");
    const GvfTask sp = make_shortest_path_task(world, world.hallway_state("H1").value(), ShortestPathForm::kStepCost, "sp");
    const GvfTask rr_h = make_feature_attainment_task(world.hallway_state("H1")->index(), 1.0, "rr");
    CHECK_THROWS(validate_task_set(std::vector<GvfTask>{a, b}));
    CHECK_THROWS(validate_task_set(std::vector<GvfTask>{a, c}));
    CHECK_NOTHROW(validate_task_set(std::vector<GvfTask>{a, sp, rr_h}));
  }

  TEST_CASE("graph Laplacian and eigen tasks") {
    Gen gen(23);
    for (int i = 0; i < kCases / 4; ++i) {
      const GridWorld world = gen.world();
      const Matrix L = graph_laplacian(world);
      CHECK((L - L.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(L.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
      if (world.num_states() < 3) continue;
      Eigen::SelfAdjointEigenSolver<Matrix> solver(L);
      if (solver.eigenvalues()[1] < 1e-9) continue;  // goal cell splits the graph
      for (int sign : {1, -1}) {
        const GvfTask t = make_eigen_task(world, 1, sign, "e");
        const Vector v = t.eigen_values;
        CHECK(v.norm() == doctest::Approx(1.0));
        CHECK((L * v - solver.eigenvalues()[1] * v).cwiseAbs().maxCoeff() < 1e-8);
        Eigen::Index peak = 0;
        (sign * v).cwiseAbs().maxCoeff(&peak);
        CHECK(sign * v[peak] > 0.0);
      }
    }
  }

  TEST_CASE("subtask oracle is greedy-consistent with its option") {
    // The option read off the oracle values, evaluated on its own, reproduces them.
    Gen gen(24);
    int checked = 0;
    for (int i = 0; i < kCases / 2; ++i) {
      const GridWorld world = gen.world();
      if (world.hallway_labels().empty()) continue;
      const Vector w_mu = behavior_policy_values(world);
      const EnvState h = world.hallway_state("H1").value();
      const GvfTask task = gen.coin() ? make_feature_attainment_task(h.index(), gen.uniform(0.0, 20.0), "rr")
                                      : make_shortest_path_task(world, h, ShortestPathForm::kStepCost, "sp");
      const Vector v = optimal_subtask_values(world, task, w_mu);
      const OptionDef option = optimal_option(world, task, w_mu);
      const Vector v_pi = evaluate_option(world, option, task, w_mu);
      CHECK((v - v_pi).cwiseAbs().maxCoeff() < 1e-8);
      ++checked;
    }
    CHECK(checked > 0);
  }

  TEST_CASE("subtask oracle agrees with Monte-Carlo returns of the oracle option") {
    const GridWorld world = build_four_room();
    const Vector w_mu = behavior_policy_values(world);
    Rng rng(25);
    for (const std::string& label : world.hallway_labels()) {
      const GvfTask task = make_feature_attainment_task(world.hallway_state(label)->index(), 1.0, label);
      const Vector v = optimal_subtask_values(world, task, w_mu);
      const OptionDef option = optimal_option(world, task, w_mu);
      const int n = 4000;
      double sum = 0.0, sq = 0.0;
      for (int k = 0; k < n; ++k) {
        const double g = gvf_return(world, option, task, w_mu, rng);
        sum += g;
        sq += g * g;
      }
      const double mean = sum / n;
      const double se = std::sqrt(std::max(0.0, sq / n - mean * mean) / n);
      CHECK(std::abs(mean - v[world.start_state().index()]) < 4.0 * se + 1e-9);
    }
  }

  TEST_CASE("two-room hallway subtask avoids the penalty") {
    const GridWorld world = build_two_room();
    const Vector w_mu = behavior_policy_values(world);
    const EnvState h = world.hallway_state("H1").value();
    const GvfTask task = make_feature_attainment_task(h.index(), 1.0, "rr");
    const OptionDef option = optimal_option(world, task, w_mu);
    Rng rng(1);
    const Rollout r = rollout_option(world, option, world.start_state(), rng, true);
    CHECK(r.stopped);
    CHECK(r.stop_state == h);
    CHECK(r.penalty_reward == 0.0);
    // Fixed-set shortest path, step-cost form: value is -(steps) from the start.
    const GvfTask sp = make_shortest_path_task(world, h, ShortestPathForm::kStepCost);
    const Vector v_sp = optimal_subtask_values(world, sp, w_mu);
    const Cell start = world.layout().start, hall = world.layout().hallways[0];
    const int manhattan = std::abs(start.row - hall.row) + std::abs(start.col - hall.col);
    double expected = 0.0;
    for (int k = 0; k < manhattan; ++k) expected -= std::pow(world.gamma(), k);
    CHECK(v_sp[world.start_state().index()] == doctest::Approx(expected).epsilon(1e-10));
  }

  TEST_CASE("unit-stop shortest path values") {
    const GridWorld world = build_two_room();
    const EnvState h = world.hallway_state("H1").value();
    const GvfTask sp = make_shortest_path_task(world, h, ShortestPathForm::kUnitStop);
    const Vector w = Vector::Zero(world.num_states());
    for (int s = 0; s < world.num_states(); ++s) {
      const FeatureVector x = features(world, EnvState(s));
      CHECK(stopping_value(sp, x, w) == (s == h.index() ? 1.0 : 0.0));
      if (s != h.index()) CHECK(stopping_condition(sp, x, w, 0.0, false) == 0.0);
    }
  }

  TEST_CASE("two-room Fiedler vector separates the rooms") {
    const GridWorld world = build_two_room();
    const GvfTask t = make_eigen_task(world, 1, 1);
    Eigen::SelfAdjointEigenSolver<Matrix> dense(graph_laplacian(world));
    CHECK(std::abs(std::abs(t.eigen_values.dot(dense.eigenvectors().col(1))) - 1.0) < 1e-9);
    double left_sign = 0, right_sign = 0;
    Eigen::Index peak = 0;
    t.eigen_values.cwiseAbs().maxCoeff(&peak);
    for (int s = 0; s < world.num_states(); ++s) {
      const Cell c = world.cell_of(EnvState(s));
      if (c.col < 6) left_sign += t.eigen_values[s] > 0 ? 1 : -1;
      if (c.col > 6) right_sign += t.eigen_values[s] > 0 ? 1 : -1;
    }
    CHECK(std::abs(left_sign) == 36);
    CHECK(std::abs(right_sign) == 35);
    CHECK(left_sign * right_sign < 0);
    // The extreme entry lies at least five moves from the hallway.
    const Cell far = world.cell_of(EnvState(static_cast<int>(peak)));
    const Cell hall = world.layout().hallways[0];
    CHECK(std::abs(far.row - hall.row) + std::abs(far.col - hall.col) >= 5);
  }

  TEST_CASE("bonus weight decides between hallway, goal and penalty shortcut") {
    const GridWorld world = build_two_room();
    const Vector w_mu = behavior_policy_values(world);
    const EnvState h = world.hallway_state("H1").value();
    Rng rng(26);
    auto roll = [&](double bonus) {
      const OptionDef o = optimal_option(world, make_feature_attainment_task(h.index(), bonus, "rr"), w_mu);
      return rollout_option(world, o, world.start_state(), rng, true);
    };
    const Rollout low = roll(0.1);
    CHECK(low.stop_state.is_terminal());
    CHECK(low.penalty_reward == 0.0);
    const Rollout one = roll(1.0);
    CHECK(one.stop_state == h);
    CHECK(one.penalty_reward == 0.0);
    const Rollout high = roll(100.0);
    CHECK(high.stop_state == h);
    CHECK(high.penalty_reward < 0.0);
    CHECK(high.steps == 7);
  }
}
