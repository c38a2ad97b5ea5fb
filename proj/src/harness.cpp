#include "stomp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace stomp {

namespace {

std::string bonus_suffix(double b) { return "_w" + format_number(b); }

bool is_swept(const TaskSpec& t, const ExperimentConfig& cfg) {
  return t.kind == TaskKind::kRewardRespecting && !cfg.bonus_sweep.empty();
}

GvfTask build_task(const GridWorld& world, const TaskSpec& t, double bonus, const std::string& label) {
  switch (t.kind) {
    case TaskKind::kRewardRespecting: {
      const int feature = t.feature >= 0 ? t.feature : world.hallway_state(t.target).value().index();
      return make_feature_attainment_task(feature, bonus, label);
    }
    case TaskKind::kShortestPath: {
      const EnvState subgoal = t.feature >= 0 ? EnvState(t.feature) : world.hallway_state(t.target).value();
      return make_shortest_path_task(world, subgoal, t.form, label);
    }
    case TaskKind::kEigen:
      return make_eigen_task(world, t.eigen_index, t.sign, label);
  }
  throw std::logic_error("unhandled task kind");
}

std::vector<std::string> split_menu(const std::string& menu) {
  std::vector<std::string> terms;
  std::stringstream in(menu);
  std::string term;
  while (std::getline(in, term, '+')) terms.push_back(term);
  return terms;
}

/// Seed for one (run, stage) pair of this config.
std::uint64_t stage_seed(const ExperimentConfig& cfg, int run, SeedStage stage) {
  return derive_seed(cfg.seed + static_cast<std::uint64_t>(run), static_cast<std::uint64_t>(run),
                     static_cast<std::uint64_t>(stage));
}

void log_option_diagnostics(const GridWorld& world, const std::vector<OptionDef>& options,
                            const std::vector<GvfTask>& tasks, Rng& rng, RunLog& log) {
  const int n = world.num_states();
  for (std::size_t i = 0; i < options.size(); ++i) {
    const OptionDef& o = options[i];
    const std::string& label = o.label();
    const Rollout r = rollout_option(world, o, world.start_state(), rng, true, 20 * n);
    bool passes_penalty = false;
    for (EnvState s : r.path) passes_penalty = passes_penalty || (!s.is_terminal() && world.is_penalty(s));
    const double x = static_cast<double>(i);
    log.add("rollout", "option", x, label + "/discounted_reward", r.discounted_reward);
    log.add("rollout", "option", x, label + "/penalty", r.penalty_reward);
    log.add("rollout", "option", x, label + "/steps", r.steps);
    log.add("rollout", "option", x, label + "/stopped", r.stopped ? 1.0 : 0.0);
    log.add("rollout", "option", x, label + "/stop_state", r.stop_state.index());
    log.add("rollout", "option", x, label + "/passes_penalty", passes_penalty ? 1.0 : 0.0);
    if (tasks[i].feature_index >= 0) {
      log.add("rollout", "option", x, label + "/stops_at_target",
              r.stop_state.index() == tasks[i].feature_index ? 1.0 : 0.0);
    }
    const OptionTable table = tabulate(o, world);
    for (int s = 0; s < n; ++s) {
      log.add("option_policy", "state", s, label + "/action", static_cast<int>(o.greedy_action(world, EnvState(s))));
      log.add("option_policy", "state", s, label + "/stop", table.stop[s]);
    }
  }
}

std::vector<LinearOptionModel> models_from_file(const ExperimentConfig& cfg, const std::vector<OptionDef>& options) {
  std::ifstream in(cfg.model_file);
  if (!in) throw std::runtime_error("cannot read model file '" + cfg.model_file + "'");
  const std::vector<ModelSnapshot> snaps = read_model_snapshots(in);
  long step = cfg.model_file_step;
  if (step < 0) {
    for (const ModelSnapshot& s : snaps) step = std::max(step, s.step);
  }
  std::vector<LinearOptionModel> out;
  for (const OptionDef& o : options) {
    const auto it = std::find_if(snaps.begin(), snaps.end(),
                                 [&](const ModelSnapshot& s) { return s.option == o.label() && s.step == step; });
    if (it == snaps.end()) {
      throw std::runtime_error("model file has no model for '" + o.label() + "' at step " + std::to_string(step));
    }
    out.push_back(it->model);
  }
  return out;
}

OptionMenu build_menu(const std::string& menu, const std::vector<OptionDef>& options,
                      const std::vector<LinearOptionModel>& models, const std::vector<std::string>& option_groups) {
  // options/models hold the four primitives first, then one entry per task.
  OptionMenu out;
  for (int a = 0; a < kNumActions; ++a) out.push_back({options[static_cast<std::size_t>(a)].label(), models[static_cast<std::size_t>(a)]});
  const std::vector<std::string> terms = split_menu(menu);
  for (std::size_t t = 1; t < terms.size(); ++t) {
    for (std::size_t i = 0; i < option_groups.size(); ++i) {
      if (option_groups[i] == terms[t]) out.push_back({options[kNumActions + i].label(), models[kNumActions + i]});
    }
  }
  return out;
}

}  // namespace

std::vector<ExpandedTask> expand_tasks(const GridWorld& world, const ExperimentConfig& cfg) {
  std::vector<ExpandedTask> out;
  for (const TaskSpec& t : cfg.tasks) {
    if (is_swept(t, cfg)) {
      for (std::size_t k = 0; k < cfg.bonus_sweep.size(); ++k) {
        const double b = cfg.bonus_sweep[k];
        out.push_back({build_task(world, t, b, t.label + bonus_suffix(b)), t.group + bonus_suffix(b), static_cast<int>(k)});
      }
    } else {
      out.push_back({build_task(world, t, t.bonus, t.label), t.group, -1});
    }
  }
  return out;
}

std::vector<std::string> expand_menus(const ExperimentConfig& cfg) {
  std::set<std::string> swept;
  for (const TaskSpec& t : cfg.tasks) {
    if (is_swept(t, cfg)) swept.insert(t.group);
  }
  std::vector<std::string> out;
  for (const std::string& menu : cfg.menus) {
    const std::vector<std::string> terms = split_menu(menu);
    const bool any = std::any_of(terms.begin(), terms.end(), [&](const std::string& g) { return swept.count(g) > 0; });
    if (!any) {
      out.push_back(menu);
      continue;
    }
    for (double b : cfg.bonus_sweep) {
      std::string m = terms.front();
      for (std::size_t i = 1; i < terms.size(); ++i) m += "+" + terms[i] + (swept.count(terms[i]) ? bonus_suffix(b) : "");
      out.push_back(m);
    }
  }
  return out;
}

Oracles compute_oracles(const GridWorld& world, const ExperimentConfig& cfg) {
  Oracles o;
  std::vector<IdealizedModel> prims;
  for (const OptionDef& p : primitive_options()) prims.push_back(idealized_model(world, p));
  o.v_star = exact_value_iteration(world, prims, 1e-12).values;
  o.v_mu = behavior_policy_values(world);
  for (ExpandedTask& t : expand_tasks(world, cfg)) {
    o.task_values.push_back(optimal_subtask_values(world, t.task, o.v_mu));
    o.tasks.push_back(std::move(t.task));
    o.groups.push_back(std::move(t.group));
    o.sweep_index.push_back(t.sweep_index);
  }
  return o;
}

RunResult run_single(const GridWorld& world, const ExperimentConfig& cfg, const Oracles& oracles, int run) {
  RunResult result;
  RunLog& log = result.log;

  // Options.
  std::vector<OptionDef> options;
  if (cfg.option_source == OptionSource::kLearned) {
    // Tasks sharing a feature (one per swept bonus) learn in separate passes
    // over the same experience stream; unswept tasks join the first pass.
    const int passes = std::max<int>(1, static_cast<int>(cfg.bonus_sweep.size()));
    options.resize(oracles.tasks.size());
    for (int pass = 0; pass < passes; ++pass) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < oracles.tasks.size(); ++i) {
        const int k = oracles.sweep_index[i];
        if (k == pass || (k < 0 && pass == 0)) members.push_back(i);
      }
      if (members.empty()) continue;
      LearningEval eval;
      eval.cadence = cfg.option_cadence;
      if (pass == 0) eval.primary_oracle = oracles.v_mu;
      std::vector<GvfTask> tasks;
      for (std::size_t i : members) {
        tasks.push_back(oracles.tasks[i]);
        eval.task_oracles.push_back(oracles.task_values[i]);
      }
      eval.mc_rollouts = cfg.mc_rollouts;
      eval.eval_seed = stage_seed(cfg, run, SeedStage::kEvaluation);
      OptionLearningResult learned = learn_options(world, tasks, cfg.learning, cfg.option_steps,
                                                   stage_seed(cfg, run, SeedStage::kOptions), eval);
      log.append(learned.log);
      for (std::size_t j = 0; j < members.size(); ++j) options[members[j]] = std::move(learned.options[j]);
    }
  } else if (cfg.option_source == OptionSource::kOracle) {
    for (const GvfTask& t : oracles.tasks) options.push_back(optimal_option(world, t, oracles.v_mu));
  }
  if (!options.empty()) {
    Rng rng(stage_seed(cfg, run, SeedStage::kRollout));
    log_option_diagnostics(world, options, oracles.tasks, rng, log);
  }

  // Models: the four primitive actions first, then every option.
  if (cfg.model_source == ModelSource::kNone) {
    log.set_run(run);
    return result;
  }
  std::vector<OptionDef> model_options = primitive_options();
  model_options.insert(model_options.end(), options.begin(), options.end());
  std::vector<LinearOptionModel> models;
  std::map<long, std::vector<LinearOptionModel>> snapshots;
  switch (cfg.model_source) {
    case ModelSource::kIdealized:
      for (const OptionDef& o : model_options) models.push_back(to_linear_model(world, idealized_model(world, o)));
      break;
    case ModelSource::kLearned: {
      ModelLearningEval eval;
      eval.cadence = cfg.model_cadence;
      if (eval.cadence > 0) {
        for (const OptionDef& o : model_options) eval.ideals.push_back(idealized_model(world, o));
      }
      eval.snapshot_steps = cfg.snapshot_steps;
      ModelLearningResult learned = learn_models(world, model_options, cfg.model_hp, cfg.model_steps,
                                                 stage_seed(cfg, run, SeedStage::kModels), eval);
      log.append(learned.log);
      models = std::move(learned.models);
      snapshots = std::move(learned.snapshots);
      if (cfg.save_models) {
        std::ostringstream out;
        bool header = true;
        auto dump = [&](long step, const std::vector<LinearOptionModel>& ms) {
          for (std::size_t i = 0; i < ms.size(); ++i) {
            write_model_snapshot(out, model_options[i].label(), step, ms[i], header);
            header = false;
          }
        };
        for (const auto& [step, ms] : snapshots) {
          if (step != cfg.model_steps) dump(step, ms);
        }
        dump(cfg.model_steps, models);
        result.model_snapshots = out.str();
      }
      break;
    }
    case ModelSource::kFile:
      models = models_from_file(cfg, model_options);
      break;
    case ModelSource::kNone:
      break;
  }

  // Planning. Every menu shares one state sequence per run.
  if (cfg.planning) {
    PlanSettings settings;
    settings.n_updates = cfg.plan_updates;
    settings.alpha = cfg.plan_alpha;
    settings.seed = stage_seed(cfg, run, SeedStage::kPlanning);
    settings.eval_cadence = cfg.plan_cadence;
    settings.reference = oracles.v_star;
    settings.tolerance = cfg.plan_tolerance;
    settings.sampling = cfg.sampling;
    for (const std::string& menu : expand_menus(cfg)) {
      settings.metric_prefix = menu + "/";
      log.append(plan(build_menu(menu, model_options, models, oracles.groups), world, settings).curve);
      for (long step : cfg.plan_snapshots) {
        settings.metric_prefix = menu + "@" + std::to_string(step) + "/";
        log.append(plan(build_menu(menu, model_options, snapshots.at(step), oracles.groups), world, settings).curve);
      }
    }
  }
  log.set_run(run);
  return result;
}

std::filesystem::path output_directory(const ExperimentConfig& cfg) {
  if (!cfg.output.empty()) return cfg.output;
  if (const char* env = std::getenv("STOMP_OUT"); env && *env) return std::filesystem::path(env) / cfg.id;
  return std::filesystem::path("out") / cfg.id;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write, const std::string& config_text) {
  cfg.validate();
  const GridWorld world = build_world(cfg.environment);
  const Oracles oracles = compute_oracles(world, cfg);

  std::vector<RunResult> results(static_cast<std::size_t>(cfg.runs));
  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, cfg.runs);
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::string error;
  auto worker = [&] {
    for (int r = next++; r < cfg.runs && !failed; r = next++) {
      try {
        results[static_cast<std::size_t>(r)] = run_single(world, cfg, oracles, r);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) {
          error = "run " + std::to_string(r) + " (seed " + std::to_string(cfg.seed + static_cast<std::uint64_t>(r)) +
                  ") failed: " + e.what();
        }
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failed) throw std::runtime_error(error);

  ExperimentResult out;
  for (RunResult& r : results) out.logs.push_back(std::move(r.log));
  out.curves = aggregate(out.logs);
  if (!write) return out;

  out.output_dir = output_directory(cfg);
  namespace fs = std::filesystem;
  fs::create_directories(out.output_dir / "runs");
  auto open = [](const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
    return f;
  };
  {
    std::ofstream f = open(out.output_dir / "layout.txt");
    f << to_text(world.layout());
  }
  if (!config_text.empty()) {
    std::ofstream f = open(out.output_dir / "config.ini");
    f << config_text;
  }
  for (std::size_t r = 0; r < out.logs.size(); ++r) {
    std::ostringstream name;
    name << "run_" << std::setw(3) << std::setfill('0') << r << ".csv";
    std::ofstream f = open(out.output_dir / "runs" / name.str());
    write_log_csv(f, {out.logs[r]});
    if (!results[r].model_snapshots.empty()) {
      fs::create_directories(out.output_dir / "models");
      std::ofstream m = open(out.output_dir / "models" / name.str());
      m << results[r].model_snapshots;
    }
  }
  {
    std::ofstream f = open(out.output_dir / "aggregate.csv");
    write_curves_csv(f, out.curves);
  }
  return out;
}

void write_oracle_csv(std::ostream& out, const GridWorld& world, const Oracles& oracles) {
  out << "state,row,col,v_star,v_mu";
  for (const GvfTask& t : oracles.tasks) out << ",task:" << t.label;
  out << '\n';
  for (int s = 0; s < world.num_states(); ++s) {
    const Cell c = world.cell_of(EnvState(s));
    out << s << ',' << c.row << ',' << c.col << ',' << format_number(oracles.v_star[s]) << ','
        << format_number(oracles.v_mu[s]);
    for (const Vector& v : oracles.task_values) out << ',' << format_number(v[s]);
    out << '\n';
  }
}

}  // namespace stomp
