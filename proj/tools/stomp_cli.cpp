#include "stomp/config.hpp"
#include "stomp/harness.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace stomp;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "Config file (INI) or built-in preset name");
  if (config_required) opt->required();
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--seed", c.seed, "Base seed");
  cmd->add_option("--runs", c.runs, "Number of runs")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", c.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
}

/// Config text from a file, or from a preset when no such file exists.
std::string config_text(const std::string& ref) {
  if (fs::exists(ref)) {
    std::ifstream in(ref);
    if (!in) throw std::runtime_error("cannot read config '" + ref + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }
  const std::string name = fs::path(ref).stem().string();
  const auto& presets = preset_texts();
  const auto it = presets.find(name);
  if (it == presets.end()) throw std::runtime_error("config '" + ref + "' is neither a readable file nor a preset");
  return it->second;
}

void apply(const Common& c, ExperimentConfig& cfg) {
  if (!c.out.empty()) cfg.output = c.out;
  if (c.seed) cfg.seed = *c.seed;
  if (c.runs) cfg.runs = *c.runs;
  if (c.threads) cfg.threads = *c.threads;
}

void report(const ExperimentResult& r) {
  std::cout << "wrote " << r.logs.size() << " run logs and aggregate.csv to " << r.output_dir.string() << "\n";
}

int run_config(const Common& c, const std::function<void(ExperimentConfig&)>& adjust) {
  const std::string text = config_text(c.config);
  ExperimentConfig cfg = parse_config(text);
  apply(c, cfg);
  adjust(cfg);
  report(run_experiment(cfg, true, text));
  return 0;
}

int validate_layout(const std::string& name) {
  const GridWorld world = build_world(name);
  const LayoutReport rep = verify_layout(world);
  std::cout << to_text(world.layout());
  std::cout << "non-terminal states: " << rep.non_terminal_states << "\n";
  std::cout << "connected: " << (rep.connected ? "yes" : "no") << "\n";
  std::cout << "V*(start): " << format_number(rep.start_value) << "\n";
  std::cout << "optimal path length: " << rep.optimal_path_length << "\n";
  std::cout << "optimal route avoids penalty: " << (rep.optimal_route_penalty_free ? "yes" : "no") << "\n";
  bool ok = rep.connected;
  if (name == "two_room") {
    const bool states_ok = rep.non_terminal_states == 72;
    const bool value_ok = std::abs(rep.start_value - std::pow(0.99, 18)) <= 1e-9;
    std::cout << "check 72 states: " << (states_ok ? "ok" : "FAIL") << "\n";
    std::cout << "check V*(start) = 0.99^18: " << (value_ok ? "ok" : "FAIL") << "\n";
    std::cout << "check penalty-free route: " << (rep.optimal_route_penalty_free ? "ok" : "FAIL") << "\n";
    ok = ok && states_ok && value_ok && rep.optimal_route_penalty_free;
  }
  return ok ? 0 : 1;
}

int oracle(const Common& c) {
  const std::string text = config_text(c.config.empty() ? "two_room" : c.config);
  ExperimentConfig cfg = parse_config(text);
  apply(c, cfg);
  cfg.validate();
  const GridWorld world = build_world(cfg.environment);
  const Oracles oracles = compute_oracles(world, cfg);
  const fs::path dir = output_directory(cfg);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "oracle_values.csv");
    write_oracle_csv(out, world, oracles);
  }
  {
    std::ofstream out(dir / "idealized_models.csv");
    std::vector<OptionDef> options = primitive_options();
    for (const GvfTask& t : oracles.tasks) options.push_back(optimal_option(world, t, oracles.v_mu));
    bool header = true;
    for (const OptionDef& o : options) {
      write_model_snapshot(out, o.label(), 0, to_linear_model(world, idealized_model(world, o)), header);
      header = false;
    }
  }
  {
    std::ofstream out(dir / "layout.txt");
    out << to_text(world.layout());
  }
  std::cout << "V*(start) = " << format_number(oracles.v_star[world.start_state().index()]) << "\n";
  std::cout << "wrote oracle_values.csv, idealized_models.csv and layout.txt to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stomp: subtasks, options, models and planning in gridworlds"};
  app.require_subcommand(1);

  Common learn_opts, learn_models, plan_c, oracle_c, repro;
  auto* lo = app.add_subcommand("learn-options", "Learn options for the configured subtasks");
  add_common(lo, learn_opts, true);
  auto* lm = app.add_subcommand("learn-models", "Learn options, then their models; saves the models");
  add_common(lm, learn_models, true);
  auto* pl = app.add_subcommand("plan", "Run the configured pipeline through planning");
  add_common(pl, plan_c, true);
  std::string model_file;
  long model_step = -1;
  pl->add_option("--models", model_file, "Plan with models from a saved model file");
  pl->add_option("--model-step", model_step, "Snapshot step to use from --models (default: largest)");
  auto* orc = app.add_subcommand("oracle", "Write exact values and idealized models as CSV");
  add_common(orc, oracle_c, false);
  auto* rep = app.add_subcommand("reproduce", "Run a figure preset");
  std::string fig;
  rep->add_option("figure", fig, "fig1, fig2, fig3, fig4, fig5, fig7, fig8, fig9 or fig10")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "fig3", "fig4", "fig5", "fig7", "fig8", "fig9", "fig10"}));
  add_common(rep, repro, false);
  auto* vl = app.add_subcommand("validate-layout", "Check a built-in layout against its stated properties");
  std::string layout;
  vl->add_option("name", layout, "two_room or four_room")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*lo) {
      return run_config(learn_opts, [](ExperimentConfig& cfg) {
        cfg.model_source = ModelSource::kNone;
        cfg.planning = false;
      });
    }
    if (*lm) {
      return run_config(learn_models, [](ExperimentConfig& cfg) {
        cfg.model_source = ModelSource::kLearned;
        cfg.save_models = true;
        cfg.planning = false;
      });
    }
    if (*pl) {
      return run_config(plan_c, [&](ExperimentConfig& cfg) {
        cfg.planning = true;
        if (!model_file.empty()) {
          cfg.model_source = ModelSource::kFile;
          cfg.model_file = model_file;
          cfg.model_file_step = model_step;
          cfg.plan_snapshots.clear();
        }
      });
    }
    if (*orc) return oracle(oracle_c);
    if (*rep) {
      repro.config = fig;
      return run_config(repro, [](ExperimentConfig&) {});
    }
    if (*vl) return validate_layout(layout);
  } catch (const std::exception& e) {
    std::cerr << "stomp: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
