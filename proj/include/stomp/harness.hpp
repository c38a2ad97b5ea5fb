#pragma once

#include "stomp/config.hpp"
#include "stomp/run_log.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace stomp {

/// Sub-seed stage ids, combined with the run seed through derive_seed.
enum class SeedStage : std::uint64_t { kOptions = 1, kModels = 2, kPlanning = 3, kEvaluation = 4, kRollout = 5 };

/// Exact quantities shared by every run of a config.
struct Oracles {
  Vector v_star;     // primitive-action value iteration, tol 1e-12
  Vector v_mu;       // equiprobable-policy value
  std::vector<GvfTask> tasks;          // expanded task list
  std::vector<std::string> groups;     // group per task
  std::vector<int> sweep_index;        // bonus-sweep entry per task, -1 if not swept
  std::vector<Vector> task_values;     // optimal subtask values per task
};

Oracles compute_oracles(const GridWorld& world, const ExperimentConfig& cfg);

/// Tasks after bonus-sweep expansion, each with its menu group.
struct ExpandedTask {
  GvfTask task;
  std::string group;
  int sweep_index = -1;
};
std::vector<ExpandedTask> expand_tasks(const GridWorld& world, const ExperimentConfig& cfg);
/// Menus after bonus-sweep expansion (`actions+rr` becomes `actions+rr_w0.1`, ...).
std::vector<std::string> expand_menus(const ExperimentConfig& cfg);

/// Everything one run produced.
struct RunResult {
  RunLog log;
  std::string model_snapshots;  // write_model_snapshot text, empty if none
};

/// One run with its own seed. Pure given (world, cfg, oracles, run).
RunResult run_single(const GridWorld& world, const ExperimentConfig& cfg, const Oracles& oracles, int run);

struct ExperimentResult {
  std::vector<RunLog> logs;  // in run order
  CurveStats curves;
  std::filesystem::path output_dir;
};

/// Validates cfg, executes all runs on a worker pool and writes
///   <out>/layout.txt, <out>/config.ini, <out>/runs/run_NNN.csv,
///   <out>/aggregate.csv and, when models are learned, <out>/models/run_NNN.csv.
/// `write` = false skips the files.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write = true, const std::string& config_text = {});

/// Output directory: cfg.output, else $STOMP_OUT/<id>, else out/<id>.
std::filesystem::path output_directory(const ExperimentConfig& cfg);

/// Oracle tables for a config: one row per state with v_star, v_mu and the
/// optimal subtask value of each task.
void write_oracle_csv(std::ostream& out, const GridWorld& world, const Oracles& oracles);

}  // namespace stomp
