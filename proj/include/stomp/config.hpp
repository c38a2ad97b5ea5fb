#pragma once

#include "stomp/learning.hpp"
#include "stomp/models.hpp"
#include "stomp/planner.hpp"
#include "stomp/subtasks.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace stomp {

/// One `[task:<label>]` section.
struct TaskSpec {
  std::string label;
  std::string group;  // menus refer to tasks by group
  TaskKind kind = TaskKind::kRewardRespecting;
  std::string target;  // hallway label, for reward-respecting and shortest-path tasks
  int feature = -1;    // explicit feature index instead of a hallway
  double bonus = 1.0;
  int eigen_index = 1;
  int sign = 1;
  ShortestPathForm form = ShortestPathForm::kUnitStop;
};

enum class OptionSource { kNone, kLearned, kOracle };
enum class ModelSource { kNone, kIdealized, kLearned, kFile };

struct ExperimentConfig {
  std::string id = "experiment";
  std::string environment = "two_room";
  int runs = 1;
  std::uint64_t seed = 0;
  std::string output;  // empty: $STOMP_OUT, then "out"

  // [options]
  OptionSource option_source = OptionSource::kNone;
  Hyperparams learning;
  long option_steps = 50000;
  int option_cadence = 1000;
  int mc_rollouts = 0;
  std::vector<TaskSpec> tasks;
  /// Reward-respecting tasks are replicated once per entry, relabelled `<label>_w<bonus>`.
  std::vector<double> bonus_sweep;

  // [models]
  ModelSource model_source = ModelSource::kNone;
  ModelHyperparams model_hp;
  long model_steps = 50000;
  int model_cadence = 1000;
  std::vector<long> snapshot_steps;
  std::string model_file;  // ModelSource::kFile
  long model_file_step = -1;  // -1: the largest step in the file
  bool save_models = false;   // write snapshots and final models per run

  // [planning]
  bool planning = false;
  long plan_updates = 6000;
  double plan_alpha = 1.0;
  int plan_cadence = 50;
  double plan_tolerance = 0.01;
  StateSampling sampling = StateSampling::kUniform;
  /// Each menu is `actions` plus `+group` terms, e.g. `actions+rr`.
  std::vector<std::string> menus{"actions"};
  /// Also plan with the models saved at these model-learning steps.
  std::vector<long> plan_snapshots;

  int threads = 0;  // 0: hardware concurrency

  /// Throws std::invalid_argument describing the first problem found.
  void validate() const;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Built-in presets keyed by name (fig1, fig2, ..., two_room, four_room).
const std::map<std::string, std::string>& preset_texts();
ExperimentConfig preset_config(const std::string& name);

std::string option_source_name(OptionSource s);
std::string model_source_name(ModelSource s);

}  // namespace stomp
