#include "stomp/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <type_traits>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace stomp {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Reads keys from one section and complains about any it did not consume.
class Section {
 public:
  Section(const pt::ptree& tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  template <typename T>
  void read(const char* key, T& field) {
    used_.insert(key);
    if (auto v = tree_.get_optional<std::string>(key)) {
      if constexpr (std::is_same_v<T, std::string>) {
        field = trim(*v);
        return;
      }
      try {
        field = tree_.get<T>(key);
      } catch (const pt::ptree_error&) {
        throw std::invalid_argument("[" + name_ + "] " + key + ": cannot parse '" + *v + "'");
      }
    }
  }
  std::optional<std::string> text(const char* key) {
    used_.insert(key);
    if (auto v = tree_.get_optional<std::string>(key)) return trim(*v);
    return std::nullopt;
  }
  void finish() const {
    for (const auto& [key, _] : tree_) {
      if (!used_.count(key)) throw std::invalid_argument("[" + name_ + "] unknown key '" + key + "'");
    }
  }

 private:
  const pt::ptree& tree_;
  std::string name_;
  std::set<std::string> used_;
};

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("not a boolean: '" + v + "'");
}

TaskKind parse_kind(const std::string& v) {
  if (v == "reward_respecting") return TaskKind::kRewardRespecting;
  if (v == "shortest_path") return TaskKind::kShortestPath;
  if (v == "eigen") return TaskKind::kEigen;
  throw std::invalid_argument("unknown task kind '" + v + "'");
}

std::vector<long> parse_steps(const std::string& v) {
  std::vector<long> out;
  for (const std::string& item : split_list(v)) out.push_back(std::stol(item));
  return out;
}

void parse_experiment(const pt::ptree& tree, ExperimentConfig& cfg) {
  Section sec(tree, "experiment");
  sec.read("id", cfg.id);
  sec.read("environment", cfg.environment);
  sec.read("runs", cfg.runs);
  sec.read("seed", cfg.seed);
  sec.read("output", cfg.output);
  sec.read("threads", cfg.threads);
  sec.finish();
}

void parse_primary(const pt::ptree& tree, ExperimentConfig& cfg) {
  Section sec(tree, "primary");
  sec.read("alpha", cfg.learning.alpha_primary);
  sec.read("lambda", cfg.learning.lambda_primary);
  sec.read("gamma", cfg.learning.gamma);
  sec.finish();
}

void parse_options(const pt::ptree& tree, ExperimentConfig& cfg) {
  Section sec(tree, "options");
  if (auto v = sec.text("source")) {
    if (*v == "learned") cfg.option_source = OptionSource::kLearned;
    else if (*v == "oracle") cfg.option_source = OptionSource::kOracle;
    else if (*v == "none") cfg.option_source = OptionSource::kNone;
    else throw std::invalid_argument("[options] source must be learned, oracle or none");
  }
  sec.read("steps", cfg.option_steps);
  sec.read("cadence", cfg.option_cadence);
  sec.read("alpha", cfg.learning.alpha);
  sec.read("alpha_prime", cfg.learning.alpha_prime);
  sec.read("lambda", cfg.learning.lambda);
  sec.read("lambda_prime", cfg.learning.lambda_prime);
  sec.read("mc_rollouts", cfg.mc_rollouts);
  if (auto v = sec.text("bonus_sweep")) {
    cfg.bonus_sweep.clear();
    for (const std::string& item : split_list(*v)) cfg.bonus_sweep.push_back(std::stod(item));
  }
  sec.finish();
}

void parse_task(const std::string& label, const pt::ptree& tree, ExperimentConfig& cfg) {
  Section sec(tree, "task:" + label);
  TaskSpec t;
  t.label = label;
  t.group = label;
  if (auto v = sec.text("kind")) t.kind = parse_kind(*v);
  sec.read("group", t.group);
  sec.read("target", t.target);
  sec.read("feature", t.feature);
  sec.read("bonus", t.bonus);
  sec.read("eigen_index", t.eigen_index);
  sec.read("sign", t.sign);
  if (auto v = sec.text("form")) {
    if (*v == "step_cost") t.form = ShortestPathForm::kStepCost;
    else if (*v == "unit_stop") t.form = ShortestPathForm::kUnitStop;
    else throw std::invalid_argument("[task:" + label + "] form must be step_cost or unit_stop");
  }
  sec.finish();
  cfg.tasks.push_back(std::move(t));
}

void parse_models(const pt::ptree& tree, ExperimentConfig& cfg) {
  Section sec(tree, "models");
  if (auto v = sec.text("source")) {
    if (*v == "idealized") cfg.model_source = ModelSource::kIdealized;
    else if (*v == "learned") cfg.model_source = ModelSource::kLearned;
    else if (*v == "file") cfg.model_source = ModelSource::kFile;
    else if (*v == "none") cfg.model_source = ModelSource::kNone;
    else throw std::invalid_argument("[models] source must be idealized, learned, file or none");
  }
  sec.read("steps", cfg.model_steps);
  sec.read("cadence", cfg.model_cadence);
  sec.read("alpha_r", cfg.model_hp.alpha_r);
  sec.read("alpha_p", cfg.model_hp.alpha_p);
  sec.read("lambda", cfg.model_hp.lambda);
  if (auto v = sec.text("literal_recursion")) cfg.model_hp.literal_recursion = parse_bool(*v);
  if (auto v = sec.text("snapshots")) cfg.snapshot_steps = parse_steps(*v);
  sec.read("file", cfg.model_file);
  sec.read("file_step", cfg.model_file_step);
  if (auto v = sec.text("save")) cfg.save_models = parse_bool(*v);
  sec.finish();
}

void parse_planning(const pt::ptree& tree, ExperimentConfig& cfg) {
  Section sec(tree, "planning");
  cfg.planning = true;
  if (auto v = sec.text("enabled")) cfg.planning = parse_bool(*v);
  sec.read("updates", cfg.plan_updates);
  sec.read("alpha", cfg.plan_alpha);
  sec.read("cadence", cfg.plan_cadence);
  sec.read("tolerance", cfg.plan_tolerance);
  if (auto v = sec.text("sampling")) {
    if (*v == "uniform") cfg.sampling = StateSampling::kUniform;
    else if (*v == "cyclic") cfg.sampling = StateSampling::kCyclic;
    else throw std::invalid_argument("[planning] sampling must be uniform or cyclic");
  }
  if (auto v = sec.text("menus")) cfg.menus = split_list(*v);
  if (auto v = sec.text("snapshots")) cfg.plan_snapshots = parse_steps(*v);
  sec.finish();
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [&](const std::string& what) { throw std::invalid_argument("config '" + id + "': " + what); };
  if (runs < 1) fail("runs must be at least 1");
  if (threads < 0) fail("threads must be non-negative");
  const GridWorld world = build_world(environment);
  try {
    learning.validate();
    model_hp.validate();
  } catch (const std::exception& e) {
    fail(e.what());
  }
  std::set<std::string> groups;
  for (const TaskSpec& t : tasks) {
    groups.insert(t.group);
    if (t.kind != TaskKind::kEigen) {
      if (t.feature < 0 && !world.hallway_state(t.target)) fail("task '" + t.label + "' targets unknown hallway '" + t.target + "'");
      if (t.feature >= world.num_states()) fail("task '" + t.label + "' feature index out of range");
    } else if (t.sign != 1 && t.sign != -1) {
      fail("task '" + t.label + "' sign must be +1 or -1");
    }
  }
  if (!tasks.empty() && option_source == OptionSource::kNone) fail("tasks declared but [options] source is none");
  if (option_source != OptionSource::kNone && tasks.empty()) fail("option learning needs at least one task");
  if (option_steps < 0 || model_steps < 0) fail("step counts must be non-negative");
  if (planning) {
    if (model_source == ModelSource::kNone) fail("planning needs a [models] source");
    if (plan_updates < 0 || plan_cadence < 0) fail("planning counts must be non-negative");
    for (const std::string& menu : menus) {
      std::stringstream in(menu);
      std::string term;
      bool first = true;
      while (std::getline(in, term, '+')) {
        if (first && term != "actions") fail("menu '" + menu + "' must start with 'actions'");
        if (!first && !groups.count(term)) fail("menu '" + menu + "' refers to unknown task group '" + term + "'");
        first = false;
      }
    }
    for (long s : plan_snapshots) {
      if (model_source != ModelSource::kLearned) fail("planning snapshots need learned models");
      if (std::find(snapshot_steps.begin(), snapshot_steps.end(), s) == snapshot_steps.end()) {
        fail("planning snapshot " + std::to_string(s) + " is not among [models] snapshots");
      }
    }
  }
  if (model_source == ModelSource::kFile && model_file.empty()) fail("[models] source = file needs a file");
  for (long s : snapshot_steps) {
    if (s < 0 || s > model_steps) fail("model snapshot step " + std::to_string(s) + " outside [0, steps]");
  }
  for (double b : bonus_sweep) {
    if (!std::isfinite(b)) fail("bonus sweep values must be finite");
  }
}

ExperimentConfig parse_config(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  ExperimentConfig cfg;
  for (const auto& [name, section] : tree) {
    if (name == "experiment") parse_experiment(section, cfg);
    else if (name == "primary") parse_primary(section, cfg);
    else if (name == "options") parse_options(section, cfg);
    else if (name == "models") parse_models(section, cfg);
    else if (name == "planning") parse_planning(section, cfg);
    else if (name.rfind("task:", 0) == 0) parse_task(name.substr(5), section, cfg);
    else throw std::invalid_argument("config: unknown section [" + name + "]");
  }
  cfg.model_hp.gamma = cfg.learning.gamma;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

ExperimentConfig preset_config(const std::string& name) {
  const auto& presets = preset_texts();
  const auto it = presets.find(name);
  if (it == presets.end()) {
    std::string known;
    for (const auto& [key, _] : presets) known += (known.empty() ? "" : ", ") + key;
    throw std::invalid_argument("unknown preset '" + name + "' (known: " + known + ")");
  }
  return parse_config(it->second);
}

std::string option_source_name(OptionSource s) {
  switch (s) {
    case OptionSource::kNone: return "none";
    case OptionSource::kLearned: return "learned";
    case OptionSource::kOracle: return "oracle";
  }
  return "?";
}

std::string model_source_name(ModelSource s) {
  switch (s) {
    case ModelSource::kNone: return "none";
    case ModelSource::kIdealized: return "idealized";
    case ModelSource::kLearned: return "learned";
    case ModelSource::kFile: return "file";
  }
  return "?";
}

}  // namespace stomp
