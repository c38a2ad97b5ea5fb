#include "stomp/config.hpp"
#include "stomp/harness.hpp"
#include "stomp/planner.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>

namespace py = pybind11;
using namespace stomp;

namespace {

py::list records_to_list(const std::vector<LogRecord>& records) {
  py::list out;
  for (const LogRecord& r : records) {
    out.append(py::make_tuple(r.run, r.stage, r.x_name, r.x, r.metric, r.value));
  }
  return out;
}

py::dict layout_report(const std::string& name) {
  const GridWorld world = build_world(name);
  const LayoutReport r = verify_layout(world);
  py::dict d;
  d["name"] = name;
  d["text"] = to_text(world.layout());
  d["non_terminal_states"] = r.non_terminal_states;
  d["connected"] = r.connected;
  d["start_value"] = r.start_value;
  d["optimal_path_length"] = r.optimal_path_length;
  d["optimal_route_penalty_free"] = r.optimal_route_penalty_free;
  d["hallways"] = world.hallway_labels();
  return d;
}

Vector exact_v_star(const std::string& name) {
  const GridWorld world = build_world(name);
  std::vector<IdealizedModel> models;
  for (const OptionDef& o : primitive_options()) models.push_back(idealized_model(world, o));
  return exact_value_iteration(world, models, 1e-12).values;
}

Vector hallway_subtask_values(const std::string& name, const std::string& hallway, double bonus) {
  const GridWorld world = build_world(name);
  const auto h = world.hallway_state(hallway);
  if (!h) throw py::value_error("unknown hallway '" + hallway + "'");
  const GvfTask task = make_feature_attainment_task(h->index(), bonus, hallway);
  return optimal_subtask_values(world, task, behavior_policy_values(world));
}

}  // namespace

PYBIND11_MODULE(_stomp, m) {
  m.doc() = "Subtasks, options, models and planning in gridworlds";

  m.def("layout", &layout_report, py::arg("name"), "Layout text and structural checks of a built-in world.");
  m.def("parse_layout", [](const std::string& text) {
    const GridLayout g = parse_layout_text(text, NoiseModel{}, 0.99);
    return py::make_tuple(g.height, g.width, to_text(g));
  });
  m.def("v_star", &exact_v_star, py::arg("name"), "Optimal state values with primitive actions.");
  m.def("v_mu", [](const std::string& name) { return behavior_policy_values(build_world(name)); }, py::arg("name"),
        "Values of the equiprobable policy.");
  m.def("hallway_subtask_values", &hallway_subtask_values, py::arg("name"), py::arg("hallway"),
        py::arg("bonus") = 1.0);

  m.def("presets", [] {
    std::vector<std::string> names;
    for (const auto& [name, _] : preset_texts()) names.push_back(name);
    return names;
  });
  m.def("preset_text", [](const std::string& name) {
    const auto& presets = preset_texts();
    const auto it = presets.find(name);
    if (it == presets.end()) throw py::key_error(name);
    return it->second;
  });

  m.def(
      "run",
      [](const std::string& config_text, std::optional<int> runs, std::optional<std::uint64_t> seed,
         std::optional<std::string> out, int threads) {
        ExperimentConfig cfg = parse_config(config_text);
        if (runs) cfg.runs = *runs;
        if (seed) cfg.seed = *seed;
        if (out) cfg.output = *out;
        cfg.threads = threads;
        ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(cfg, out.has_value(), config_text);
        }
        std::vector<LogRecord> records;
        for (const RunLog& log : result.logs) records.insert(records.end(), log.records.begin(), log.records.end());
        py::list aggregate;
        for (const CurvePoint& p : result.curves.points) {
          aggregate.append(py::make_tuple(p.stage, p.x_name, p.x, p.metric, p.mean, p.stderr_, p.count));
        }
        py::dict d;
        d["records"] = records_to_list(records);
        d["aggregate"] = aggregate;
        d["output_dir"] = result.output_dir.string();
        return d;
      },
      py::arg("config_text"), py::arg("runs") = py::none(), py::arg("seed") = py::none(), py::arg("out") = py::none(),
      py::arg("threads") = 0,
      "Run an experiment from INI text. Records are (run, stage, x_name, x, metric, value) tuples.");

  m.def("read_log_csv", [](const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw py::value_error("cannot read '" + path.string() + "'");
    return records_to_list(read_log_csv(in));
  });
  m.def("format_number", &format_number);

  m.attr("LOG_COLUMNS") = py::make_tuple("run", "stage", "x_name", "x", "metric", "value");
  m.attr("AGGREGATE_COLUMNS") = py::make_tuple("stage", "x_name", "x", "metric", "mean", "stderr", "count");
}
