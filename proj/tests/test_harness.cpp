#include "generators.hpp"
#include "stomp/config.hpp"
#include "stomp/harness.hpp"
#include "stomp/run_log.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace stomp;
using stomp::testing::Gen;
using stomp::testing::kCases;
namespace fs = std::filesystem;

namespace {

RunLog make_log(std::vector<std::pair<double, double>> points, const std::string& metric = "m") {
  RunLog log;
  for (const auto& [x, v] : points) log.add("s", "steps", x, metric, v);
  return log;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Every file under `dir`, keyed by relative path.
std::map<std::string, std::string> tree_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) out[fs::relative(entry.path(), dir).string()] = slurp(entry.path());
  }
  return out;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stomp_test_" + name);
  fs::remove_all(p);
  return p;
}

constexpr const char* kSmallConfig = R"(
[experiment]
id = small
environment = two_room
runs = 3
seed = 4

[options]
source = learned
steps = 1500
cadence = 500

[task:H1]
group = rr
kind = reward_respecting
target = H1

[models]
source = learned
steps = 1500
cadence = 500
snapshots = 500
save = true

[planning]
updates = 400
cadence = 100
menus = actions, actions+rr
snapshots = 500
)";

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("aggregate worked examples") {
    const CurveStats one = aggregate({make_log({{0, 2.0}, {10, 4.0}})});
    REQUIRE(one.points.size() == 2);
    CHECK(one.points[0].mean == 2.0);
    CHECK(one.points[0].stderr_ == 0.0);
    CHECK(one.points[0].count == 1);

    // Values 1, 2, 3, 6: mean 3, sample sd sqrt(14/3), stderr sqrt(14/3)/2.
    const CurveStats four = aggregate({make_log({{5, 1.0}}), make_log({{5, 2.0}}), make_log({{5, 3.0}}),
                                       make_log({{5, 6.0}})});
    REQUIRE(four.points.size() == 1);
    CHECK(four.points[0].x == 5.0);
    CHECK(four.points[0].mean == doctest::Approx(3.0));
    CHECK(four.points[0].stderr_ == doctest::Approx(std::sqrt(14.0 / 3.0) / 2.0));
    CHECK(four.points[0].count == 4);

    // Metrics keep first-seen order.
    RunLog mixed;
    mixed.add("a", "steps", 0, "z", 1);
    mixed.add("a", "steps", 0, "b", 2);
    const CurveStats ordered = aggregate({mixed});
    CHECK(ordered.points[0].metric == "z");
    CHECK(ordered.points[1].metric == "b");
  }

  TEST_CASE("aggregate rejects mismatched runs") {
    CHECK_THROWS(aggregate({}));
    CHECK_THROWS(aggregate({make_log({{0, 1}, {1, 1}}), make_log({{0, 1}, {2, 1}})}));
    CHECK_THROWS(aggregate({make_log({{0, 1}}), make_log({{0, 1}}, "other")}));
  }

  TEST_CASE("aggregate mean and stderr over random runs") {
    Gen gen(61);
    for (int i = 0; i < kCases; ++i) {
      const int runs = gen.integer(2, 9);
      std::vector<RunLog> logs;
      std::vector<double> values;
      for (int r = 0; r < runs; ++r) {
        values.push_back(gen.uniform(-10, 10));
        logs.push_back(make_log({{1, values.back()}}));
      }
      double mean = 0;
      for (double v : values) mean += v / runs;
      double ss = 0;
      for (double v : values) ss += (v - mean) * (v - mean);
      const CurvePoint p = aggregate(logs).points.at(0);
      CHECK(p.mean == doctest::Approx(mean).epsilon(1e-12));
      CHECK(p.stderr_ == doctest::Approx(std::sqrt(ss / (runs - 1)) / std::sqrt(runs)).epsilon(1e-12));
    }
  }

  TEST_CASE("number formatting") {
    CHECK(format_number(200000) == "200000");
    CHECK(format_number(-3) == "-3");
    CHECK(format_number(0) == "0");
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(0.8345137614500874) == "0.8345137614500874");
    Gen gen(62);
    for (int i = 0; i < kCases; ++i) {
      const double v = gen.uniform(-1, 1) * std::pow(10.0, gen.integer(-300, 300));
      CHECK(std::stod(format_number(v)) == v);
    }
  }

  TEST_CASE("run log CSV round-trips") {
    Gen gen(63);
    std::vector<RunLog> logs(3);
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 20; ++k) {
        logs[r].add(gen.coin() ? "options" : "planning", "steps", gen.integer(0, 200000),
                    "m" + std::to_string(gen.integer(0, 3)), gen.uniform(-1, 1) * std::pow(10.0, gen.integer(-20, 20)));
      }
      logs[r].set_run(r);
    }
    logs[0].add("x", "steps", 1, "inf", std::numeric_limits<double>::infinity());
    logs[0].set_run(0);
    std::stringstream buf;
    write_log_csv(buf, logs);
    const auto back = read_log_csv(buf);
    std::size_t k = 0;
    for (const RunLog& log : logs) {
      for (const LogRecord& r : log.records) {
        REQUIRE(k < back.size());
        CHECK(back[k].run == r.run);
        CHECK(back[k].stage == r.stage);
        CHECK(back[k].x_name == r.x_name);
        CHECK(back[k].x == r.x);
        CHECK(back[k].metric == r.metric);
        CHECK(back[k].value == r.value);
        ++k;
      }
    }
    CHECK(k == back.size());
  }

  TEST_CASE("CSV writer and reader reject malformed input") {
    std::stringstream out;
    CHECK_THROWS(write_log_csv(out, {make_log({{0, 1}}, "a,b")}));
    std::stringstream no_header("1,s,steps,0,m,1\n");
    CHECK_THROWS(read_log_csv(no_header));
    std::stringstream short_row("run,stage,x_name,x,metric,value\n1,s,steps,0,m\n");
    CHECK_THROWS(read_log_csv(short_row));
    std::stringstream bad_number("run,stage,x_name,x,metric,value\n1,s,steps,0,m,abc\n");
    CHECK_THROWS(read_log_csv(bad_number));
  }

  TEST_CASE("aggregate CSV layout") {
    std::stringstream buf;
    write_curves_csv(buf, aggregate({make_log({{0, 1}}), make_log({{0, 3}})}));
    CHECK(buf.str() == "stage,x_name,x,metric,mean,stderr,count\ns,steps,0,m,2,1,2\n");
  }

  TEST_CASE("every preset parses and validates") {
    CHECK(preset_texts().size() >= 11);
    for (const auto& [name, text] : preset_texts()) {
      CAPTURE(name);
      const ExperimentConfig cfg = parse_config(text);
      CHECK_NOTHROW(cfg.validate());
    }
    const ExperimentConfig fig1 = preset_config("fig1");
    CHECK(fig1.runs == 100);
    CHECK(fig1.menus == std::vector<std::string>{"actions", "actions+rr", "actions+sp"});
    CHECK(preset_config("fig4").bonus_sweep == std::vector<double>{0.1, 1, 10, 100});
    const ExperimentConfig fig5 = preset_config("fig5");
    CHECK(fig5.environment == "four_room");
    CHECK(fig5.runs == 30);
    CHECK(fig5.option_steps == 200000);
    CHECK(fig5.plan_updates == 20000);
    CHECK(fig5.learning.alpha_primary == 0.1);
    CHECK(fig5.model_hp.alpha_r == 0.05);
    CHECK(preset_config("fig3").model_hp.alpha_p == 0.1);
    CHECK_THROWS(preset_config("fig6"));
  }

  TEST_CASE("config errors are reported") {
    auto bad = [](const std::string& text) {
      CAPTURE(text);
      CHECK_THROWS_AS(parse_config(text).validate(), std::invalid_argument);
    };
    bad("[experiment]\nrunz = 3\n");
    bad("[experiments]\nruns = 3\n");
    bad("[experiment]\nruns = three\n");
    bad("[experiment]\nruns = 0\n");
    bad("[experiment]\nenvironment = maze\n");
    bad("[primary]\ngamma = 1.0\n");
    bad("[options]\nsource = sometimes\n");
    bad("[options]\nsource = learned\n");
    bad("[options]\nsource = learned\n[task:a]\nkind = reward_respecting\ntarget = H9\n");
    bad("[options]\nsource = learned\n[task:a]\nkind = teleport\n");
    bad("[options]\nsource = learned\n[task:a]\nkind = eigen\nsign = 2\n");
    bad("[options]\nsource = learned\n[task:a]\nkind = shortest_path\ntarget = H1\nform = crow\n");
    bad("[task:a]\nkind = reward_respecting\ntarget = H1\n");
    bad("[planning]\nmenus = actions\n");
    bad("[models]\nsource = idealized\n[planning]\nmenus = actions+rr\n");
    bad("[models]\nsource = idealized\n[planning]\nmenus = rr\n");
    bad("[models]\nsource = idealized\n[planning]\nsampling = random\n");
    bad("[models]\nsource = learned\nsteps = 100\nsnapshots = 200\n");
    bad("[models]\nsource = learned\nsnapshots = 100\n[planning]\nsnapshots = 200\n");
    bad("[models]\nsource = file\n");
    bad("[models]\nliteral_recursion = maybe\n");
    bad("[experiment\nruns = 1\n");
  }

  TEST_CASE("bonus sweep expands tasks and menus") {
    const ExperimentConfig cfg = preset_config("fig4");
    const GridWorld world = build_world(cfg.environment);
    const auto tasks = expand_tasks(world, cfg);
    REQUIRE(tasks.size() == 4);
    CHECK(tasks[0].task.label == "rr_w0.1");
    CHECK(tasks[3].task.label == "rr_w100");
    CHECK(tasks[3].group == "rr_w100");
    CHECK(tasks[3].task.bonus_weight == 100.0);
    CHECK(tasks[2].sweep_index == 2);
    const auto menus = expand_menus(cfg);
    CHECK(menus == std::vector<std::string>{"actions", "actions+rr_w0.1", "actions+rr_w1", "actions+rr_w10",
                                            "actions+rr_w100"});
  }

  TEST_CASE("output directory resolution") {
    ExperimentConfig cfg;
    cfg.id = "abc";
    cfg.output = "/tmp/explicit";
    CHECK(output_directory(cfg) == fs::path("/tmp/explicit"));
    cfg.output.clear();
    ::setenv("STOMP_OUT", "/tmp/base", 1);
    CHECK(output_directory(cfg) == fs::path("/tmp/base/abc"));
    ::unsetenv("STOMP_OUT");
    CHECK(output_directory(cfg) == fs::path("out/abc"));
  }

  TEST_CASE("experiment outputs are byte-identical across reruns and thread counts") {
    const fs::path dir_a = scratch_dir("a"), dir_b = scratch_dir("b"), dir_c = scratch_dir("c");
    ExperimentConfig cfg = parse_config(kSmallConfig);
    cfg.output = dir_a.string();
    cfg.threads = 1;
    run_experiment(cfg, true, kSmallConfig);
    cfg.output = dir_b.string();
    cfg.threads = 3;
    const ExperimentResult b = run_experiment(cfg, true, kSmallConfig);
    cfg.output = dir_c.string();
    cfg.threads = 2;
    cfg.seed = 5;
    run_experiment(cfg, true, kSmallConfig);

    const auto ta = tree_contents(dir_a);
    const auto tb = tree_contents(dir_b);
    const auto tc = tree_contents(dir_c);
    for (const char* f : {"layout.txt", "config.ini", "aggregate.csv", "runs/run_000.csv", "runs/run_002.csv",
                          "models/run_001.csv"}) {
      CAPTURE(f);
      REQUIRE(ta.count(f) == 1);
    }
    CHECK(ta == tb);
    CHECK(ta.at("runs/run_001.csv") != tc.at("runs/run_001.csv"));
    CHECK(ta.at("layout.txt") == tc.at("layout.txt"));

    // The written run logs are the in-memory ones.
    std::ifstream in(b.output_dir / "runs" / "run_001.csv");
    const auto records = read_log_csv(in);
    REQUIRE(records.size() == b.logs[1].records.size());
    CHECK(records.front().run == 1);

    // Saved models load back as a model file for planning.
    ExperimentConfig from_file = cfg;
    from_file.seed = 4;
    from_file.model_source = ModelSource::kFile;
    from_file.model_file = (b.output_dir / "models" / "run_000.csv").string();
    from_file.plan_snapshots.clear();
    from_file.runs = 1;
    const ExperimentResult replanned = run_experiment(from_file, false);
    double v_file = 0, v_learned = 0;
    for (const LogRecord& r : replanned.logs[0].records) {
      if (r.metric == "actions+rr/v_start" && r.x == 400) v_file = r.value;
    }
    for (const LogRecord& r : b.logs[0].records) {
      if (r.metric == "actions+rr/v_start" && r.x == 400) v_learned = r.value;
    }
    CHECK(v_file == v_learned);
    for (const fs::path& d : {dir_a, dir_b, dir_c}) fs::remove_all(d);
  }

  TEST_CASE("oracle options from a preset") {
    const ExperimentConfig cfg = preset_config("two_room");
    const GridWorld world = build_world(cfg.environment);
    const Oracles o = compute_oracles(world, cfg);
    CHECK(o.v_star[world.start_state().index()] == doctest::Approx(std::pow(0.99, 18)).epsilon(1e-12));
    CHECK(o.tasks.size() == cfg.tasks.size());
    std::stringstream csv;
    write_oracle_csv(csv, world, o);
    std::string header;
    std::getline(csv, header);
    CHECK(header.rfind("state,row,col,v_star,v_mu,task:", 0) == 0);
    int rows = 0;
    for (std::string line; std::getline(csv, line);) ++rows;
    CHECK(rows == world.num_states());
  }
}
