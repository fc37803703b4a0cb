#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>

#include "seesaw/pipeline.hpp"
#include "seesaw/report.hpp"

namespace fs = std::filesystem;
using namespace seesaw;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SEESAW_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) r.out += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("seesaw_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

double field(const std::string& out, const std::string& key) {
  std::smatch m;
  if (!std::regex_search(out, m, std::regex(key + ": (\\S+)"))) return std::nan("");
  return std::stod(m[1]);
}

RunConfig small_config() {
  RunConfig c;
  c.seed = 3;
  c.neat.population_size = 10;
  c.cmaes.population_size = 6;
  c.pipeline.generations = 2;
  c.pipeline.tune_generations = 3;
  c.env.max_frames = 20;
  c.protocol.trials = 2;
  c.protocol.seed_schedule = SeedSchedule::fixed;
  return c;
}

fs::path write_config(const fs::path& dir, const RunConfig& c) {
  const auto path = dir / "config.json";
  pipeline::write_text(path, dump_config(c));
  return path;
}

// Trains once and shares the output between tests.
const fs::path& trained() {
  static const fs::path out = [] {
    const auto dir = scratch("trained");
    const auto r = run("train --config " + write_config(dir, small_config()).string() + " --out " + (dir / "run").string());
    EXPECT_EQ(r.code, 0) << r.out;
    return dir / "run";
  }();
  return out;
}

}  // namespace

TEST(Cli, TrainWritesAllArtifacts) {
  const auto& out = trained();
  for (const char* f : {"config.json", "ledger.csv", "stage1_model.json", "model.json", "attention_trace.csv",
                        "tune_trace.csv", "timings.csv", "plots/fitness_stage1.svg", "plots/fitness_stage2.svg"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const auto rows = pipeline::load_ledger(out / "ledger.csv");
  ASSERT_EQ(rows.size(), 2u * 2 + 1 + 3);
  EXPECT_EQ(rows[4].phase, "init");
  const auto model = pipeline::load_model(out / "model.json");
  EXPECT_TRUE(model.tuned);
  EXPECT_GE(model.fitness, model.stage1_fitness);
  EXPECT_EQ(model.config, pipeline::load_model(out / "stage1_model.json").config);
  const auto checkpoints = std::distance(fs::directory_iterator(out / "checkpoints"), fs::directory_iterator{});
  EXPECT_GE(checkpoints, 2);
}

TEST(Cli, StageOneOnlyLeavesModelUntuned) {
  const auto dir = scratch("stage1");
  const auto r = run("train --stage1-only --config " + write_config(dir, small_config()).string() + " --out " +
                     (dir / "run").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("(untuned)"), std::string::npos) << r.out;
  EXPECT_FALSE(pipeline::load_model(dir / "run" / "model.json").tuned);
  EXPECT_FALSE(fs::exists(dir / "run" / "tune_trace.csv"));
  for (const auto& row : pipeline::load_ledger(dir / "run" / "ledger.csv")) EXPECT_EQ(row.stage, 1);
}

TEST(Cli, ResumeFinishesRun) {
  const auto dir = scratch("resume");
  auto c = small_config();
  c.pipeline.generations = 3;
  const auto config = write_config(dir, c);
  ASSERT_EQ(run("train --stage1-only --config " + config.string() + " --out " + (dir / "a").string()).code, 0);
  const auto cp = dir / "a" / "checkpoints" / "gen_00001.json";
  ASSERT_TRUE(fs::exists(cp));
  ASSERT_EQ(run("train --stage1-only --resume " + cp.string() + " --out " + (dir / "b").string()).code, 0);
  auto a = pipeline::load_model(dir / "a" / "model.json"), b = pipeline::load_model(dir / "b" / "model.json");
  EXPECT_EQ(b.config.output_dir, (dir / "b").string());
  b.config.output_dir = a.config.output_dir;
  EXPECT_EQ(pipeline::to_json(a).dump(), pipeline::to_json(b).dump());
  EXPECT_EQ(run("train --resume " + cp.string() + " --seed 4").code, 2);
}

TEST(Cli, PlayReportsMeanAndStd) {
  const auto model = (trained() / "model.json").string();
  const auto r = run("play " + model + " --episodes 100");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(field(r.out, "episodes"), 100);
  const double mean = field(r.out, "mean"), sd = field(r.out, "std");
  EXPECT_GE(mean, -0.2 - 1e-9);
  EXPECT_GE(sd, 0.0);
  EXPECT_EQ(run("play " + model + " --episodes 100").out, r.out);

  const auto same = run("play " + model + " --episodes 20 --same-seed");
  ASSERT_EQ(same.code, 0);
  EXPECT_EQ(field(same.out, "std"), 0.0);
}

TEST(Cli, DumpFramesOutlinesSelectedWindows) {
  const auto dir = scratch("frames");
  const auto r = run("play " + (trained() / "model.json").string() + " --episodes 1 --dump-frames " + dir.string());
  ASSERT_EQ(r.code, 0);
  int frames = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    const Frame f = report::read_ppm(e.path());
    EXPECT_EQ(f.height, 64);
    int white = 0;
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x) white += f.at(y, x, 0) == 255 && f.at(y, x, 1) == 255 && f.at(y, x, 2) == 255;
    // one outline is 36 pixels; ten windows overlap but cover more than one outline
    EXPECT_GT(white, 64 + 36) << e.path();
    ++frames;
  }
  EXPECT_EQ(frames, 20);
}

TEST(Cli, PlotSharesAxesAcrossLedgers) {
  const auto dir = scratch("plot");
  for (const char* name : {"a", "b"}) {
    std::string text = std::string(pipeline::ledger_header) + "\n";
    for (int g = 0; g < 50; ++g) {
      const double best = name[0] == 'a' ? g * 0.1 : 10 - g * 0.05;
      text += pipeline::format_row({1, g, "neat", best, best - 1, 0.5, 30}) + "\n";
    }
    pipeline::write_text(dir / (std::string(name) + ".csv"), text);
  }
  const auto r = run("plot " + (dir / "a.csv").string() + " " + (dir / "b.csv").string() + " --labels one,two --out " +
                     (dir / "out").string());
  ASSERT_EQ(r.code, 0);
  const auto svg = pipeline::read_text(dir / "out" / "fitness_stage1.svg");
  EXPECT_FALSE(fs::exists(dir / "out" / "fitness_stage2.svg"));
  EXPECT_NE(svg.find("one best"), std::string::npos);
  EXPECT_NE(svg.find("two best"), std::string::npos);
  std::size_t polylines = 0;
  double lo = 1e9, hi = -1e9;
  const std::regex point("(-?[0-9.]+),(-?[0-9.]+)");
  for (std::size_t p = svg.find("points=\""); p != std::string::npos; p = svg.find("points=\"", p + 1)) {
    ++polylines;
    const auto end = svg.find('"', p + 8);
    const std::string pts = svg.substr(p + 8, end - p - 8);
    for (std::sregex_iterator it(pts.begin(), pts.end(), point), stop; it != stop; ++it) {
      const double x = std::stod((*it)[1]), y = std::stod((*it)[2]);
      EXPECT_GE(x, 70 - 1e-6);
      EXPECT_LE(x, 550 + 1e-6);
      lo = std::min(lo, y), hi = std::max(hi, y);
    }
  }
  EXPECT_EQ(polylines, 4u);
  // both ledgers drawn against one y range: extremes land inside the plot box
  EXPECT_GE(lo, 40.0);
  EXPECT_LE(hi, 385.0);
  EXPECT_GT(hi - lo, 250.0);
}

TEST(Cli, PlotRejectsEmptyLedger) {
  const auto dir = scratch("plot_empty");
  pipeline::write_text(dir / "empty.csv", std::string(pipeline::ledger_header) + "\n");
  EXPECT_EQ(run("plot " + (dir / "empty.csv").string() + " --out " + (dir / "out").string()).code, 3);
  EXPECT_FALSE(fs::exists(dir / "out"));
  EXPECT_EQ(run("plot " + (dir / "missing.csv").string()).code, 3);
}

TEST(Cli, CountParams) {
  const auto r = run("count-params " + (trained() / "model.json").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(field(r.out, "attention"), 2408);
  const auto m = pipeline::load_model(trained() / "model.json");
  EXPECT_EQ(field(r.out, "total"), static_cast<double>(pipeline::count_params(m).total));
  EXPECT_EQ(field(r.out, "network"), static_cast<double>(neat::weight_vector_size(m.genome)));
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("codes");
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("bogus").code, 2);
  EXPECT_EQ(run("train --trials 0").code, 2);
  pipeline::write_text(dir / "bad.json", "{\n  \"neat\": {\"pop\": 1}\n}\n");
  EXPECT_EQ(run("train --config " + (dir / "bad.json").string()).code, 2);
  EXPECT_EQ(run("train --config " + (dir / "missing.json").string()).code, 2);
  pipeline::write_text(dir / "model.json", "{\"genome\": 3}");
  EXPECT_EQ(run("play " + (dir / "model.json").string()).code, 3);
  EXPECT_EQ(run("count-params " + (dir / "model.json").string()).code, 3);
  EXPECT_EQ(run("play " + (trained() / "model.json").string() + " --episodes 0").code, 2);
  auto broken = pipeline::load_model(trained() / "model.json");
  broken.config.env.executable = SEESAW_FAULT_ENV;
  broken.config.env.args = {"badspec"};
  pipeline::save_model(broken, dir / "broken.json");
  EXPECT_EQ(run("play " + (dir / "broken.json").string() + " --episodes 1").code, 4);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, EnvCheck) {
  const auto ok = run("env-check " SEESAW_PATCHCHASE_ENV " 12");
  EXPECT_EQ(ok.code, 0);
  EXPECT_NE(ok.out.find("max_frames=12"), std::string::npos) << ok.out;
  EXPECT_NE(ok.out.find("steps: 12 (episode ended)"), std::string::npos) << ok.out;
  EXPECT_EQ(run("env-check " SEESAW_FAULT_ENV " badspec").code, 4);
  EXPECT_EQ(run("env-check " SEESAW_FAULT_ENV " malformed").code, 4);
  EXPECT_EQ(run("env-check " SEESAW_FAULT_ENV " hang 1 --timeout-ms 300").code, 4);
  EXPECT_EQ(run("env-check /nonexistent/env").code, 4);
}
