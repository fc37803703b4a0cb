// seesaw: train, replay and inspect Hybrid Self-Attention NEAT agents.
//
// Exit codes:
//   0  success
//   2  configuration or usage error
//   3  runtime failure (bad model/ledger/checkpoint, I/O, evaluation)
//   4  environment protocol failure (malformed reply, timeout, dead child)

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "seesaw/config.hpp"
#include "seesaw/envs/external.hpp"
#include "seesaw/envs/line_protocol.hpp"
#include "seesaw/pipeline.hpp"
#include "seesaw/report.hpp"

namespace fs = std::filesystem;
using namespace seesaw;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitProtocol = 4;

std::string fmt(double v) { return envs::protocol::format_real(v); }

void write_ledger(const fs::path& path, const std::vector<pipeline::LedgerRow>& rows) {
  std::string text = std::string(pipeline::ledger_header) + "\n";
  for (const auto& r : rows) text += pipeline::format_row(r) + "\n";
  pipeline::write_text(path, text);
}

void write_trace(const fs::path& path, const std::vector<cmaes::TraceRow>& rows) {
  std::string text = "generation,best,mean,sigma,axis_ratio\n";
  for (const auto& r : rows)
    text += std::to_string(r.generation) + "," + fmt(r.best) + "," + fmt(r.mean) + "," + fmt(r.sigma) + "," +
            fmt(r.axis_ratio) + "\n";
  pipeline::write_text(path, text);
}

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string resume;
  bool stage1_only = false;
  std::optional<int> trials;
};

int cmd_train(const TrainArgs& a) {
  RunConfig cfg;
  pipeline::SeesawState state;
  bool resumed = false;
  if (!a.resume.empty()) {
    auto cp = pipeline::load_checkpoint(a.resume);
    cfg = cp.config;
    state = std::move(cp.state);
    resumed = true;
  } else if (!a.config.empty()) {
    cfg = load_config(a.config);
  }
  if (!resumed) {
    if (a.seed) cfg.seed = *a.seed;
    if (a.trials) cfg.protocol.trials = *a.trials;
  } else if (a.seed || a.trials) {
    throw ConfigError("--seed/--trials cannot change a resumed run");
  }
  if (!a.out.empty()) cfg.output_dir = a.out;
  try {
    cfg.validate();
  } catch (const BadConfig& e) {
    throw ConfigError(e.what());
  }

  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  pipeline::write_text(out / "config.json", dump_config(cfg));

  pipeline::Evaluator ev(pipeline::make_env_factory(cfg));
  if (!resumed) state = pipeline::init_seesaw(cfg, ev.spec());

  pipeline::CheckpointWriter checkpoints(out / "checkpoints", cfg.pipeline.checkpoint_every,
                                         cfg.pipeline.keep_checkpoints);
  std::vector<cmaes::TraceRow> attention_trace;
  std::string timings = "stage,generation,seconds\n";
  auto clock = std::chrono::steady_clock::now();
  auto lap = [&] {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - clock).count();
    clock = now;
    return s;
  };

  write_ledger(out / "ledger.csv", state.ledger);
  auto model = pipeline::train_stage1(state, ev, cfg, [&](const pipeline::SeesawState& s) {
    const auto& row = s.ledger[s.ledger.size() - 2];
    attention_trace.push_back({s.generation - 1, row.best, row.mean, s.cma.sigma, s.cma.axis_ratio()});
    write_ledger(out / "ledger.csv", s.ledger);
    checkpoints(s, cfg);
    timings += "1," + std::to_string(s.generation - 1) + "," + fmt(lap()) + "\n";
    std::cerr << "stage 1 generation " << s.generation - 1 << ": best " << s.ledger.back().best << " (so far "
              << s.best_fitness << ")\n";
  });
  write_trace(out / "attention_trace.csv", attention_trace);
  pipeline::save_model(model, out / "stage1_model.json");

  std::vector<pipeline::LedgerRow> rows = state.ledger;
  if (!a.stage1_only) {
    auto tuned = pipeline::tune_stage2(model, ev, cfg);
    rows.insert(rows.end(), tuned.ledger.begin(), tuned.ledger.end());
    write_trace(out / "tune_trace.csv", tuned.trace);
    model = tuned.model;
    timings += "2,all," + fmt(lap()) + "\n";
  }
  write_ledger(out / "ledger.csv", rows);
  pipeline::save_model(model, out / "model.json");
  pipeline::write_text(out / "timings.csv", timings);
  report::plot_ledgers({{"run", rows}}, out / "plots");

  std::cout << "model: " << (out / "model.json").string() << (model.tuned ? " (tuned)" : " (untuned)") << "\n"
            << "stage 1 fitness: " << fmt(model.stage1_fitness) << "\n"
            << "final fitness: " << fmt(model.fitness) << "\n";
  return 0;
}

struct PlayArgs {
  std::string model;
  int episodes = 100;
  std::uint64_t seed = 1;
  bool same_seed = false;
  std::string dump_frames;
  std::string env_exe;
};

int cmd_play(const PlayArgs& a) {
  const auto model = pipeline::load_model(a.model);
  RunConfig cfg = model.config;
  if (!a.env_exe.empty()) cfg.env.executable = a.env_exe;
  auto env = pipeline::make_env_factory(cfg)();
  const auto& spec = env->spec();
  try {
    pipeline::check_io(model.genome, cfg.attention, spec);
    attention::check_frame(Frame(spec.height, spec.width), cfg.attention);
  } catch (const Error& e) {
    throw ModelEnvMismatch(std::string("model does not fit environment '") + spec.name + "': " + e.what());
  }
  if (a.episodes < 1) throw ConfigError("--episodes must be >= 1");

  neat::Network net(model.genome);
  attention::PatchSelector selector(model.attention, cfg.attention);
  const Rng root = Rng(a.seed).split(0x706c6179);
  std::vector<double> scores;
  for (int e = 0; e < a.episodes; ++e) {
    const auto seed = root.split(static_cast<std::uint64_t>(a.same_seed ? 0 : e)).seed();
    pipeline::FrameObserver observe;
    int t = 0;
    if (!a.dump_frames.empty() && e == 0) {
      fs::create_directories(a.dump_frames);
      observe = [&](const Frame& f, const attention::PatchSelector& sel, const attention::ImportanceRanking& r) {
        const int cols = cfg.attention.grid_cols(f.width);
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04d.ppm", t++);
        report::write_ppm(attention::overlay_selected(f, r.top_k, cols, sel.config()), fs::path(a.dump_frames) / name);
      };
    }
    try {
      scores.push_back(pipeline::run_episode(net, selector, *env, seed, cfg.protocol.frame_limit, observe));
    } catch (const EnvFailure&) {
      scores.push_back(spec.failure_score);
    }
  }
  double mean = 0, m2 = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double delta = scores[i] - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (scores[i] - mean);
  }
  const double sd = std::sqrt(m2 / static_cast<double>(scores.size()));
  std::cout << "episodes: " << scores.size() << "\n"
            << "mean: " << fmt(mean) << "\n"
            << "std: " << fmt(sd) << "\n"
            << "score: " << fmt(mean) << " +/- " << fmt(sd) << "\n";
  return 0;
}

int cmd_plot(const std::vector<std::string>& ledgers, const std::vector<std::string>& labels, const std::string& out) {
  if (!labels.empty() && labels.size() != ledgers.size()) throw ConfigError("--labels needs one label per ledger");
  std::vector<report::NamedLedger> named;
  for (std::size_t i = 0; i < ledgers.size(); ++i)
    named.push_back({labels.empty() ? fs::path(ledgers[i]).stem().string() : labels[i], pipeline::load_ledger(ledgers[i])});
  for (const auto& p : report::plot_ledgers(named, out.empty() ? fs::path(".") : fs::path(out)))
    std::cout << p.string() << "\n";
  return 0;
}

int cmd_count_params(const std::string& path) {
  const auto r = pipeline::count_params(pipeline::load_model(path));
  std::cout << "attention: " << r.attention << "\n"
            << "connections: " << r.weights << "\n"
            << "biases: " << r.biases << "\n"
            << "network: " << r.weights + r.biases << "\n"
            << "total: " << r.total << "\n";
  return 0;
}

int cmd_env_check(const std::string& exe, const std::vector<std::string>& args, int timeout_ms) {
  envs::ExternalEnv env(exe, args, std::chrono::milliseconds(timeout_ms));
  const auto spec = env.spec();
  std::cout << "spec: " << envs::protocol::format_spec(spec) << "\n";
  const Frame f1 = env.reset(7);
  const Frame f2 = env.reset(7);
  if (!(f1 == f2)) throw ProtocolError("reset with the same seed returned different frames");
  long steps = 0;
  bool done = false;
  for (int a = 0; !done && steps < spec.max_frames; ++steps, a = (a + 1) % spec.actions) done = env.step(a).done;
  std::cout << "reset: deterministic\n"
            << "steps: " << steps << (done ? " (episode ended)" : "") << "\n"
            << "ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid Self-Attention NEAT: train, replay and inspect agents"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "run stage 1 (Seesaw) and stage 2 (weight tuning)");
  t->add_option("--config", train.config, "run config (JSON); defaults apply when omitted");
  t->add_option("--seed", train.seed, "root seed (overrides the config)");
  t->add_option("--out", train.out, "output directory (overrides the config)");
  t->add_option("--resume", train.resume, "continue from a checkpoint file");
  t->add_flag("--stage1-only", train.stage1_only, "skip weight tuning");
  t->add_option("--trials", train.trials, "episodes per fitness evaluation")->check(CLI::PositiveNumber);

  PlayArgs play;
  auto* p = app.add_subcommand("play", "replay a model and report mean and std of episode scores");
  p->add_option("model", play.model, "model file")->required();
  p->add_option("--episodes", play.episodes, "number of episodes")->capture_default_str();
  p->add_option("--seed", play.seed, "root seed for episode seeds")->capture_default_str();
  p->add_flag("--same-seed", play.same_seed, "use one seed for every episode");
  p->add_option("--dump-frames", play.dump_frames, "write attention overlays of the first episode here (PPM)");
  p->add_option("--env-exe", play.env_exe, "external environment executable (overrides the model config)");

  std::vector<std::string> ledgers, labels;
  std::string plot_out;
  auto* pl = app.add_subcommand("plot", "draw fitness curves from one or more ledgers");
  pl->add_option("ledgers", ledgers, "ledger CSV files")->required();
  pl->add_option("--labels", labels, "series label per ledger")->delimiter(',');
  pl->add_option("--out", plot_out, "output directory");

  std::string count_model;
  auto* cp = app.add_subcommand("count-params", "report learnable parameter counts of a model");
  cp->add_option("model", count_model, "model file")->required();

  std::string check_exe;
  std::vector<std::string> check_args;
  int check_timeout = 10000;
  auto* ec = app.add_subcommand("env-check", "validate an external environment against the line protocol");
  ec->add_option("executable", check_exe, "environment executable")->required();
  ec->add_option("args", check_args, "arguments passed to the executable");
  ec->add_option("--timeout-ms", check_timeout, "reply timeout")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*t) return cmd_train(train);
    if (*p) return cmd_play(play);
    if (*pl) return cmd_plot(ledgers, labels, plot_out);
    if (*cp) return cmd_count_params(count_model);
    if (*ec) return cmd_env_check(check_exe, check_args, check_timeout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const BadConfig& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const EnvFailure& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
