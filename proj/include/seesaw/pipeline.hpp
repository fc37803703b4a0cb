#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "seesaw/attention.hpp"
#include "seesaw/cmaes.hpp"
#include "seesaw/config.hpp"
#include "seesaw/envs/environment.hpp"
#include "seesaw/envs/external.hpp"
#include "seesaw/envs/patch_chase.hpp"
#include "seesaw/neat/genome.hpp"
#include "seesaw/neat/mutation.hpp"
#include "seesaw/neat/network.hpp"
#include "seesaw/neat/species.hpp"
#include "seesaw/parallel.hpp"
#include "seesaw/rng.hpp"
#include "seesaw/serialize.hpp"

namespace seesaw::pipeline {

using attention::AttentionParams;
using neat::Genome;

// --- evaluation --------------------------------------------------------------

/// How individuals are scored: `trials` episodes, averaged, with seeds drawn
/// from a schedule over (stage, generation, individual, trial).
struct EvaluationProtocol {
  std::uint64_t root_seed = 1;
  int trials = 3;
  int frame_limit = 0;
  SeedSchedule schedule = SeedSchedule::per_generation;

  std::uint64_t episode_seed(int stage, long generation, std::size_t individual, int trial) const {
    constexpr std::uint64_t tag = 0x65706973u;
    const auto t = static_cast<std::uint64_t>(trial);
    switch (schedule) {
      case SeedSchedule::fixed: return Rng(root_seed).split({tag, t}).seed();
      case SeedSchedule::per_generation:
        return Rng(root_seed).split({tag, static_cast<std::uint64_t>(stage), static_cast<std::uint64_t>(generation), t})
            .seed();
      case SeedSchedule::per_individual:
        return Rng(root_seed)
            .split({tag, static_cast<std::uint64_t>(stage), static_cast<std::uint64_t>(generation), individual, t})
            .seed();
    }
    return 0;
  }

  static EvaluationProtocol from(const RunConfig& c) {
    return {c.seed, c.protocol.trials, c.protocol.frame_limit, c.protocol.seed_schedule};
  }
};

inline void check_io(const Genome& g, const attention::AttentionConfig& acfg, const envs::EnvSpec& spec) {
  const auto in = g.count(neat::NodeKind::input), out = g.count(neat::NodeKind::output);
  if (in != 2 * static_cast<std::size_t>(acfg.k) || out != static_cast<std::size_t>(spec.actions))
    throw IoMismatch("genome has " + std::to_string(in) + " inputs / " + std::to_string(out) + " outputs; expected " +
                     std::to_string(2 * acfg.k) + " / " + std::to_string(spec.actions));
}

/// Lowest index among the maxima.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

/// Called once per observed frame with the ranking the agent acted on.
using FrameObserver = std::function<void(const Frame&, const attention::PatchSelector&, const attention::ImportanceRanking&)>;

/// One episode: the attention picks k patches, their centers feed the
/// network, the highest output is the action. Returns the summed reward.
inline double run_episode(neat::Network& net, attention::PatchSelector& selector, envs::Environment& env,
                          std::uint64_t seed, int frame_limit, const FrameObserver& observe = {}) {
  std::vector<double> inputs(static_cast<std::size_t>(2 * selector.config().k));
  net.reset();
  Frame frame = env.reset(seed);
  double score = 0.0;
  for (int t = 0; frame_limit <= 0 || t < frame_limit; ++t) {
    selector.centers(frame, inputs);
    if (observe) observe(frame, selector, selector.rank(frame));
    const auto out = net.activate(inputs);
    auto r = env.step(static_cast<int>(argmax(out)));
    score += r.reward;
    if (r.done) break;
    frame = std::move(r.frame);
  }
  return score;
}

/// Per-trial episode scores. An episode the environment fails to finish
/// scores the environment's floor.
inline std::vector<double> trial_scores(const Genome& g, const AttentionParams& params,
                                        const attention::AttentionConfig& acfg, envs::Environment& env,
                                        const EvaluationProtocol& proto, int stage, long generation,
                                        std::size_t individual) {
  check_io(g, acfg, env.spec());
  neat::Network net(g);
  attention::PatchSelector selector(params, acfg);
  std::vector<double> scores;
  for (int t = 0; t < proto.trials; ++t) {
    const auto seed = proto.episode_seed(stage, generation, individual, t);
    try {
      scores.push_back(run_episode(net, selector, env, seed, proto.frame_limit));
    } catch (const EnvFailure&) {
      scores.push_back(env.spec().failure_score);
    }
  }
  return scores;
}

inline double evaluate_individual(const Genome& g, const AttentionParams& params,
                                  const attention::AttentionConfig& acfg, envs::Environment& env,
                                  const EvaluationProtocol& proto, int stage = 1, long generation = 0,
                                  std::size_t individual = 0) {
  const auto s = trial_scores(g, params, acfg, env, proto, stage, generation, individual);
  double sum = 0.0;
  for (double v : s) sum += v;
  return sum / static_cast<double>(s.size());
}

/// Runs independent evaluation jobs over worker slots, each slot owning one
/// environment instance. Results are keyed by job index.
class Evaluator {
 public:
  explicit Evaluator(envs::EnvFactory factory, unsigned workers = worker_count())
      : factory_(std::move(factory)), envs_(std::max(1u, workers)) {}

  envs::Environment& env(unsigned slot) {
    if (!envs_[slot]) envs_[slot] = factory_();
    return *envs_[slot];
  }

  const envs::EnvSpec& spec() { return env(0).spec(); }

  std::vector<double> run(std::size_t n, const std::function<double(std::size_t, envs::Environment&)>& job) {
    spec();
    std::vector<double> out(n);
    parallel_for(n, static_cast<unsigned>(envs_.size()), [&](std::size_t i, unsigned slot) { out[i] = job(i, env(slot)); });
    return out;
  }

 private:
  envs::EnvFactory factory_;
  std::vector<std::unique_ptr<envs::Environment>> envs_;
};

inline envs::EnvFactory make_env_factory(const RunConfig& c) {
  if (c.env.executable.empty()) {
    if (c.env.name != "PatchChase") throw ConfigError("env.name: unknown built-in environment '" + c.env.name + "'");
    const int frames = c.env.max_frames;
    return [frames] { return std::make_unique<envs::PatchChase>(frames); };
  }
  const auto path = c.env.executable;
  const auto args = c.env.args;
  const auto timeout = std::chrono::milliseconds(c.env.step_timeout_ms);
  return [path, args, timeout] { return std::make_unique<envs::ExternalEnv>(path, args, timeout); };
}

// --- ledger ------------------------------------------------------------------

struct LedgerRow {
  int stage = 1;
  long generation = 0;
  std::string phase;
  double best = 0, mean = 0, sd = 0;
  long episodes = 0;
};

inline constexpr const char* ledger_header = "stage,generation,phase,best,mean,std,episodes";

inline std::string format_row(const LedgerRow& r) {
  return std::to_string(r.stage) + "," + std::to_string(r.generation) + "," + r.phase + "," +
         envs::protocol::format_real(r.best) + "," + envs::protocol::format_real(r.mean) + "," +
         envs::protocol::format_real(r.sd) + "," + std::to_string(r.episodes);
}

inline LedgerRow summarize(int stage, long generation, std::string phase, std::span<const double> f, int trials) {
  LedgerRow r{stage, generation, std::move(phase), -std::numeric_limits<double>::infinity(), 0, 0,
              static_cast<long>(f.size()) * trials};
  for (double v : f) r.best = std::max(r.best, v), r.mean += v;
  r.mean /= static_cast<double>(f.size());
  for (double v : f) r.sd += (v - r.mean) * (v - r.mean);
  r.sd = std::sqrt(r.sd / static_cast<double>(f.size()));
  return r;
}

inline std::vector<LedgerRow> parse_ledger(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != ledger_header) throw LedgerParseError("missing ledger header");
  std::vector<LedgerRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 7) throw LedgerParseError("line " + std::to_string(lineno) + ": expected 7 fields");
    try {
      std::size_t used = 0;
      auto whole = [&](const std::string& s) {
        if (used != s.size()) throw std::invalid_argument(s);
      };
      LedgerRow r;
      r.stage = std::stoi(cells[0], &used), whole(cells[0]);
      r.generation = std::stol(cells[1], &used), whole(cells[1]);
      r.phase = cells[2];
      r.best = std::stod(cells[3], &used), whole(cells[3]);
      r.mean = std::stod(cells[4], &used), whole(cells[4]);
      r.sd = std::stod(cells[5], &used), whole(cells[5]);
      r.episodes = std::stol(cells[6], &used), whole(cells[6]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw LedgerParseError("line " + std::to_string(lineno) + ": malformed number");
    }
  }
  if (rows.empty()) throw LedgerParseError("ledger has no rows");
  return rows;
}

inline std::vector<LedgerRow> load_ledger(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LedgerParseError("cannot read ledger '" + path + "'");
  return parse_ledger(in);
}

// --- stage 1 -----------------------------------------------------------------

inline neat::NeatConfig network_config(const RunConfig& c, const envs::EnvSpec& spec) {
  neat::NeatConfig n = c.neat;
  n.num_inputs = 2 * c.attention.k;
  n.num_outputs = spec.actions;
  n.validate();
  return n;
}

struct SeesawState {
  long generation = 0;  ///< next generation to run
  std::vector<Genome> population;
  neat::SpeciesSet species;
  neat::InnovationRegistry registry;
  cmaes::CmaesState cma;
  AttentionParams attention;  ///< current best attention
  Genome controller;  ///< best genome of the last evaluated population
  Genome best_genome;  ///< best-so-far pair
  AttentionParams best_attention;
  double best_fitness = -std::numeric_limits<double>::infinity();
  std::vector<LedgerRow> ledger;
};

inline SeesawState init_seesaw(const RunConfig& c, const envs::EnvSpec& spec) {
  const auto ncfg = network_config(c, spec);
  const Rng root(c.seed);
  Rng rng = root.split({1, 0xF00D});
  SeesawState s;
  s.registry = neat::make_registry(ncfg);
  s.population = neat::make_initial_population(ncfg, s.registry, rng);
  cmaes::CmaesConfig cc;
  cc.dimension = attention::param_count(c.attention);
  cc.population_size = c.cmaes.population_size;
  cc.init_sigma = c.cmaes.init_sigma;
  s.cma = cmaes::init(cc);
  s.attention = AttentionParams::zeros(c.attention);
  s.controller = s.population.front();
  s.best_genome = s.controller;
  s.best_attention = s.attention;
  return s;
}

/// One Seesaw iteration: (A) fix the controller and evolve attention,
/// (B) fix the best attention and evolve the NEAT population.
inline void seesaw_generation(SeesawState& s, Evaluator& ev, const EvaluationProtocol& proto, const RunConfig& c) {
  const auto& spec = ev.spec();
  const auto ncfg = network_config(c, spec);
  const long gen = s.generation;
  const Rng rng_gen = Rng(c.seed).split({1, static_cast<std::uint64_t>(gen)});

  // Phase A
  Rng rng_a = rng_gen.split(0xA);
  const auto candidates = cmaes::ask(s.cma, rng_a);
  std::vector<AttentionParams> params;
  params.reserve(candidates.size());
  for (const auto& x : candidates) params.push_back(attention::vector_to_params(x, c.attention));
  const Genome controller = s.controller;
  const auto fa = ev.run(params.size(), [&](std::size_t i, envs::Environment& env) {
    return evaluate_individual(controller, params[i], c.attention, env, proto, 1, gen, i);
  });
  cmaes::tell(s.cma, candidates, fa);
  const std::size_t ia = argmax(fa);
  s.attention = params[ia];
  if (fa[ia] > s.best_fitness) {
    s.best_fitness = fa[ia];
    s.best_genome = controller;
    s.best_genome.fitness = fa[ia];
    s.best_attention = s.attention;
  }
  s.ledger.push_back(summarize(1, gen, "attention", fa, proto.trials));

  // Phase B
  const AttentionParams att = s.attention;
  const auto fb = ev.run(s.population.size(), [&](std::size_t i, envs::Environment& env) {
    return evaluate_individual(s.population[i], att, c.attention, env, proto, 1, gen, params.size() + i);
  });
  for (std::size_t i = 0; i < fb.size(); ++i) s.population[i].fitness = fb[i];
  const std::size_t ib = argmax(fb);
  s.controller = s.population[ib];
  if (fb[ib] > s.best_fitness) {
    s.best_fitness = fb[ib];
    s.best_genome = s.controller;
    s.best_attention = att;
  }
  s.ledger.push_back(summarize(1, gen, "neat", fb, proto.trials));

  Rng rng_b = rng_gen.split(0xB);
  s.species = neat::speciate(s.population, s.species, ncfg);
  s.population = neat::next_generation(s.species, s.population, s.registry, ncfg, rng_b);
  ++s.generation;
}

// --- models ------------------------------------------------------------------

struct FinalModel {
  Genome genome;  ///< topology with the final weights applied
  std::vector<double> weights;
  bool tuned = false;
  AttentionParams attention;
  RunConfig config;
  double stage1_fitness = 0;
  double fitness = 0;
};

inline FinalModel candidate_from(const SeesawState& s, const RunConfig& c) {
  FinalModel m;
  m.genome = s.best_genome;
  m.genome.fitness.reset();
  m.weights = neat::extract_weight_vector(m.genome);
  m.attention = s.best_attention;
  m.config = c;
  m.stage1_fitness = m.fitness = std::isfinite(s.best_fitness) ? s.best_fitness : 0.0;
  return m;
}

inline json to_json(const FinalModel& m) {
  return {{"format", "seesaw-model"},
          {"version", 1},
          {"tuned", m.tuned},
          {"stage1_fitness", m.stage1_fitness},
          {"fitness", m.fitness},
          {"config", seesaw::to_json(m.config)},
          {"attention", serial::to_json(m.attention)},
          {"genome", serial::to_json(m.genome)},
          {"weights", m.weights}};
}

inline FinalModel model_from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != "seesaw-model") throw ModelParseError("not a model document");
    if (j.at("version") != 1) throw ModelParseError("unsupported model version");
    FinalModel m;
    m.tuned = j.at("tuned").get<bool>();
    m.stage1_fitness = j.at("stage1_fitness").get<double>();
    m.fitness = j.at("fitness").get<double>();
    m.config = parse_config(j.at("config").dump());
    m.attention = serial::attention_from_json(j.at("attention"));
    m.genome = serial::genome_from_json(j.at("genome"));
    m.weights = j.at("weights").get<std::vector<double>>();
    if (m.weights != neat::extract_weight_vector(m.genome)) throw ModelParseError("weights disagree with genome");
    return m;
  } catch (const json::exception& e) {
    throw ModelParseError(e.what());
  } catch (const CheckpointError& e) {
    throw ModelParseError(e.what());
  } catch (const ConfigError& e) {
    throw ModelParseError(std::string("config: ") + e.what());
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out << text;
    if (!out) throw Error("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void save_model(const FinalModel& m, const std::filesystem::path& path) { write_text(path, to_json(m).dump(1) + "\n"); }

inline FinalModel load_model(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    throw ModelParseError(e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelParseError(e.what());
  }
  return model_from_json(j);
}

// --- checkpoints -------------------------------------------------------------

inline json to_json(const SeesawState& s, const RunConfig& c) {
  json pop = json::array();
  for (const auto& g : s.population) pop.push_back(serial::to_json(g));
  json ledger = json::array();
  for (const auto& r : s.ledger) ledger.push_back(format_row(r));
  return {{"format", "seesaw-checkpoint"},
          {"version", 1},
          {"config", seesaw::to_json(c)},
          {"rng", {{"root_seed", c.seed}, {"next_generation", s.generation}}},
          {"population", pop},
          {"species", serial::to_json(s.species)},
          {"registry", serial::to_json(s.registry)},
          {"attention", serial::to_json(s.attention)},
          {"controller", serial::to_json(s.controller)},
          {"best_genome", serial::to_json(s.best_genome)},
          {"best_attention", serial::to_json(s.best_attention)},
          {"best_fitness", serial::finite_or_null(s.best_fitness)},
          {"ledger", ledger},
          {"cmaes", serial::to_json(s.cma)}};
}

struct Checkpoint {
  RunConfig config;
  SeesawState state;
};

inline Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != "seesaw-checkpoint") throw CheckpointError("not a checkpoint");
    if (j.at("version") != 1) throw CheckpointError("unsupported checkpoint version");
    Checkpoint cp;
    try {
      cp.config = parse_config(j.at("config").dump());
    } catch (const ConfigError& e) {
      throw CheckpointError(std::string("config: ") + e.what());
    }
    auto& s = cp.state;
    s.generation = j.at("rng").at("next_generation").get<long>();
    if (j.at("rng").at("root_seed").get<std::uint64_t>() != cp.config.seed) throw CheckpointError("seed mismatch");
    for (const auto& g : j.at("population")) s.population.push_back(serial::genome_from_json(g));
    s.species = serial::species_from_json(j.at("species"));
    s.registry = serial::registry_from_json(j.at("registry"));
    s.attention = serial::attention_from_json(j.at("attention"));
    s.controller = serial::genome_from_json(j.at("controller"));
    s.best_genome = serial::genome_from_json(j.at("best_genome"));
    s.best_attention = serial::attention_from_json(j.at("best_attention"));
    s.best_fitness = serial::from_finite_or_null(j.at("best_fitness"));
    for (const auto& line : j.at("ledger")) {
      std::istringstream in(std::string(ledger_header) + "\n" + line.get<std::string>() + "\n");
      s.ledger.push_back(parse_ledger(in).front());
    }
    s.cma = serial::cmaes_from_json(j.at("cmaes"));
    return cp;
  } catch (const json::exception& e) {
    throw CheckpointError(e.what());
  } catch (const LedgerParseError& e) {
    throw CheckpointError(std::string("ledger: ") + e.what());
  }
}

inline void save_checkpoint(const SeesawState& s, const RunConfig& c, const std::filesystem::path& path) {
  write_text(path, to_json(s, c).dump() + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    throw CheckpointError(e.what());
  }
  try {
    return checkpoint_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw CheckpointError(e.what());
  }
}

/// Writes checkpoints into `dir`: one per `every` generations, keeping the
/// newest `keep` plus a copy of the one where the best-so-far last improved.
class CheckpointWriter {
 public:
  CheckpointWriter(std::filesystem::path dir, int every, int keep) : dir_(std::move(dir)), every_(every), keep_(keep) {
    std::filesystem::create_directories(dir_);
  }

  void operator()(const SeesawState& s, const RunConfig& c) {
    const bool improved = s.best_fitness > last_best_;
    last_best_ = std::max(last_best_, s.best_fitness);
    if (every_ <= 0 || s.generation % every_ != 0) {
      if (improved) save_checkpoint(s, c, dir_ / "best.json");
      return;
    }
    char name[32];
    std::snprintf(name, sizeof name, "gen_%05ld.json", s.generation);
    save_checkpoint(s, c, dir_ / name);
    if (improved) std::filesystem::copy_file(dir_ / name, dir_ / "best.json", std::filesystem::copy_options::overwrite_existing);
    written_.push_back(dir_ / name);
    while (written_.size() > static_cast<std::size_t>(keep_)) {
      std::filesystem::remove(written_.front());
      written_.erase(written_.begin());
    }
  }

 private:
  std::filesystem::path dir_;
  int every_, keep_;
  double last_best_ = -std::numeric_limits<double>::infinity();
  std::vector<std::filesystem::path> written_;
};

using GenerationHook = std::function<void(const SeesawState&)>;

/// Runs Seesaw generations until `c.pipeline.generations` have completed.
/// Returns the best (genome, attention) pair observed; with no generations
/// that is the first initial genome and the starting attention.
inline FinalModel train_stage1(SeesawState& s, Evaluator& ev, const RunConfig& c, const GenerationHook& hook = {}) {
  const auto proto = EvaluationProtocol::from(c);
  while (s.generation < c.pipeline.generations) {
    seesaw_generation(s, ev, proto, c);
    if (hook) hook(s);
  }
  return candidate_from(s, c);
}

// --- stage 2 -----------------------------------------------------------------

struct TuneResult {
  FinalModel model;
  std::vector<LedgerRow> ledger;
  std::vector<cmaes::TraceRow> trace;
};

/// CMA-ES over the flattened weights of the fixed topology, started at the
/// candidate's weights. The starting point is scored first and kept unless a
/// sample beats it, so the result never scores below it on a fixed schedule.
inline TuneResult tune_stage2(const FinalModel& candidate, Evaluator& ev, const EvaluationProtocol& proto, int budget,
                              int lambda, double sigma0, std::uint64_t seed) {
  TuneResult out{candidate, {}, {}};
  if (budget <= 0) return out;
  const auto& acfg = candidate.config.attention;
  const auto ncfg = network_config(candidate.config, ev.spec());
  const Genome base = candidate.genome;
  const auto start = neat::extract_weight_vector(base);

  const auto f0 = ev.run(1, [&](std::size_t, envs::Environment& env) {
    return evaluate_individual(base, candidate.attention, acfg, env, proto, 2, 0, 0);
  });
  out.ledger.push_back(summarize(2, 0, "init", f0, proto.trials));
  double best = f0[0];
  std::vector<double> best_w = start;

  cmaes::CmaesConfig cc;
  cc.dimension = start.size();
  cc.population_size = lambda;
  cc.init_sigma = sigma0;
  cc.initial_mean = start;
  auto state = cmaes::init(cc);
  const Rng root = Rng(seed).split(2);
  for (int g = 1; g <= budget; ++g) {
    Rng rng = root.split(static_cast<std::uint64_t>(g));
    const auto xs = cmaes::ask(state, rng);
    std::vector<Genome> gs;
    gs.reserve(xs.size());
    for (const auto& x : xs) gs.push_back(neat::apply_weight_vector(base, x, ncfg));
    const auto f = ev.run(gs.size(), [&](std::size_t i, envs::Environment& env) {
      return evaluate_individual(gs[i], candidate.attention, acfg, env, proto, 2, g, i);
    });
    cmaes::tell(state, xs, f);
    const auto i = argmax(f);
    if (f[i] > best) {
      best = f[i];
      best_w = neat::extract_weight_vector(gs[i]);
    }
    const auto row = summarize(2, g, "tune", f, proto.trials);
    out.ledger.push_back(row);
    out.trace.push_back({g, row.best, row.mean, state.sigma, state.axis_ratio()});
  }
  out.model.genome = neat::apply_weight_vector(base, best_w, ncfg);
  out.model.weights = neat::extract_weight_vector(out.model.genome);
  out.model.tuned = true;
  out.model.fitness = best;
  return out;
}

inline TuneResult tune_stage2(const FinalModel& candidate, Evaluator& ev, const RunConfig& c) {
  return tune_stage2(candidate, ev, EvaluationProtocol::from(c), c.pipeline.tune_generations, c.cmaes.population_size,
                     c.pipeline.tune_init_sigma, c.seed);
}

// --- parameter accounting ----------------------------------------------------

struct ParamReport {
  std::size_t attention = 0;
  std::size_t weights = 0;  ///< enabled connections
  std::size_t biases = 0;  ///< non-input nodes
  std::size_t total = 0;
};

inline ParamReport count_params(const FinalModel& m) {
  ParamReport r;
  r.attention = attention::param_count(m.config.attention);
  if (m.attention.w_k.size() + m.attention.w_q.size() != r.attention)
    throw ModelParseError("attention matrices hold " + std::to_string(m.attention.w_k.size() + m.attention.w_q.size()) +
                          " values, config implies " + std::to_string(r.attention));
  r.weights = m.genome.num_enabled();
  r.biases = m.genome.nodes.size() - m.genome.count(neat::NodeKind::input);
  if (r.weights + r.biases != neat::weight_vector_size(m.genome)) throw ModelParseError("genome parameter count mismatch");
  r.total = r.attention + r.weights + r.biases;
  return r;
}

}  // namespace seesaw::pipeline
