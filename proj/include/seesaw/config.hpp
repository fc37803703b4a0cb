#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <type_traits>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "seesaw/attention.hpp"
#include "seesaw/error.hpp"
#include "seesaw/neat/config.hpp"

namespace seesaw {

using json = nlohmann::ordered_json;

enum class SeedSchedule { fixed, per_generation, per_individual };

inline const char* to_string(SeedSchedule s) {
  switch (s) {
    case SeedSchedule::fixed: return "fixed";
    case SeedSchedule::per_generation: return "per_generation";
    case SeedSchedule::per_individual: return "per_individual";
  }
  return "?";
}

struct CmaesSettings {
  int population_size = 32;
  double init_sigma = 0.1;
  bool operator==(const CmaesSettings&) const = default;
};

struct PipelineSettings {
  int generations = 50;
  int tune_generations = 100;
  double tune_init_sigma = 0.1;
  int checkpoint_every = 1;
  int keep_checkpoints = 3;
  bool operator==(const PipelineSettings&) const = default;
};

struct EnvSettings {
  std::string name = "PatchChase";
  /// External environment executable; empty selects the built-in env.
  std::string executable;
  std::vector<std::string> args;
  int max_frames = 200;
  int step_timeout_ms = 10000;
  bool operator==(const EnvSettings&) const = default;
};

struct ProtocolSettings {
  int trials = 3;
  /// 0 = run to the environment's own episode end.
  int frame_limit = 0;
  SeedSchedule seed_schedule = SeedSchedule::per_generation;
  bool operator==(const ProtocolSettings&) const = default;
};

/// Everything a run depends on besides the code.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "runs/default";
  neat::NeatConfig neat;
  CmaesSettings cmaes;
  attention::AttentionConfig attention;
  PipelineSettings pipeline;
  EnvSettings env;
  ProtocolSettings protocol;

  void validate() const {
    neat.validate();
    attention.validate();
    if (cmaes.population_size < 2) throw BadConfig("cmaes.population_size must be >= 2");
    if (!(cmaes.init_sigma > 0.0)) throw BadConfig("cmaes.init_sigma must be > 0");
    if (!(pipeline.tune_init_sigma > 0.0)) throw BadConfig("pipeline.tune_init_sigma must be > 0");
    if (pipeline.generations < 0 || pipeline.tune_generations < 0)
      throw BadConfig("pipeline generation counts must be >= 0");
    if (pipeline.checkpoint_every < 0 || pipeline.keep_checkpoints < 1)
      throw BadConfig("pipeline checkpoint settings out of range");
    if (protocol.trials < 1) throw BadConfig("protocol.trials must be >= 1");
    if (protocol.frame_limit < 0) throw BadConfig("protocol.frame_limit must be >= 0");
    if (env.max_frames < 1) throw BadConfig("env.max_frames must be >= 1");
    if (env.step_timeout_ms < 1) throw BadConfig("env.step_timeout_ms must be >= 1");
  }
};

// --- JSON --------------------------------------------------------------------

inline json to_json(const neat::NeatConfig& c) {
  return json{{"population_size", c.population_size},
              {"fitness_criterion", c.fitness_criterion},
              {"reset_on_extinction", c.reset_on_extinction},
              {"activation_function", c.activation},
              {"aggregation_function", c.aggregation},
              {"compatibility_disjoint_coefficient", c.compatibility_disjoint_coefficient},
              {"compatibility_weight_coefficient", c.compatibility_weight_coefficient},
              {"conn_add_prob", c.conn_add_prob},
              {"conn_delete_prob", c.conn_delete_prob},
              {"feed_forward", c.feed_forward},
              {"node_add_prob", c.node_add_prob},
              {"node_delete_prob", c.node_delete_prob},
              {"weight_min", c.weight_min},
              {"weight_max", c.weight_max},
              {"weight_mutate_power", c.weight_mutate_power},
              {"weight_mutate_rate", c.weight_mutate_rate},
              {"weight_replace_rate", c.weight_replace_rate},
              {"compatibility_threshold", c.compatibility_threshold},
              {"max_stagnation", c.max_stagnation},
              {"species_elitism", c.species_elitism},
              {"elitism_threshold", c.elitism_threshold},
              {"survival_threshold", c.survival_threshold},
              {"weight_init_stdev", c.weight_init_stdev},
              {"compatibility_normalize", c.compatibility_normalize}};
}

inline json to_json(const RunConfig& c) {
  json args = json::array();
  for (const auto& a : c.env.args) args.push_back(a);
  return json{
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"neat", to_json(c.neat)},
      {"cmaes", {{"population_size", c.cmaes.population_size}, {"init_sigma", c.cmaes.init_sigma}}},
      {"attention",
       {{"patch_size", c.attention.patch_size},
        {"patch_stride", c.attention.patch_stride},
        {"transformation_dimension", c.attention.d},
        {"top_k", c.attention.k}}},
      {"pipeline",
       {{"generations", c.pipeline.generations},
        {"tune_generations", c.pipeline.tune_generations},
        {"tune_init_sigma", c.pipeline.tune_init_sigma},
        {"checkpoint_every", c.pipeline.checkpoint_every},
        {"keep_checkpoints", c.pipeline.keep_checkpoints}}},
      {"env",
       {{"name", c.env.name},
        {"executable", c.env.executable},
        {"args", args},
        {"max_frames", c.env.max_frames},
        {"step_timeout_ms", c.env.step_timeout_ms}}},
      {"protocol",
       {{"trials", c.protocol.trials},
        {"frame_limit", c.protocol.frame_limit},
        {"seed_schedule", to_string(c.protocol.seed_schedule)}}}};
}

namespace detail {

// 1-based line of the first `"key"` occurrence in the source text, or 0.
inline int line_of(const std::string& text, const std::string& key) {
  const auto pos = text.find('"' + key + '"');
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class Reader {
 public:
  explicit Reader(const std::string& source) : source_(source) {}

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    const auto dot = path.rfind('.');
    const int line = line_of(source_, dot == std::string::npos ? path : path.substr(dot + 1));
    throw ConfigError((line ? "line " + std::to_string(line) + ": " : std::string()) + path + ": " + msg);
  }

  void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) const {
    if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
    for (const auto& [k, v] : obj.items())
      if (!allowed.contains(k)) fail(path.empty() ? k : path + "." + k, "unknown key");
  }

  template <typename T>
  void read(const json& obj, const std::string& path, const char* key, T& out) const {
    if (!obj.contains(key)) return;
    const std::string full = path.empty() ? key : path + "." + key;
    const json& v = obj.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(full, "expected true/false");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(full, "expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
        fail(full, "expected a nonnegative integer");
      out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(full, "expected a number");
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(full, "expected a string");
      out = v.get<std::string>();
    } else {
      if (!v.is_array()) fail(full, "expected an array of strings");
      out.clear();
      for (const auto& e : v) {
        if (!e.is_string()) fail(full, "expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

 private:
  const std::string& source_;
};

}  // namespace detail

/// Parses a config document. Missing keys keep their defaults; unknown keys
/// and ill-typed values are ConfigErrors naming the field (and line when found).
inline RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(e.what());
  }
  detail::Reader r(text);
  RunConfig c;
  r.check_keys(j, "", {"seed", "output_dir", "neat", "cmaes", "attention", "pipeline", "env", "protocol"});
  r.read(j, "", "seed", c.seed);
  r.read(j, "", "output_dir", c.output_dir);

  if (j.contains("neat")) {
    const json& n = j["neat"];
    std::set<std::string> keys;
    const json defaults = to_json(c.neat);
    for (const auto& [k, v] : defaults.items()) keys.insert(k);
    r.check_keys(n, "neat", keys);
    auto& o = c.neat;
    r.read(n, "neat", "population_size", o.population_size);
    r.read(n, "neat", "fitness_criterion", o.fitness_criterion);
    r.read(n, "neat", "reset_on_extinction", o.reset_on_extinction);
    r.read(n, "neat", "activation_function", o.activation);
    r.read(n, "neat", "aggregation_function", o.aggregation);
    r.read(n, "neat", "compatibility_disjoint_coefficient", o.compatibility_disjoint_coefficient);
    r.read(n, "neat", "compatibility_weight_coefficient", o.compatibility_weight_coefficient);
    r.read(n, "neat", "conn_add_prob", o.conn_add_prob);
    r.read(n, "neat", "conn_delete_prob", o.conn_delete_prob);
    r.read(n, "neat", "feed_forward", o.feed_forward);
    r.read(n, "neat", "node_add_prob", o.node_add_prob);
    r.read(n, "neat", "node_delete_prob", o.node_delete_prob);
    r.read(n, "neat", "weight_min", o.weight_min);
    r.read(n, "neat", "weight_max", o.weight_max);
    r.read(n, "neat", "weight_mutate_power", o.weight_mutate_power);
    r.read(n, "neat", "weight_mutate_rate", o.weight_mutate_rate);
    r.read(n, "neat", "weight_replace_rate", o.weight_replace_rate);
    r.read(n, "neat", "compatibility_threshold", o.compatibility_threshold);
    r.read(n, "neat", "max_stagnation", o.max_stagnation);
    r.read(n, "neat", "species_elitism", o.species_elitism);
    r.read(n, "neat", "elitism_threshold", o.elitism_threshold);
    r.read(n, "neat", "survival_threshold", o.survival_threshold);
    r.read(n, "neat", "weight_init_stdev", o.weight_init_stdev);
    r.read(n, "neat", "compatibility_normalize", o.compatibility_normalize);
  }
  if (j.contains("cmaes")) {
    const json& s = j["cmaes"];
    r.check_keys(s, "cmaes", {"population_size", "init_sigma"});
    r.read(s, "cmaes", "population_size", c.cmaes.population_size);
    r.read(s, "cmaes", "init_sigma", c.cmaes.init_sigma);
  }
  if (j.contains("attention")) {
    const json& s = j["attention"];
    r.check_keys(s, "attention", {"patch_size", "patch_stride", "transformation_dimension", "top_k"});
    r.read(s, "attention", "patch_size", c.attention.patch_size);
    r.read(s, "attention", "patch_stride", c.attention.patch_stride);
    r.read(s, "attention", "transformation_dimension", c.attention.d);
    r.read(s, "attention", "top_k", c.attention.k);
  }
  if (j.contains("pipeline")) {
    const json& s = j["pipeline"];
    r.check_keys(s, "pipeline",
                 {"generations", "tune_generations", "tune_init_sigma", "checkpoint_every", "keep_checkpoints"});
    r.read(s, "pipeline", "generations", c.pipeline.generations);
    r.read(s, "pipeline", "tune_generations", c.pipeline.tune_generations);
    r.read(s, "pipeline", "tune_init_sigma", c.pipeline.tune_init_sigma);
    r.read(s, "pipeline", "checkpoint_every", c.pipeline.checkpoint_every);
    r.read(s, "pipeline", "keep_checkpoints", c.pipeline.keep_checkpoints);
  }
  if (j.contains("env")) {
    const json& s = j["env"];
    r.check_keys(s, "env", {"name", "executable", "args", "max_frames", "step_timeout_ms"});
    r.read(s, "env", "name", c.env.name);
    r.read(s, "env", "executable", c.env.executable);
    r.read(s, "env", "args", c.env.args);
    r.read(s, "env", "max_frames", c.env.max_frames);
    r.read(s, "env", "step_timeout_ms", c.env.step_timeout_ms);
  }
  if (j.contains("protocol")) {
    const json& s = j["protocol"];
    r.check_keys(s, "protocol", {"trials", "frame_limit", "seed_schedule"});
    r.read(s, "protocol", "trials", c.protocol.trials);
    r.read(s, "protocol", "frame_limit", c.protocol.frame_limit);
    std::string mode = to_string(c.protocol.seed_schedule);
    r.read(s, "protocol", "seed_schedule", mode);
    if (mode == "fixed") c.protocol.seed_schedule = SeedSchedule::fixed;
    else if (mode == "per_generation") c.protocol.seed_schedule = SeedSchedule::per_generation;
    else if (mode == "per_individual") c.protocol.seed_schedule = SeedSchedule::per_individual;
    else r.fail("protocol.seed_schedule", "expected fixed, per_generation or per_individual");
  }
  try {
    c.validate();
  } catch (const BadConfig& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string dump_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

inline bool operator==(const RunConfig& a, const RunConfig& b) { return dump_config(a) == dump_config(b); }

}  // namespace seesaw
