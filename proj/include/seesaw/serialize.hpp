#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <string>
#include <vector>

#include "seesaw/attention.hpp"
#include "seesaw/cmaes.hpp"
#include "seesaw/config.hpp"
#include "seesaw/envs/base64.hpp"
#include "seesaw/error.hpp"
#include "seesaw/neat/genome.hpp"
#include "seesaw/neat/species.hpp"

namespace seesaw::serial {

static_assert(std::endian::native == std::endian::little, "blob encoding assumes a little-endian host");

inline constexpr int genome_format_version = 1;

// Doubles as base64 of their little-endian IEEE bytes: exact and compact.
inline std::string pack(const double* data, std::size_t n) {
  std::vector<std::uint8_t> bytes(n * sizeof(double));
  if (n) std::memcpy(bytes.data(), data, bytes.size());
  return base64::encode(bytes);
}

inline std::string pack(const std::vector<double>& v) { return pack(v.data(), v.size()); }

inline std::vector<double> unpack(const json& j, const char* what) {
  if (!j.is_string()) throw CheckpointError(std::string(what) + ": expected a base64 string");
  auto bytes = base64::decode(j.get<std::string>());
  if (!bytes || bytes->size() % sizeof(double) != 0) throw CheckpointError(std::string(what) + ": bad blob");
  std::vector<double> v(bytes->size() / sizeof(double));
  if (!v.empty()) std::memcpy(v.data(), bytes->data(), bytes->size());
  return v;
}

inline const json& at(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw CheckpointError(std::string("missing field '") + key + "'");
  return j.at(key);
}

// --- genome ----------------------------------------------------------------

inline json to_json(const neat::Genome& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes)
    nodes.push_back({{"id", n.id}, {"kind", neat::to_string(n.kind)}, {"bias", n.bias}});
  json conns = json::array();
  for (const auto& c : g.connections)
    conns.push_back(
        {{"innovation", c.innovation}, {"from", c.from}, {"to", c.to}, {"weight", c.weight}, {"enabled", c.enabled}});
  json out{{"format", "seesaw-genome"}, {"version", genome_format_version}, {"nodes", nodes}, {"connections", conns}};
  out["fitness"] = g.fitness ? json(*g.fitness) : json(nullptr);
  return out;
}

inline neat::Genome genome_from_json(const json& j) {
  try {
    if (at(j, "format") != "seesaw-genome") throw CheckpointError("not a genome document");
    if (at(j, "version").get<int>() != genome_format_version)
      throw CheckpointError("unsupported genome version " + at(j, "version").dump());
    neat::Genome g;
    for (const auto& n : at(j, "nodes")) {
      neat::NodeGene ng;
      ng.id = at(n, "id").get<neat::NodeId>();
      const auto kind = at(n, "kind").get<std::string>();
      if (kind == "input") ng.kind = neat::NodeKind::input;
      else if (kind == "output") ng.kind = neat::NodeKind::output;
      else if (kind == "hidden") ng.kind = neat::NodeKind::hidden;
      else throw CheckpointError("unknown node kind '" + kind + "'");
      ng.bias = at(n, "bias").get<double>();
      g.nodes.push_back(ng);
    }
    for (const auto& c : at(j, "connections")) {
      neat::ConnectionGene cg;
      cg.innovation = at(c, "innovation").get<neat::Innovation>();
      cg.from = at(c, "from").get<neat::NodeId>();
      cg.to = at(c, "to").get<neat::NodeId>();
      cg.weight = at(c, "weight").get<double>();
      cg.enabled = at(c, "enabled").get<bool>();
      g.connections.push_back(cg);
    }
    if (j.contains("fitness") && !j["fitness"].is_null()) g.fitness = j["fitness"].get<double>();
    if (auto err = neat::check_genome(g)) throw CheckpointError("invalid genome: " + *err);
    return g;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("genome: ") + e.what());
  }
}

// --- registry / species ----------------------------------------------------

inline json to_json(const neat::InnovationRegistry& r) {
  json pairs = json::array();
  for (const auto& [k, v] : r.pairs()) pairs.push_back({k.first, k.second, v});
  json splits = json::array();
  for (const auto& [k, v] : r.splits()) splits.push_back({k, v});
  return {{"next_node", r.next_node()}, {"next_innovation", r.next_innovation()}, {"pairs", pairs}, {"splits", splits}};
}

inline neat::InnovationRegistry registry_from_json(const json& j) {
  std::map<std::pair<neat::NodeId, neat::NodeId>, neat::Innovation> pairs;
  for (const auto& p : at(j, "pairs"))
    pairs[{p.at(0).get<neat::NodeId>(), p.at(1).get<neat::NodeId>()}] = p.at(2).get<neat::Innovation>();
  std::map<neat::Innovation, neat::NodeId> splits;
  for (const auto& s : at(j, "splits")) splits[s.at(0).get<neat::Innovation>()] = s.at(1).get<neat::NodeId>();
  return neat::InnovationRegistry::restore(at(j, "next_node").get<neat::NodeId>(),
                                           at(j, "next_innovation").get<neat::Innovation>(), std::move(pairs),
                                           std::move(splits));
}

// -inf (a species that has never been scored) is stored as null.
inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline double from_finite_or_null(const json& j) {
  return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

inline json to_json(const neat::SpeciesSet& s) {
  json list = json::array();
  for (const auto& sp : s.species)
    list.push_back({{"id", sp.id},
                    {"representative", to_json(sp.representative)},
                    {"members", sp.members},
                    {"best_fitness", finite_or_null(sp.best_fitness)},
                    {"stagnation", sp.stagnation}});
  return {{"next_id", s.next_id}, {"species", list}};
}

inline neat::SpeciesSet species_from_json(const json& j) {
  neat::SpeciesSet s;
  s.next_id = at(j, "next_id").get<int>();
  for (const auto& e : at(j, "species")) {
    neat::Species sp;
    sp.id = at(e, "id").get<int>();
    sp.representative = genome_from_json(at(e, "representative"));
    sp.members = at(e, "members").get<std::vector<std::size_t>>();
    sp.best_fitness = from_finite_or_null(at(e, "best_fitness"));
    sp.stagnation = at(e, "stagnation").get<int>();
    s.species.push_back(std::move(sp));
  }
  return s;
}

// --- attention ---------------------------------------------------------------

inline json to_json(const attention::AttentionParams& p) {
  return {{"rows", p.rows}, {"d", p.d}, {"w_k", pack(p.w_k)}, {"w_q", pack(p.w_q)}};
}

inline attention::AttentionParams attention_from_json(const json& j) {
  attention::AttentionParams p;
  p.rows = at(j, "rows").get<int>();
  p.d = at(j, "d").get<int>();
  p.w_k = unpack(at(j, "w_k"), "w_k");
  p.w_q = unpack(at(j, "w_q"), "w_q");
  const auto expect = static_cast<std::size_t>(p.rows) * static_cast<std::size_t>(p.d);
  if (p.w_k.size() != expect || p.w_q.size() != expect) throw CheckpointError("attention matrices have wrong size");
  return p;
}

// --- CMA-ES ------------------------------------------------------------------

inline std::string pack(const Eigen::VectorXd& v) { return pack(v.data(), static_cast<std::size_t>(v.size())); }

inline Eigen::VectorXd unpack_vector(const json& j, const char* what, std::size_t n) {
  auto v = unpack(j, what);
  if (v.size() != n) throw CheckpointError(std::string(what) + ": wrong length");
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(n));
}

inline json to_json(const cmaes::CmaesState& s) {
  const auto n = static_cast<Eigen::Index>(s.n);
  // cov is symmetric; one triangle is enough.
  std::vector<double> upper;
  upper.reserve(static_cast<std::size_t>(n * (n + 1) / 2));
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r <= c; ++r) upper.push_back(s.cov(r, c));
  return {{"n", s.n},
          {"lambda", s.lambda},
          {"mu", s.mu},
          {"weights", pack(s.weights)},
          {"mueff", s.mueff},
          {"cs", s.cs},
          {"damps", s.damps},
          {"cc", s.cc},
          {"c1", s.c1},
          {"cmu", s.cmu},
          {"chi_n", s.chi_n},
          {"eigen_interval", s.eigen_interval},
          {"mean", pack(s.mean)},
          {"sigma", s.sigma},
          {"cov_upper", pack(upper)},
          {"basis", pack(s.basis.data(), static_cast<std::size_t>(s.basis.size()))},
          {"scales", pack(s.scales)},
          {"path_sigma", pack(s.path_sigma)},
          {"path_c", pack(s.path_c)},
          {"generation", s.generation},
          {"evaluations", s.evaluations},
          {"eigen_generation", s.eigen_generation},
          {"best_fitness", finite_or_null(s.best_fitness)},
          {"best_x", pack(s.best_x)}};
}

inline cmaes::CmaesState cmaes_from_json(const json& j) {
  try {
    cmaes::CmaesState s;
    s.n = at(j, "n").get<std::size_t>();
    const auto n = static_cast<Eigen::Index>(s.n);
    s.lambda = at(j, "lambda").get<int>();
    s.mu = at(j, "mu").get<int>();
    s.weights = unpack_vector(at(j, "weights"), "weights", static_cast<std::size_t>(s.mu));
    s.mueff = at(j, "mueff").get<double>();
    s.cs = at(j, "cs").get<double>();
    s.damps = at(j, "damps").get<double>();
    s.cc = at(j, "cc").get<double>();
    s.c1 = at(j, "c1").get<double>();
    s.cmu = at(j, "cmu").get<double>();
    s.chi_n = at(j, "chi_n").get<double>();
    s.eigen_interval = at(j, "eigen_interval").get<long>();
    s.mean = unpack_vector(at(j, "mean"), "mean", s.n);
    s.sigma = at(j, "sigma").get<double>();
    const auto upper = unpack(at(j, "cov_upper"), "cov_upper");
    if (upper.size() != static_cast<std::size_t>(n * (n + 1) / 2)) throw CheckpointError("cov_upper: wrong length");
    s.cov.resize(n, n);
    std::size_t k = 0;
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index r = 0; r <= c; ++r) s.cov(r, c) = upper[k++];
    s.cov.triangularView<Eigen::StrictlyLower>() = s.cov.transpose();
    auto basis = unpack(at(j, "basis"), "basis");
    if (basis.size() != static_cast<std::size_t>(n * n)) throw CheckpointError("basis: wrong length");
    s.basis = Eigen::Map<Eigen::MatrixXd>(basis.data(), n, n);
    s.scales = unpack_vector(at(j, "scales"), "scales", s.n);
    s.path_sigma = unpack_vector(at(j, "path_sigma"), "path_sigma", s.n);
    s.path_c = unpack_vector(at(j, "path_c"), "path_c", s.n);
    s.generation = at(j, "generation").get<long>();
    s.evaluations = at(j, "evaluations").get<long>();
    s.eigen_generation = at(j, "eigen_generation").get<long>();
    s.best_fitness = from_finite_or_null(at(j, "best_fitness"));
    s.best_x = unpack(at(j, "best_x"), "best_x");
    return s;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("cmaes state: ") + e.what());
  }
}

}  // namespace seesaw::serial
