#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seesaw/error.hpp"
#include "seesaw/neat/config.hpp"
#include "seesaw/rng.hpp"

namespace seesaw::neat {

using NodeId = std::int32_t;
using Innovation = std::int64_t;

enum class NodeKind { input, output, hidden };
enum class Activation { sigmoid };
enum class Aggregation { sum };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::input: return "input";
    case NodeKind::output: return "output";
    case NodeKind::hidden: return "hidden";
  }
  return "?";
}

struct NodeGene {
  NodeId id = 0;
  NodeKind kind = NodeKind::hidden;
  Activation activation = Activation::sigmoid;
  Aggregation aggregation = Aggregation::sum;
  double bias = 0.0;

  bool operator==(const NodeGene&) const = default;
};

struct ConnectionGene {
  Innovation innovation = 0;
  NodeId from = 0;
  NodeId to = 0;
  double weight = 0.0;
  bool enabled = true;

  bool operator==(const ConnectionGene&) const = default;
};

/// A NEAT individual. `nodes` is kept sorted by id and `connections` by
/// innovation number; every operator preserves both orderings.
struct Genome {
  std::vector<NodeGene> nodes;
  std::vector<ConnectionGene> connections;
  std::optional<double> fitness;

  const NodeGene* find_node(NodeId id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const NodeGene& n, NodeId v) { return n.id < v; });
    return (it != nodes.end() && it->id == id) ? &*it : nullptr;
  }

  bool has_node(NodeId id) const { return find_node(id) != nullptr; }

  const ConnectionGene* find_connection(NodeId from, NodeId to) const {
    for (const auto& c : connections)
      if (c.from == from && c.to == to) return &c;
    return nullptr;
  }

  std::size_t count(NodeKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [kind](const NodeGene& n) { return n.kind == kind; }));
  }

  std::size_t num_inputs() const { return count(NodeKind::input); }
  std::size_t num_outputs() const { return count(NodeKind::output); }
  std::size_t num_hidden() const { return count(NodeKind::hidden); }

  std::size_t num_enabled() const {
    return static_cast<std::size_t>(std::count_if(connections.begin(), connections.end(),
                                                  [](const ConnectionGene& c) { return c.enabled; }));
  }

  std::vector<NodeId> ids_of(NodeKind kind) const {
    std::vector<NodeId> out;
    for (const auto& n : nodes)
      if (n.kind == kind) out.push_back(n.id);
    return out;
  }

  void sort_genes() {
    std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::sort(connections.begin(), connections.end(),
              [](const auto& a, const auto& b) { return a.innovation < b.innovation; });
  }

  /// Structural and parametric equality; fitness is not compared.
  bool same_genes(const Genome& o) const { return nodes == o.nodes && connections == o.connections; }
};

/// Historical markings shared by a whole run.
///
/// A (from, to) pair keeps the innovation number it was first given for the
/// lifetime of the registry. Node splits are remembered for one generation,
/// so two genomes splitting the same connection in the same generation get
/// the same new node (and hence the same two new innovations).
class InnovationRegistry {
 public:
  InnovationRegistry() = default;
  InnovationRegistry(NodeId next_node, Innovation next_innovation = 1)
      : next_node_(next_node), next_innovation_(next_innovation) {}

  Innovation connection(NodeId from, NodeId to) {
    auto [it, inserted] = pairs_.try_emplace({from, to}, next_innovation_);
    if (inserted) ++next_innovation_;
    return it->second;
  }

  std::optional<Innovation> lookup(NodeId from, NodeId to) const {
    auto it = pairs_.find({from, to});
    if (it == pairs_.end()) return std::nullopt;
    return it->second;
  }

  NodeId split_node(Innovation split) {
    auto [it, inserted] = splits_.try_emplace(split, next_node_);
    if (inserted) ++next_node_;
    return it->second;
  }

  NodeId fresh_node() { return next_node_++; }

  /// Forget this generation's node splits. Connection innovations persist.
  void new_generation() { splits_.clear(); }

  NodeId next_node() const { return next_node_; }
  Innovation next_innovation() const { return next_innovation_; }
  const std::map<std::pair<NodeId, NodeId>, Innovation>& pairs() const { return pairs_; }
  const std::map<Innovation, NodeId>& splits() const { return splits_; }

  static InnovationRegistry restore(NodeId next_node, Innovation next_innovation,
                                    std::map<std::pair<NodeId, NodeId>, Innovation> pairs,
                                    std::map<Innovation, NodeId> splits) {
    InnovationRegistry r(next_node, next_innovation);
    r.pairs_ = std::move(pairs);
    r.splits_ = std::move(splits);
    return r;
  }

  bool operator==(const InnovationRegistry&) const = default;

 private:
  NodeId next_node_ = 0;
  Innovation next_innovation_ = 1;
  std::map<std::pair<NodeId, NodeId>, Innovation> pairs_;
  std::map<Innovation, NodeId> splits_;
};

/// Registry for networks with the given IO shape: inputs take ids
/// [0, n_in), outputs [n_in, n_in + n_out), hidden nodes come after.
inline InnovationRegistry make_registry(const NeatConfig& cfg) {
  return InnovationRegistry(cfg.num_inputs + cfg.num_outputs, 1);
}

/// Fully connected input->output genome with N(0, init_stdev) weights and biases.
inline Genome make_initial_genome(const NeatConfig& cfg, InnovationRegistry& reg, Rng& rng) {
  Genome g;
  for (NodeId i = 0; i < cfg.num_inputs; ++i) g.nodes.push_back({i, NodeKind::input});
  for (NodeId o = 0; o < cfg.num_outputs; ++o) {
    NodeGene n{cfg.num_inputs + o, NodeKind::output};
    n.bias = cfg.clamp_weight(rng.normal(0.0, cfg.weight_init_stdev));
    g.nodes.push_back(n);
  }
  for (NodeId i = 0; i < cfg.num_inputs; ++i) {
    for (NodeId o = 0; o < cfg.num_outputs; ++o) {
      const NodeId to = cfg.num_inputs + o;
      g.connections.push_back(
          {reg.connection(i, to), i, to, cfg.clamp_weight(rng.normal(0.0, cfg.weight_init_stdev)), true});
    }
  }
  g.sort_genes();
  return g;
}

/// Checks every structural invariant; returns a description of the first
/// violation, or nothing when the genome is well formed.
inline std::optional<std::string> check_genome(const Genome& g, const NeatConfig* cfg = nullptr) {
  for (std::size_t i = 1; i < g.nodes.size(); ++i)
    if (!(g.nodes[i - 1].id < g.nodes[i].id)) return "node ids not unique/sorted";
  for (std::size_t i = 1; i < g.connections.size(); ++i)
    if (!(g.connections[i - 1].innovation < g.connections[i].innovation))
      return "innovations not unique/sorted";
  std::set<std::pair<NodeId, NodeId>> seen;
  for (const auto& c : g.connections) {
    const NodeGene* from = g.find_node(c.from);
    const NodeGene* to = g.find_node(c.to);
    if (!from || !to) return "connection " + std::to_string(c.innovation) + " references a missing node";
    if (to->kind == NodeKind::input) return "input node " + std::to_string(to->id) + " has an incoming connection";
    if (!seen.insert({c.from, c.to}).second) return "duplicate connection";
    if (!std::isfinite(c.weight)) return "non-finite weight";
    if (cfg && (c.weight < cfg->weight_min || c.weight > cfg->weight_max)) return "weight out of range";
  }
  for (const auto& n : g.nodes) {
    if (!std::isfinite(n.bias)) return "non-finite bias";
    if (cfg && (n.bias < cfg->weight_min || n.bias > cfg->weight_max)) return "bias out of range";
  }
  if (cfg) {
    if (g.num_inputs() != static_cast<std::size_t>(cfg->num_inputs) ||
        g.num_outputs() != static_cast<std::size_t>(cfg->num_outputs))
      return "input/output counts do not match config";
  }
  return std::nullopt;
}

/// NEAT compatibility distance: c1 * (disjoint + excess) / N + c3 * mean |dw|
/// over matching innovations. Only connection genes are aligned.
inline double compatibility_distance(const Genome& a, const Genome& b, const NeatConfig& cfg) {
  std::size_t i = 0, j = 0, unmatched = 0, matched = 0;
  double weight_diff = 0.0;
  const auto& ca = a.connections;
  const auto& cb = b.connections;
  while (i < ca.size() && j < cb.size()) {
    if (ca[i].innovation == cb[j].innovation) {
      weight_diff += std::abs(ca[i].weight - cb[j].weight);
      ++matched, ++i, ++j;
    } else if (ca[i].innovation < cb[j].innovation) {
      ++unmatched, ++i;
    } else {
      ++unmatched, ++j;
    }
  }
  unmatched += (ca.size() - i) + (cb.size() - j);
  double n = 1.0;
  if (cfg.compatibility_normalize) n = std::max<double>(1.0, static_cast<double>(std::max(ca.size(), cb.size())));
  const double mean_diff = matched ? weight_diff / static_cast<double>(matched) : 0.0;
  return cfg.compatibility_disjoint_coefficient * static_cast<double>(unmatched) / n +
         cfg.compatibility_weight_coefficient * mean_diff;
}

// Weight vectors: enabled connection weights by innovation, then the biases
// of non-input nodes by id. Disabled genes are not part of the tuned network.

inline std::size_t weight_vector_size(const Genome& g) {
  return g.num_enabled() + g.nodes.size() - g.num_inputs();
}

inline std::vector<double> extract_weight_vector(const Genome& g) {
  std::vector<double> v;
  v.reserve(weight_vector_size(g));
  for (const auto& c : g.connections)
    if (c.enabled) v.push_back(c.weight);
  for (const auto& n : g.nodes)
    if (n.kind != NodeKind::input) v.push_back(n.bias);
  return v;
}

inline Genome apply_weight_vector(const Genome& g, std::span<const double> v, const NeatConfig& cfg) {
  if (v.size() != weight_vector_size(g))
    throw LengthMismatch("weight vector has " + std::to_string(v.size()) + " entries, genome needs " +
                         std::to_string(weight_vector_size(g)));
  Genome out = g;
  std::size_t k = 0;
  for (auto& c : out.connections)
    if (c.enabled) c.weight = cfg.clamp_weight(v[k++]);
  for (auto& n : out.nodes)
    if (n.kind != NodeKind::input) n.bias = cfg.clamp_weight(v[k++]);
  out.fitness.reset();
  return out;
}

}  // namespace seesaw::neat
