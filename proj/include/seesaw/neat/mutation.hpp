#pragma once

#include <vector>

#include "seesaw/neat/genome.hpp"

namespace seesaw::neat {

namespace detail {

inline bool same_io(const Genome& a, const Genome& b) {
  return a.ids_of(NodeKind::input) == b.ids_of(NodeKind::input) &&
         a.ids_of(NodeKind::output) == b.ids_of(NodeKind::output);
}

inline double mutate_value(double v, const NeatConfig& cfg, Rng& rng) {
  const double r = rng.uniform();
  if (r < cfg.weight_mutate_rate) {
    v += rng.normal(0.0, cfg.weight_mutate_power);
  } else if (r < cfg.weight_mutate_rate + cfg.weight_replace_rate) {
    v = rng.uniform(cfg.weight_min, cfg.weight_max);
  }
  return cfg.clamp_weight(v);
}

// True when `to` can already reach `from` over enabled edges, i.e. adding
// from->to would close a cycle.
inline bool creates_cycle(const Genome& g, NodeId from, NodeId to) {
  if (from == to) return true;
  std::vector<NodeId> stack{to};
  std::set<NodeId> visited{to};
  while (!stack.empty()) {
    const NodeId cur = stack.back();
    stack.pop_back();
    for (const auto& c : g.connections) {
      if (!c.enabled || c.from != cur) continue;
      if (c.to == from) return true;
      if (visited.insert(c.to).second) stack.push_back(c.to);
    }
  }
  return false;
}

inline void add_connection(Genome& g, InnovationRegistry& reg, const NeatConfig& cfg, Rng& rng) {
  std::vector<NodeId> targets;
  for (const auto& n : g.nodes)
    if (n.kind != NodeKind::input) targets.push_back(n.id);
  if (targets.empty()) return;
  const NodeId from = g.nodes[rng.below(g.nodes.size())].id;
  const NodeId to = targets[rng.below(targets.size())];
  if (g.find_connection(from, to)) return;
  if (cfg.feed_forward && creates_cycle(g, from, to)) return;
  g.connections.push_back(
      {reg.connection(from, to), from, to, cfg.clamp_weight(rng.normal(0.0, cfg.weight_init_stdev)), true});
  g.sort_genes();
}

inline void delete_connection(Genome& g, Rng& rng) {
  if (g.connections.empty()) return;
  g.connections.erase(g.connections.begin() + static_cast<std::ptrdiff_t>(rng.below(g.connections.size())));
}

inline void add_node(Genome& g, InnovationRegistry& reg, const NeatConfig& cfg, Rng& rng) {
  std::vector<std::size_t> enabled;
  for (std::size_t i = 0; i < g.connections.size(); ++i)
    if (g.connections[i].enabled) enabled.push_back(i);
  if (enabled.empty()) return;
  ConnectionGene& split = g.connections[enabled[rng.below(enabled.size())]];
  split.enabled = false;
  const ConnectionGene old = split;

  NodeId node = reg.split_node(old.innovation);
  // The same split may already be present through crossover; then this is a
  // genuinely new structure and gets an id of its own.
  if (g.has_node(node)) node = reg.fresh_node();

  g.nodes.push_back({node, NodeKind::hidden});
  g.connections.push_back({reg.connection(old.from, node), old.from, node, cfg.clamp_weight(1.0), true});
  g.connections.push_back({reg.connection(node, old.to), node, old.to, old.weight, true});
  g.sort_genes();
}

inline void delete_node(Genome& g, Rng& rng) {
  const auto hidden = g.ids_of(NodeKind::hidden);
  if (hidden.empty()) return;
  const NodeId victim = hidden[rng.below(hidden.size())];
  std::erase_if(g.nodes, [victim](const NodeGene& n) { return n.id == victim; });
  std::erase_if(g.connections, [victim](const ConnectionGene& c) { return c.from == victim || c.to == victim; });
}

}  // namespace detail

/// Perturb (rate), replace (replace rate) or keep each weight and non-input
/// bias independently; everything is clamped to the weight range.
inline Genome mutate_weights(const Genome& g, const NeatConfig& cfg, Rng& rng) {
  Genome out = g;
  for (auto& c : out.connections) c.weight = detail::mutate_value(c.weight, cfg, rng);
  for (auto& n : out.nodes)
    if (n.kind != NodeKind::input) n.bias = detail::mutate_value(n.bias, cfg, rng);
  out.fitness.reset();
  return out;
}

/// Independent Bernoulli trials for add-node, delete-node, add-connection and
/// delete-connection, in that order. Attempts that cannot apply are no-ops.
inline Genome mutate_structural(const Genome& g, InnovationRegistry& reg, const NeatConfig& cfg, Rng& rng) {
  Genome out = g;
  if (rng.bernoulli(cfg.node_add_prob)) detail::add_node(out, reg, cfg, rng);
  if (rng.bernoulli(cfg.node_delete_prob)) detail::delete_node(out, rng);
  if (rng.bernoulli(cfg.conn_add_prob)) detail::add_connection(out, reg, cfg, rng);
  if (rng.bernoulli(cfg.conn_delete_prob)) detail::delete_connection(out, rng);
  out.fitness.reset();
  return out;
}

/// Matching genes come from either parent with equal probability; disjoint and
/// excess genes (and the node set) come from the fitter parent, parent_a on ties.
inline Genome crossover(const Genome& parent_a, const Genome& parent_b, Rng& rng) {
  if (!detail::same_io(parent_a, parent_b)) throw IncompatibleIO("parents have different input/output nodes");
  const double fa = parent_a.fitness.value_or(0.0);
  const double fb = parent_b.fitness.value_or(0.0);
  const bool a_fitter = fa >= fb;
  const Genome& fit = a_fitter ? parent_a : parent_b;
  const Genome& other = a_fitter ? parent_b : parent_a;

  Genome child;
  child.nodes.reserve(fit.nodes.size());
  for (const auto& n : fit.nodes) {
    const NodeGene* m = other.find_node(n.id);
    child.nodes.push_back((m && rng.bernoulli(0.5)) ? *m : n);
  }

  child.connections.reserve(fit.connections.size());
  std::size_t j = 0;
  const auto& oc = other.connections;
  for (const auto& c : fit.connections) {
    while (j < oc.size() && oc[j].innovation < c.innovation) ++j;
    const bool match = j < oc.size() && oc[j].innovation == c.innovation;
    child.connections.push_back((match && rng.bernoulli(0.5)) ? oc[j] : c);
  }
  return child;
}

}  // namespace seesaw::neat
