#pragma once

#include <cmath>
#include <queue>
#include <span>
#include <vector>

#include "seesaw/neat/genome.hpp"

namespace seesaw::neat {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// A genome compiled for repeated activation.
///
/// Non-input nodes are updated in place, in an order that follows the
/// feed-forward part of the graph: sources that were already updated in this
/// step contribute their fresh value, everything else (recurrent edges,
/// cycles) contributes the value from the previous step. Where a cycle leaves
/// no node with all sources resolved, the smallest remaining id goes next.
class Network {
 public:
  explicit Network(const Genome& g) {
    const std::size_t n = g.nodes.size();
    auto index_of = [&g](NodeId id) {
      auto it = std::lower_bound(g.nodes.begin(), g.nodes.end(), id,
                                 [](const NodeGene& a, NodeId v) { return a.id < v; });
      return static_cast<std::size_t>(it - g.nodes.begin());
    };

    std::vector<std::vector<Edge>> incoming(n);
    std::vector<int> pending(n, 0);
    std::vector<std::vector<std::size_t>> dependents(n);
    for (const auto& c : g.connections) {
      if (!c.enabled) continue;
      const std::size_t src = index_of(c.from), dst = index_of(c.to);
      incoming[dst].push_back({src, c.weight});
      if (g.nodes[src].kind != NodeKind::input && src != dst) {
        ++pending[dst];
        dependents[src].push_back(dst);
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (g.nodes[i].kind == NodeKind::input) inputs_.push_back(i);
      if (g.nodes[i].kind == NodeKind::output) outputs_.push_back(i);
    }

    // Kahn's algorithm over non-input nodes; node indices follow id order,
    // so a min-heap on index gives deterministic tie-breaking.
    std::vector<bool> done(n, false);
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    std::size_t remaining = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (g.nodes[i].kind == NodeKind::input) continue;
      ++remaining;
      if (pending[i] == 0) ready.push(i);
    }
    while (remaining > 0) {
      std::size_t next;
      if (!ready.empty()) {
        next = ready.top();
        ready.pop();
        if (done[next]) continue;
      } else {
        next = n;
        for (std::size_t i = 0; i < n; ++i)
          if (g.nodes[i].kind != NodeKind::input && !done[i]) {
            next = i;
            break;
          }
      }
      done[next] = true;
      --remaining;
      order_.push_back({next, g.nodes[next].bias, std::move(incoming[next])});
      for (std::size_t d : dependents[next])
        if (!done[d] && --pending[d] == 0) ready.push(d);
    }
    values_.assign(n, 0.0);
    out_.assign(outputs_.size(), 0.0);
  }

  std::size_t num_inputs() const { return inputs_.size(); }
  std::size_t num_outputs() const { return outputs_.size(); }

  /// Zero all node values (episode start).
  void reset() { std::fill(values_.begin(), values_.end(), 0.0); }

  std::span<const double> state() const { return values_; }
  void set_state(std::span<const double> s) {
    if (s.size() != values_.size()) throw ShapeMismatch("network state has wrong size");
    std::copy(s.begin(), s.end(), values_.begin());
  }

  /// One synchronous step. The returned span is valid until the next call.
  std::span<const double> activate(std::span<const double> in) {
    if (in.size() != inputs_.size())
      throw ShapeMismatch("expected " + std::to_string(inputs_.size()) + " inputs, got " +
                          std::to_string(in.size()));
    for (std::size_t i = 0; i < in.size(); ++i) values_[inputs_[i]] = in[i];
    for (const auto& node : order_) {
      double sum = node.bias;
      for (const auto& e : node.incoming) sum += e.weight * values_[e.source];
      values_[node.index] = sigmoid(sum);
    }
    for (std::size_t i = 0; i < outputs_.size(); ++i) out_[i] = values_[outputs_[i]];
    return out_;
  }

 private:
  struct Edge {
    std::size_t source;
    double weight;
  };
  struct Step {
    std::size_t index;
    double bias;
    std::vector<Edge> incoming;
  };

  std::vector<std::size_t> inputs_;
  std::vector<std::size_t> outputs_;
  std::vector<Step> order_;
  std::vector<double> values_;
  std::vector<double> out_;
};

/// Stateless convenience form: `state` holds one value per node gene (in
/// genome node order) and is updated in place. Start episodes with zeros.
inline std::vector<double> activate(const Genome& g, std::span<const double> inputs, std::vector<double>& state) {
  Network net(g);
  if (state.empty()) state.assign(g.nodes.size(), 0.0);
  net.set_state(state);
  auto out = net.activate(inputs);
  state.assign(net.state().begin(), net.state().end());
  return {out.begin(), out.end()};
}

}  // namespace seesaw::neat
