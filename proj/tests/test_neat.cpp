#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "seesaw/neat/genome.hpp"
#include "seesaw/neat/mutation.hpp"
#include "seesaw/neat/network.hpp"
#include "test_util.hpp"

using namespace seesaw;
using namespace seesaw::neat;
using seesaw::testing::make_genome;

namespace {

// Independent distance: align by innovation through maps.
double oracle_distance(const Genome& a, const Genome& b, double c1, double c3) {
  std::map<Innovation, double> wa, wb;
  for (const auto& c : a.connections) wa[c.innovation] = c.weight;
  for (const auto& c : b.connections) wb[c.innovation] = c.weight;
  int unmatched = 0, matched = 0;
  double diff = 0;
  for (const auto& [k, w] : wa) {
    auto it = wb.find(k);
    if (it == wb.end()) ++unmatched;
    else ++matched, diff += std::fabs(w - it->second);
  }
  for (const auto& [k, w] : wb)
    if (!wa.count(k)) ++unmatched;
  return c1 * unmatched + c3 * (matched ? diff / matched : 0.0);
}

NeatConfig small_config(int in = 3, int out = 2) {
  NeatConfig c;
  c.num_inputs = in;
  c.num_outputs = out;
  return c;
}

// Random genome grown from a shared registry by structural mutation.
Genome grown(const NeatConfig& cfg, InnovationRegistry& reg, Rng& rng, int rounds) {
  NeatConfig hot = cfg;
  hot.node_add_prob = 0.4;
  hot.conn_add_prob = 0.6;
  hot.node_delete_prob = 0.1;
  hot.conn_delete_prob = 0.1;
  Genome g = make_initial_genome(cfg, reg, rng);
  for (int r = 0; r < rounds; ++r) {
    g = mutate_structural(g, reg, hot, rng);
    g = mutate_weights(g, hot, rng);
  }
  return g;
}

}  // namespace

TEST(NeatConfig, DefaultsMatchHyperparameterTable) {
  NeatConfig c;
  EXPECT_EQ(c.population_size, 64);
  EXPECT_EQ(c.fitness_criterion, "max");
  EXPECT_TRUE(c.reset_on_extinction);
  EXPECT_EQ(c.activation, "sigmoid");
  EXPECT_EQ(c.aggregation, "sum");
  EXPECT_EQ(c.compatibility_disjoint_coefficient, 1.0);
  EXPECT_EQ(c.compatibility_weight_coefficient, 0.4);
  EXPECT_EQ(c.compatibility_threshold, 3.0);
  EXPECT_EQ(c.conn_add_prob, 0.05);
  EXPECT_EQ(c.conn_delete_prob, 0.05);
  EXPECT_EQ(c.node_add_prob, 0.03);
  EXPECT_EQ(c.node_delete_prob, 0.03);
  EXPECT_FALSE(c.feed_forward);
  EXPECT_EQ(c.weight_min, -30.0);
  EXPECT_EQ(c.weight_max, 30.0);
  EXPECT_EQ(c.weight_mutate_power, 0.05);
  EXPECT_EQ(c.weight_mutate_rate, 0.8);
  EXPECT_EQ(c.weight_replace_rate, 0.1);
  EXPECT_EQ(c.max_stagnation, 15);
  EXPECT_EQ(c.species_elitism, 2);
  EXPECT_EQ(c.elitism_threshold, 5);
  EXPECT_EQ(c.survival_threshold, 0.2);
  EXPECT_NO_THROW(c.validate());
}

TEST(NeatConfig, RejectsOutOfRangeValues) {
  NeatConfig c;
  c.conn_add_prob = 1.5;
  EXPECT_THROW(c.validate(), BadConfig);
  c = NeatConfig{};
  c.population_size = 1;
  EXPECT_THROW(c.validate(), BadConfig);
}

TEST(Distance, IdenticalGenomesAreZero) {
  const auto g = make_genome(2, 1, {{1, 0, 2, 0.5}, {2, 1, 2, -1.0}});
  EXPECT_EQ(compatibility_distance(g, g, NeatConfig{}), 0.0);
}

TEST(Distance, OneDisjointOneExcess) {
  const auto a = make_genome(3, 1, {{1, 0, 3, 1.0}, {2, 1, 3, 1.0}, {3, 2, 3, 1.0}});
  auto b = make_genome(3, 1, {{1, 0, 3, 1.0}, {2, 1, 3, 1.0}, {4, 4, 3, 1.0}}, 1);
  const double frozen = 2.0;
  EXPECT_DOUBLE_EQ(oracle_distance(a, b, 1.0, 0.4), frozen);
  EXPECT_DOUBLE_EQ(compatibility_distance(a, b, NeatConfig{}), frozen);
}

TEST(Distance, MeanWeightDifference) {
  const auto a = make_genome(2, 1, {{1, 0, 2, 1.0}, {2, 1, 2, 2.0}});
  const auto b = make_genome(2, 1, {{1, 0, 2, 2.0}, {2, 1, 2, 4.0}});
  const double frozen = 0.6;
  EXPECT_NEAR(oracle_distance(a, b, 1.0, 0.4), frozen, 1e-15);
  EXPECT_NEAR(compatibility_distance(a, b, NeatConfig{}), frozen, 1e-15);
}

TEST(Distance, MatchesOracleAndIsSymmetricOnRandomPairs) {
  const auto cfg = small_config();
  InnovationRegistry reg = make_registry(cfg);
  Rng rng(11);
  std::vector<Genome> pool;
  for (int i = 0; i < 60; ++i) pool.push_back(grown(cfg, reg, rng, 1 + i % 12));
  int cases = 0;
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i; j < pool.size(); ++j, ++cases) {
      const double d = compatibility_distance(pool[i], pool[j], cfg);
      EXPECT_NEAR(d, oracle_distance(pool[i], pool[j], 1.0, 0.4), 1e-12);
      EXPECT_EQ(d, compatibility_distance(pool[j], pool[i], cfg));
      if (i == j) EXPECT_EQ(d, 0.0);
    }
  EXPECT_GE(cases, 1000);
}

TEST(Crossover, IdenticalParentsGiveSameGenome) {
  const auto cfg = small_config();
  InnovationRegistry reg = make_registry(cfg);
  Rng rng(3);
  const Genome g = grown(cfg, reg, rng, 8);
  for (int s = 0; s < 20; ++s) {
    Rng r(s);
    EXPECT_TRUE(crossover(g, g, r).same_genes(g));
  }
}

TEST(Crossover, MatchingOnlyParentsKeepSharedInnovations) {
  const auto a = make_genome(2, 1, {{1, 0, 2, 1.0}, {2, 1, 2, 2.0}});
  const auto b = make_genome(2, 1, {{1, 0, 2, -1.0}, {2, 1, 2, -2.0}});
  std::set<double> seen;
  for (int s = 0; s < 64; ++s) {
    Rng r(s);
    const auto c = crossover(a, b, r);
    ASSERT_EQ(c.connections.size(), 2u);
    EXPECT_EQ(c.connections[0].innovation, 1);
    EXPECT_EQ(c.connections[1].innovation, 2);
    seen.insert(c.connections[0].weight);
  }
  EXPECT_EQ(seen, (std::set<double>{-1.0, 1.0}));
}

TEST(Crossover, ExtraGenesFollowTheFitterParent) {
  // parent_a has innovation 7 (a hidden split), parent_b does not.
  auto a = make_genome(2, 1, {{1, 0, 2, 1.0}, {2, 1, 2, 2.0}, {7, 0, 3, 0.5}, {8, 3, 2, 0.7}}, 1);
  auto b = make_genome(2, 1, {{1, 0, 2, 3.0}, {2, 1, 2, 4.0}});
  // Oracle: enumerate draws (seeds) and check the inheritance rule.
  for (int s = 0; s < 256; ++s) {
    a.fitness = 2.0, b.fitness = 1.0;
    Rng r1(s);
    auto child = crossover(a, b, r1);
    EXPECT_NE(child.find_connection(0, 3), nullptr);
    EXPECT_FALSE(check_genome(child).has_value());

    a.fitness = 1.0, b.fitness = 2.0;
    Rng r2(s);
    child = crossover(a, b, r2);
    EXPECT_EQ(child.find_connection(0, 3), nullptr);
    EXPECT_EQ(child.num_hidden(), 0u);

    a.fitness = b.fitness = 1.0;
    Rng r3(s);
    EXPECT_NE(crossover(a, b, r3).find_connection(0, 3), nullptr);
  }
}

TEST(Crossover, RejectsDifferentIo) {
  const auto a = make_genome(2, 1, {{1, 0, 2, 1.0}});
  const auto b = make_genome(3, 1, {{1, 0, 3, 1.0}});
  Rng r(1);
  EXPECT_THROW(crossover(a, b, r), IncompatibleIO);
}

TEST(Innovation, PairsKeepTheirNumberAndSplitsRepeatWithinAGeneration) {
  InnovationRegistry reg(10, 1);
  const auto i1 = reg.connection(0, 5);
  EXPECT_EQ(reg.connection(0, 5), i1);
  EXPECT_NE(reg.connection(5, 0), i1);
  EXPECT_EQ(reg.split_node(i1), reg.split_node(i1));
  const auto n = reg.split_node(i1);
  reg.new_generation();
  EXPECT_NE(reg.split_node(i1), n);
  EXPECT_EQ(reg.connection(0, 5), i1);
}

TEST(Innovation, SameEdgeAddedByTwoGenomesSharesNumber) {
  const auto cfg = small_config(2, 1);
  InnovationRegistry reg = make_registry(cfg);
  Rng rng(5);
  Genome a = make_initial_genome(cfg, reg, rng), b = make_initial_genome(cfg, reg, rng);
  Rng ra(1), rb(1);
  detail::add_node(a, reg, cfg, ra);
  detail::add_node(b, reg, cfg, rb);
  EXPECT_EQ(a.nodes.back().id, b.nodes.back().id);
  ASSERT_EQ(a.connections.size(), b.connections.size());
  for (std::size_t i = 0; i < a.connections.size(); ++i)
    EXPECT_EQ(a.connections[i].innovation, b.connections[i].innovation);
}

TEST(Innovation, NumbersAreUniquePerPairAcrossARun) {
  const auto cfg = small_config();
  InnovationRegistry reg = make_registry(cfg);
  Rng rng(21);
  std::map<Innovation, std::pair<NodeId, NodeId>> by_number;
  int genes = 0;
  for (int i = 0; i < 200; ++i) {
    if (i % 10 == 0) reg.new_generation();
    const Genome g = grown(cfg, reg, rng, 6);
    for (const auto& c : g.connections) {
      auto [it, fresh] = by_number.emplace(c.innovation, std::make_pair(c.from, c.to));
      EXPECT_EQ(it->second, std::make_pair(c.from, c.to));
      ++genes;
    }
  }
  std::set<std::pair<NodeId, NodeId>> pairs;
  for (const auto& [k, p] : by_number) EXPECT_TRUE(pairs.insert(p).second);
  EXPECT_GT(genes, 1000);
}

TEST(Mutation, ZeroProbabilitiesLeaveGenomeUnchanged) {
  auto cfg = small_config();
  cfg.conn_add_prob = cfg.conn_delete_prob = cfg.node_add_prob = cfg.node_delete_prob = 0.0;
  cfg.weight_mutate_rate = cfg.weight_replace_rate = 0.0;
  InnovationRegistry reg = make_registry(cfg);
  Rng rng(8);
  const Genome g = make_initial_genome(cfg, reg, rng);
  for (int i = 0; i < 50; ++i) {
    EXPECT_TRUE(mutate_structural(g, reg, cfg, rng).same_genes(g));
    EXPECT_TRUE(mutate_weights(g, cfg, rng).same_genes(g));
  }
}

TEST(Mutation, AddNodeSplitsTheOnlyConnection) {
  auto g = make_genome(1, 1, {{1, 0, 1, -0.75}});
  InnovationRegistry reg(2, 2);
  Rng rng(1);
  detail::add_node(g, reg, NeatConfig{}, rng);
  ASSERT_EQ(g.connections.size(), 3u);
  const NodeId h = 2;
  EXPECT_FALSE(g.connections[0].enabled);
  EXPECT_EQ(g.find_connection(0, h)->weight, 1.0);
  EXPECT_EQ(g.find_connection(h, 1)->weight, -0.75);
  EXPECT_TRUE(g.find_connection(0, h)->enabled);
  EXPECT_EQ(g.find_node(h)->kind, NodeKind::hidden);
  EXPECT_FALSE(check_genome(g).has_value());
}

TEST(Mutation, DeleteNodeRemovesIncidentConnections) {
  auto g = make_genome(1, 1, {{1, 0, 1, 0.5}, {2, 0, 2, 1.0}, {3, 2, 1, 1.0}, {4, 2, 2, 0.3}}, 1);
  Rng rng(1);
  detail::delete_node(g, rng);
  EXPECT_EQ(g.num_hidden(), 0u);
  ASSERT_EQ(g.connections.size(), 1u);
  EXPECT_EQ(g.connections[0].innovation, 1);
  // Nothing to delete any more: no-op.
  detail::delete_node(g, rng);
  EXPECT_EQ(g.nodes.size(), 2u);
}

TEST(Mutation, PerturbationStdMatchesPower) {
  NeatConfig cfg;
  cfg.weight_mutate_rate = 1.0;
  cfg.weight_replace_rate = 0.0;
  Rng rng(2024);
  const int n = 100000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double d = detail::mutate_value(0.0, cfg, rng);
    sum += d, sq += d * d;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(sd, 0.05, 0.002);
}

TEST(Mutation, ClampHoldsAtTheBoundary) {
  NeatConfig cfg;
  cfg.weight_mutate_rate = 1.0;
  cfg.weight_replace_rate = 0.0;
  Rng rng(4);
  int at_max = 0;
  for (int i = 0; i < 1000; ++i) {
    const double v = detail::mutate_value(30.0, cfg, rng);
    EXPECT_LE(v, 30.0);
    if (v == 30.0) ++at_max;
  }
  EXPECT_GT(at_max, 400);
}

TEST(Mutation, OperatorFuzzKeepsInvariants) {
  auto cfg = small_config(4, 3);
  cfg.weight_replace_rate = 0.2;
  cfg.weight_mutate_power = 5.0;
  InnovationRegistry reg = make_registry(cfg);
  Rng rng(99);
  std::vector<Genome> pop;
  for (int i = 0; i < 10; ++i) pop.push_back(make_initial_genome(cfg, reg, rng));
  for (int step = 0; step < 1000; ++step) {
    if (step % 50 == 0) reg.new_generation();
    Genome& a = pop[rng.below(pop.size())];
    const Genome& b = pop[rng.below(pop.size())];
    a.fitness = rng.uniform();
    Genome child = crossover(a, b, rng);
    NeatConfig hot = cfg;
    hot.node_add_prob = hot.conn_add_prob = 0.5;
    hot.node_delete_prob = hot.conn_delete_prob = 0.2;
    child = mutate_structural(mutate_weights(child, hot, rng), reg, hot, rng);
    const auto err = check_genome(child, &cfg);
    ASSERT_FALSE(err.has_value()) << *err;
    pop[rng.below(pop.size())] = child;
  }
}

TEST(WeightVector, CountsEnabledConnectionsAndNonInputBiases) {
  // 3 enabled + 1 disabled connection, 2 hidden nodes, 1 output.
  auto g = make_genome(2, 1, {{1, 0, 2, 0.1}, {2, 0, 3, 0.2}, {3, 3, 4, 0.3}, {4, 4, 2, 0.4}}, 2);
  g.connections[0].enabled = false;
  const std::size_t oracle = 3 + (2 + 1);
  EXPECT_EQ(weight_vector_size(g), oracle);
  const auto v = extract_weight_vector(g);
  ASSERT_EQ(v.size(), oracle);
  EXPECT_EQ(v[0], 0.2);
  EXPECT_EQ(v[2], 0.4);
}

TEST(WeightVector, RoundTripAndClamp) {
  const auto cfg = small_config();
  InnovationRegistry reg = make_registry(cfg);
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    const Genome g = grown(cfg, reg, rng, 10);
    auto v = extract_weight_vector(g);
    EXPECT_TRUE(apply_weight_vector(g, v, cfg).same_genes(g));
    v[0] = 99.0;
    EXPECT_EQ(extract_weight_vector(apply_weight_vector(g, v, cfg))[0], 30.0);
    v.push_back(0.0);
    EXPECT_THROW(apply_weight_vector(g, v, cfg), LengthMismatch);
  }
}
