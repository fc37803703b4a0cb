#pragma once

#include <string>

#include "seesaw/error.hpp"

namespace seesaw::neat {

/// NEAT hyperparameters. Defaults reproduce the Atari policy-learning setup
/// (population 64, sigmoid/sum nodes, recurrent networks allowed).
struct NeatConfig {
  int population_size = 64;
  std::string fitness_criterion = "max";
  bool reset_on_extinction = true;
  std::string activation = "sigmoid";
  std::string aggregation = "sum";

  double compatibility_disjoint_coefficient = 1.0;
  double compatibility_weight_coefficient = 0.4;
  double compatibility_threshold = 3.0;
  /// Divide the disjoint/excess count by the larger genome size instead of 1.
  bool compatibility_normalize = false;

  double conn_add_prob = 0.05;
  double conn_delete_prob = 0.05;
  double node_add_prob = 0.03;
  double node_delete_prob = 0.03;
  bool feed_forward = false;

  double weight_min = -30.0;
  double weight_max = 30.0;
  double weight_mutate_power = 0.05;
  double weight_mutate_rate = 0.8;
  double weight_replace_rate = 0.1;
  /// Std. dev. of fresh weights/biases (initial population, added connections).
  double weight_init_stdev = 1.0;

  int max_stagnation = 15;
  int species_elitism = 2;
  int elitism_threshold = 5;
  double survival_threshold = 0.2;

  // Network shape; the pipeline sets these from the attention k and the env.
  int num_inputs = 20;
  int num_outputs = 5;

  double clamp_weight(double w) const {
    return w < weight_min ? weight_min : (w > weight_max ? weight_max : w);
  }

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw BadConfig(std::string(name) + " must be in [0, 1]");
    };
    prob(conn_add_prob, "conn_add_prob");
    prob(conn_delete_prob, "conn_delete_prob");
    prob(node_add_prob, "node_add_prob");
    prob(node_delete_prob, "node_delete_prob");
    prob(weight_mutate_rate, "weight_mutate_rate");
    prob(weight_replace_rate, "weight_replace_rate");
    prob(survival_threshold, "survival_threshold");
    if (weight_mutate_rate + weight_replace_rate > 1.0 + 1e-12)
      throw BadConfig("weight_mutate_rate + weight_replace_rate exceeds 1");
    if (population_size < 2) throw BadConfig("population_size must be >= 2");
    if (fitness_criterion != "max") throw BadConfig("fitness_criterion must be 'max'");
    if (activation != "sigmoid") throw BadConfig("activation must be 'sigmoid'");
    if (aggregation != "sum") throw BadConfig("aggregation must be 'sum'");
    if (!(weight_min < weight_max)) throw BadConfig("weight_min must be < weight_max");
    if (weight_mutate_power < 0.0 || weight_init_stdev < 0.0)
      throw BadConfig("mutation power and init stdev must be nonnegative");
    if (compatibility_threshold <= 0.0) throw BadConfig("compatibility_threshold must be > 0");
    if (max_stagnation < 1 || species_elitism < 0 || elitism_threshold < 1)
      throw BadConfig("stagnation/elitism settings out of range");
    if (num_inputs < 1 || num_outputs < 1) throw BadConfig("network needs inputs and outputs");
  }
};

}  // namespace seesaw::neat
