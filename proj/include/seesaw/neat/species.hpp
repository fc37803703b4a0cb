#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "seesaw/neat/mutation.hpp"

namespace seesaw::neat {

struct Species {
  int id = 0;
  Genome representative;
  /// Indices into the population this species was built from.
  std::vector<std::size_t> members;
  double best_fitness = -std::numeric_limits<double>::infinity();
  int stagnation = 0;
};

struct SpeciesSet {
  std::vector<Species> species;
  int next_id = 1;
};

inline std::vector<Genome> make_initial_population(const NeatConfig& cfg, InnovationRegistry& reg, Rng& rng) {
  std::vector<Genome> pop;
  pop.reserve(static_cast<std::size_t>(cfg.population_size));
  for (int i = 0; i < cfg.population_size; ++i) pop.push_back(make_initial_genome(cfg, reg, rng));
  return pop;
}

/// Drops species stagnant for max_stagnation generations or more, except the
/// `species_elitism` species with the highest best fitness.
inline void remove_stagnant(std::vector<Species>& species, const NeatConfig& cfg) {
  std::vector<std::size_t> rank(species.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    return species[a].best_fitness > species[b].best_fitness;
  });
  std::vector<bool> keep(species.size(), true);
  for (std::size_t r = 0; r < rank.size(); ++r) {
    const auto& s = species[rank[r]];
    if (r >= static_cast<std::size_t>(cfg.species_elitism) && s.stagnation >= cfg.max_stagnation)
      keep[rank[r]] = false;
  }
  std::vector<Species> kept;
  for (std::size_t i = 0; i < species.size(); ++i)
    if (keep[i]) kept.push_back(std::move(species[i]));
  species = std::move(kept);
}

/// Assigns each genome to the first species whose representative is within
/// the compatibility threshold, founding a new species otherwise; then
/// refreshes representatives and stagnation counters and culls stagnant species.
inline SpeciesSet speciate(std::span<const Genome> pop, const SpeciesSet& prev, const NeatConfig& cfg) {
  SpeciesSet out;
  out.next_id = prev.next_id;
  for (const auto& s : prev.species) {
    Species fresh = s;
    fresh.members.clear();
    out.species.push_back(std::move(fresh));
  }

  for (std::size_t i = 0; i < pop.size(); ++i) {
    bool placed = false;
    for (auto& s : out.species) {
      if (compatibility_distance(s.representative, pop[i], cfg) < cfg.compatibility_threshold) {
        s.members.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) {
      Species s;
      s.id = out.next_id++;
      s.representative = pop[i];
      s.representative.fitness.reset();
      s.members.push_back(i);
      out.species.push_back(std::move(s));
    }
  }
  std::erase_if(out.species, [](const Species& s) { return s.members.empty(); });

  for (auto& s : out.species) {
    // New representative: the member closest to the old one.
    std::size_t pick = s.members.front();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m : s.members) {
      const double d = compatibility_distance(s.representative, pop[m], cfg);
      if (d < best) best = d, pick = m;
    }
    const bool is_new = !std::isfinite(s.best_fitness);
    s.representative = pop[pick];
    s.representative.fitness.reset();

    bool evaluated = true;
    double fitness = -std::numeric_limits<double>::infinity();
    for (std::size_t m : s.members) {
      if (!pop[m].fitness) evaluated = false;
      else fitness = std::max(fitness, *pop[m].fitness);
    }
    if (!evaluated) continue;
    if (is_new || fitness > s.best_fitness) {
      s.best_fitness = fitness;
      s.stagnation = 0;
    } else {
      ++s.stagnation;
    }
  }
  remove_stagnant(out.species, cfg);
  return out;
}

/// Splits `total` offspring between species in proportion to `shares`
/// (largest remainder, ties to the lower species index). Species flagged in
/// `needs_seat` (those with an elite to carry over) are guaranteed one seat.
inline std::vector<std::size_t> offspring_quotas(std::span<const double> shares, const std::vector<bool>& needs_seat,
                                                 std::size_t total) {
  const std::size_t n = shares.size();
  std::vector<std::size_t> quota(n, 0);
  if (n == 0) return quota;
  double sum = 0.0;
  for (double s : shares) sum += std::max(0.0, s);

  std::vector<double> exact(n);
  for (std::size_t i = 0; i < n; ++i)
    exact[i] = sum > 0.0 ? static_cast<double>(total) * std::max(0.0, shares[i]) / sum
                         : static_cast<double>(total) / static_cast<double>(n);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    quota[i] = static_cast<std::size_t>(std::floor(exact[i]));
    assigned += quota[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return exact[a] - std::floor(exact[a]) > exact[b] - std::floor(exact[b]);
  });
  for (std::size_t r = 0; assigned < total; r = (r + 1) % n, ++assigned) ++quota[order[r]];

  for (std::size_t i = 0; i < n; ++i) {
    if (!needs_seat[i] || quota[i] > 0) continue;
    // Take the seat from the species with the largest quota that can spare one.
    std::size_t donor = n;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t floor_j = needs_seat[j] ? 1 : 0;
      if (quota[j] > floor_j && (donor == n || quota[j] > quota[donor])) donor = j;
    }
    if (donor == n) break;
    --quota[donor];
    ++quota[i];
  }
  return quota;
}

/// Produces the next population from the speciated, evaluated population.
///
/// Species shares are their mean adjusted fitness (member fitness shifted to
/// the population minimum and scaled by the population range, then averaged
/// over the species). Only the top `survival_threshold` of each species
/// breeds; species with at least `elitism_threshold` members carry their
/// champion over unchanged.
inline std::vector<Genome> next_generation(const SpeciesSet& species, std::span<const Genome> pop,
                                           InnovationRegistry& reg, const NeatConfig& cfg, Rng& rng) {
  reg.new_generation();
  const auto total = static_cast<std::size_t>(cfg.population_size);
  if (species.species.empty()) {
    if (!cfg.reset_on_extinction) throw EmptyPopulation("all species extinct and reset_on_extinction is off");
    return make_initial_population(cfg, reg, rng);
  }

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : species.species)
    for (std::size_t m : s.members) {
      if (!pop[m].fitness) throw BadConfig("next_generation needs evaluated genomes");
      lo = std::min(lo, *pop[m].fitness);
      hi = std::max(hi, *pop[m].fitness);
    }
  const double range = hi - lo;

  const std::size_t ns = species.species.size();
  std::vector<double> shares(ns);
  std::vector<bool> seats(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    const auto& s = species.species[i];
    double acc = 0.0;
    for (std::size_t m : s.members) acc += range > 0.0 ? (*pop[m].fitness - lo) / range : 1.0;
    shares[i] = acc / static_cast<double>(s.members.size());
    seats[i] = s.members.size() >= static_cast<std::size_t>(cfg.elitism_threshold);
  }
  const auto quotas = offspring_quotas(shares, seats, total);

  std::vector<Genome> next;
  next.reserve(total);
  for (std::size_t i = 0; i < ns; ++i) {
    std::size_t quota = quotas[i];
    if (quota == 0) continue;
    std::vector<std::size_t> ranked = species.species[i].members;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](std::size_t a, std::size_t b) { return *pop[a].fitness > *pop[b].fitness; });

    if (seats[i]) {
      Genome elite = pop[ranked.front()];
      elite.fitness.reset();
      next.push_back(std::move(elite));
      --quota;
    }
    const auto survivors = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(cfg.survival_threshold * static_cast<double>(ranked.size()))));
    for (std::size_t k = 0; k < quota; ++k) {
      const Genome& a = pop[ranked[rng.below(survivors)]];
      const Genome& b = pop[ranked[rng.below(survivors)]];
      Genome child = crossover(a, b, rng);
      child = mutate_weights(child, cfg, rng);
      child = mutate_structural(child, reg, cfg, rng);
      next.push_back(std::move(child));
    }
  }
  return next;
}

}  // namespace seesaw::neat
