#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seesaw/error.hpp"
#include "seesaw/rng.hpp"

#ifdef SEESAW_USE_LAPACKE
#include <lapacke.h>
extern "C" void openblas_set_num_threads(int);
#endif

namespace seesaw::cmaes {

struct CmaesConfig {
  std::size_t dimension = 0;
  int population_size = 32;
  double init_sigma = 0.1;
  /// Empty means the origin.
  std::vector<double> initial_mean;
  std::optional<long> max_evaluations;
  /// Stop once the best (maximized) fitness reaches this value.
  std::optional<double> target_fitness;

  void validate() const {
    if (dimension < 1) throw BadConfig("CMA-ES dimension must be >= 1");
    if (population_size < 2) throw BadConfig("CMA-ES population size must be >= 2");
    if (!(init_sigma > 0.0) || !std::isfinite(init_sigma)) throw BadConfig("CMA-ES init sigma must be > 0");
    if (!initial_mean.empty() && initial_mean.size() != dimension)
      throw BadConfig("initial mean has " + std::to_string(initial_mean.size()) + " entries, dimension is " +
                      std::to_string(dimension));
  }
};

/// Full strategy state. Strategy parameters follow Hansen's tutorial
/// defaults; only lambda and sigma0 come from the configuration.
struct CmaesState {
  // strategy parameters
  std::size_t n = 0;
  int lambda = 0;
  int mu = 0;
  Eigen::VectorXd weights;
  double mueff = 0, cs = 0, damps = 0, cc = 0, c1 = 0, cmu = 0, chi_n = 0;
  long eigen_interval = 1;

  // dynamic state
  Eigen::VectorXd mean;
  double sigma = 0;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd basis;  ///< eigenvectors of cov (columns), as of eigen_generation
  Eigen::VectorXd scales;  ///< sqrt of the matching eigenvalues
  Eigen::VectorXd path_sigma;
  Eigen::VectorXd path_c;
  long generation = 0;
  long evaluations = 0;
  long eigen_generation = 0;

  double best_fitness = -std::numeric_limits<double>::infinity();
  std::vector<double> best_x;

  double axis_ratio() const { return scales.maxCoeff() / scales.minCoeff(); }
  double condition_number() const {
    const double r = axis_ratio();
    return r * r;
  }
};

/// Eigendecomposition of a symmetric matrix; eigenvalues ascending.
inline void symmetric_eigen(const Eigen::MatrixXd& a, Eigen::MatrixXd& vectors, Eigen::VectorXd& values) {
#ifdef SEESAW_USE_LAPACKE
  // A fixed thread count keeps the decomposition bitwise reproducible.
  openblas_set_num_threads(1);
  vectors = a;
  values.resize(a.rows());
  const auto n = static_cast<lapack_int>(a.rows());
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, vectors.data(), n, values.data());
  if (info != 0) throw Error("dsyevd failed with info " + std::to_string(info));
#else
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
  vectors = es.eigenvectors();
  values = es.eigenvalues();
#endif
}

/// Recompute basis/scales from cov, mirroring the upper triangle first and
/// lifting non-positive eigenvalues so cov stays positive definite.
inline void refresh_eigensystem(CmaesState& s) {
  s.cov.triangularView<Eigen::StrictlyLower>() = s.cov.transpose();
  Eigen::VectorXd values;
  symmetric_eigen(s.cov, s.basis, values);
  const double top = std::max(values.maxCoeff(), std::numeric_limits<double>::min());
  const double floor = top * 1e-20;
  if (values.minCoeff() <= floor) {
    values = values.cwiseMax(floor);
    s.cov = s.basis * values.asDiagonal() * s.basis.transpose();
    s.cov.triangularView<Eigen::StrictlyLower>() = s.cov.transpose();
  }
  s.scales = values.cwiseSqrt();
  s.eigen_generation = s.generation;
}

inline CmaesState init(const CmaesConfig& cfg) {
  cfg.validate();
  CmaesState s;
  const auto n = cfg.dimension;
  const double nd = static_cast<double>(n);
  s.n = n;
  s.lambda = cfg.population_size;
  s.mu = s.lambda / 2;

  s.weights.resize(s.mu);
  for (int i = 0; i < s.mu; ++i) s.weights[i] = std::log((s.lambda + 1) / 2.0) - std::log(i + 1.0);
  s.weights /= s.weights.sum();
  s.mueff = 1.0 / s.weights.squaredNorm();

  s.cs = (s.mueff + 2.0) / (nd + s.mueff + 5.0);
  s.damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((s.mueff - 1.0) / (nd + 1.0)) - 1.0) + s.cs;
  s.cc = (4.0 + s.mueff / nd) / (nd + 4.0 + 2.0 * s.mueff / nd);
  s.c1 = 2.0 / ((nd + 1.3) * (nd + 1.3) + s.mueff);
  s.cmu = std::min(1.0 - s.c1, 2.0 * (s.mueff - 2.0 + 1.0 / s.mueff) / ((nd + 2.0) * (nd + 2.0) + s.mueff));
  s.chi_n = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));
  s.eigen_interval = std::max(1L, static_cast<long>(std::floor(1.0 / (10.0 * nd * (s.c1 + s.cmu)))));

  if (cfg.initial_mean.empty()) s.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  else s.mean = Eigen::Map<const Eigen::VectorXd>(cfg.initial_mean.data(), static_cast<Eigen::Index>(n));
  s.sigma = cfg.init_sigma;
  s.cov = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  s.basis = s.cov;
  s.scales = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  s.path_sigma = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  s.path_c = s.path_sigma;
  return s;
}

/// lambda samples of mean + sigma * N(0, C), in a fixed order for a given stream.
inline std::vector<std::vector<double>> ask(const CmaesState& s, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(s.n);
  Eigen::MatrixXd z(n, s.lambda);
  for (Eigen::Index j = 0; j < s.lambda; ++j)
    for (Eigen::Index i = 0; i < n; ++i) z(i, j) = rng.normal();
  const Eigen::MatrixXd y = s.basis * (s.scales.asDiagonal() * z);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(s.lambda), std::vector<double>(s.n));
  for (Eigen::Index j = 0; j < s.lambda; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      out[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = s.mean[i] + s.sigma * y(i, j);
  return out;
}

/// Rank-based update from evaluated candidates. Fitness is maximized; equal
/// fitnesses keep candidate order.
inline void tell(CmaesState& s, const std::vector<std::vector<double>>& candidates, std::span<const double> fitness) {
  const auto lam = static_cast<std::size_t>(s.lambda);
  if (candidates.size() != lam || fitness.size() != lam)
    throw LengthMismatch("tell expects " + std::to_string(lam) + " candidates and fitnesses");
  for (const auto& c : candidates)
    if (c.size() != s.n) throw LengthMismatch("candidate dimension does not match state");
  for (double f : fitness)
    if (!std::isfinite(f)) throw NonFiniteFitness("fitness values must be finite");

  const auto n = static_cast<Eigen::Index>(s.n);
  const double nd = static_cast<double>(s.n);

  std::vector<std::size_t> rank(lam);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });

  if (fitness[rank[0]] > s.best_fitness) {
    s.best_fitness = fitness[rank[0]];
    s.best_x = candidates[rank[0]];
  }

  // Selected steps y_k = (x_k - m) / sigma, best first.
  Eigen::MatrixXd steps(n, s.mu);
  for (int k = 0; k < s.mu; ++k) {
    const auto& x = candidates[rank[static_cast<std::size_t>(k)]];
    for (Eigen::Index i = 0; i < n; ++i) steps(i, k) = (x[static_cast<std::size_t>(i)] - s.mean[i]) / s.sigma;
  }
  const Eigen::VectorXd y_w = steps * s.weights;
  s.mean += s.sigma * y_w;

  const Eigen::VectorXd inv_sqrt_y = s.basis * (s.scales.cwiseInverse().asDiagonal() * (s.basis.transpose() * y_w));
  s.path_sigma = (1.0 - s.cs) * s.path_sigma + std::sqrt(s.cs * (2.0 - s.cs) * s.mueff) * inv_sqrt_y;

  const double ps_norm = s.path_sigma.norm();
  const double denom = std::sqrt(1.0 - std::pow(1.0 - s.cs, 2.0 * static_cast<double>(s.generation + 1)));
  const bool hsig = ps_norm / denom / s.chi_n < 1.4 + 2.0 / (nd + 1.0);
  s.path_c = (1.0 - s.cc) * s.path_c + (hsig ? std::sqrt(s.cc * (2.0 - s.cc) * s.mueff) : 0.0) * y_w;

  const double decay = 1.0 - s.c1 - s.cmu + (hsig ? 0.0 : s.c1 * s.cc * (2.0 - s.cc));
  // Updates touch the lower triangle only; the upper is mirrored below.
  s.cov.triangularView<Eigen::Lower>() *= decay;
  s.cov.selfadjointView<Eigen::Lower>().rankUpdate(s.path_c, s.c1);
  const Eigen::MatrixXd weighted = steps * s.weights.cwiseSqrt().asDiagonal();
  s.cov.selfadjointView<Eigen::Lower>().rankUpdate(weighted, s.cmu);
  s.cov.triangularView<Eigen::StrictlyUpper>() = s.cov.transpose();

  s.sigma *= std::exp((s.cs / s.damps) * (ps_norm / s.chi_n - 1.0));
  s.sigma = std::clamp(s.sigma, std::numeric_limits<double>::min(), std::numeric_limits<double>::max());

  ++s.generation;
  s.evaluations += static_cast<long>(lam);
  if (s.generation - s.eigen_generation >= s.eigen_interval) refresh_eigensystem(s);
}

enum class StopReason { max_evaluations, target_reached, condition_number };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::max_evaluations: return "MaxEvals";
    case StopReason::target_reached: return "TargetReached";
    case StopReason::condition_number: return "ConditionNumber";
  }
  return "?";
}

inline std::optional<StopReason> should_stop(const CmaesState& s, const CmaesConfig& cfg) {
  if (cfg.max_evaluations && s.evaluations >= *cfg.max_evaluations) return StopReason::max_evaluations;
  if (cfg.target_fitness && s.best_fitness >= *cfg.target_fitness) return StopReason::target_reached;
  if (s.condition_number() > 1e14) return StopReason::condition_number;
  return std::nullopt;
}

/// One row of the optimizer trace.
struct TraceRow {
  long generation;
  double best;
  double mean;
  double sigma;
  double axis_ratio;
};

}  // namespace seesaw::cmaes
