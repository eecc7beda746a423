#pragma once

#include "lrbm/model.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lrbm {

enum class PathKind {
  /// Geometric path from N(a, I) to the target marginal; grid holds beta from 1 to 0.
  Energy,
  /// Leakiness path from the c = 1 Gaussian; grid holds c' from 1 down to c.
  Leaky,
  /// Geometric path from the c = 1 Gaussian to the target; grid holds beta from 1 to 0.
  OneSided,
};

struct AnnealingPath {
  PathKind kind = PathKind::Leaky;
  std::vector<double> grid;
  int sweeps_per_level = 1;

  /// `levels` uniform steps in beta, i.e. levels + 1 grid points.
  static AnnealingPath energy(int levels, int sweeps_per_level = 1);
  /// `levels` uniform steps in c' from 1 to `target_leakiness`. A target of 1
  /// yields the single-point grid {1}.
  static AnnealingPath leaky(double target_leakiness, int levels, int sweeps_per_level = 1);
  static AnnealingPath one_sided(int levels, int sweeps_per_level = 1);

  /// Number of intermediate transitions (grid size - 1).
  int levels() const noexcept { return static_cast<int>(grid.size()) - 1; }

  void validate() const;
};

/**
 * Unnormalized log density of the intermediate distribution at `level`.
 *
 * Energy (leaky units):    -||v-a||^2/2 + (1 - beta) sum_j F_c(eta_j)
 * Energy (Bernoulli units): -||v-a||^2/2 + sum_j softplus((1 - beta) eta_j)
 * Leaky:                    log_unnorm_marginal at leakiness c' = level
 * OneSided:                 beta * [c = 1 marginal] + (1 - beta) * [target marginal]
 */
double intermediate_log_density(PathKind kind, double level, const RbmParams& params, const Vector& v);

/// Model whose Gibbs sweeps leave the intermediate distribution at `level`
/// invariant, and the leakiness to run them at.
struct LevelTransition {
  RbmParams params;
  double leakiness;
};
LevelTransition level_transition(PathKind kind, double level, const RbmParams& params);

struct LogZEstimate {
  double log_z = 0.0;
  /// log Z of the base distribution the particles were drawn from.
  double log_z_base = 0.0;
  /// Per-particle log importance weights (finite particles only).
  std::vector<double> log_weights;
  /// Delta-method standard error of log_z.
  double standard_error = 0.0;
  double effective_sample_size = 0.0;
  std::size_t dropped_particles = 0;
};

/// Summary of a set of log-weights: log-mean-exp, delta-method standard
/// error and ESS, accumulated in a fixed order.
LogZEstimate summarize_log_weights(std::vector<double> log_weights, double log_z_base);

/**
 * Annealed importance sampling estimate of log Z.
 *
 * Particle i uses stream i of `seed`, so the result does not depend on
 * `threads`. Particles whose log-weight is not finite are dropped and
 * counted in `dropped_particles`.
 */
LogZEstimate ais_estimate(const RbmParams& params, const AnnealingPath& path, std::size_t n_particles,
                          std::uint64_t seed, int threads = 1);

/**
 * Exact log Z for leaky units with b = 0, a = 0 and pairwise orthogonal
 * weight columns, enumerating all 2^J activation patterns:
 *
 *   Z = 2^-J sum_alpha (2 pi)^(I/2) det(I - sum_j alpha_j W_j W_j^T)^(-1/2).
 */
double exact_log_z_orthogonal(const RbmParams& params);

/// Closed-form log Z of the c = 1 Gaussian model (leaky units at c = 1 or
/// any leaky params viewed at c = 1).
double gaussian_log_z(const RbmParams& params);

/// Exact log Z of a Bernoulli-hidden model by summing over all 2^J hidden states.
double exact_log_z_bernoulli(const RbmParams& params);

/**
 * log Z by adaptive Gauss-Kronrod quadrature of exp(log_unnorm_density) for
 * I <= 2. Leaky models whose marginal is not integrable raise
 * DivergenceError. Refines until two successive estimates agree to
 * `tolerance` relative.
 */
double quadrature_log_z(const RbmParams& params, double tolerance = 1e-10);

/// Mean of log_unnorm_density(row) - log_z over the rows of `data`.
double eval_mean_log_likelihood(const RbmParams& params, const Matrix& data, double log_z);

}  // namespace lrbm
