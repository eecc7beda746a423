#pragma once

#include "lrbm/model.hpp"
#include "lrbm/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace lrbm {

/**
 * Leakiness schedule of the annealed sampler: starting at c_start, each
 * step lowers the leakiness by epsilon and clamps at c_target, then holds
 * c_target for the remaining steps.
 */
struct AnnealSchedule {
  double c_start = 1.0;
  double c_target = 1.0;
  double epsilon = 0.0;
  int total_steps = 1;

  /// epsilon = (c_start - c_target) / (0.9 T): annealing finishes within the
  /// first 90% of the steps.
  static AnnealSchedule with_default_rate(double c_target, int total_steps, double c_start = 1.0);

  /// Schedule that stays at `leakiness` for every step.
  static AnnealSchedule constant(double leakiness, int total_steps);

  /// Leakiness used at step t (1-based).
  double leakiness_at(int step) const;

  /// Throws InvalidArgument when the fields are inconsistent.
  void validate() const;
};

/**
 * The c = 1 model, a Gaussian N(Omega^{-1}(a + W b), Omega^{-1}) with
 * Omega = I - W W^T, sampled exactly through a Cholesky factor of the
 * covariance.
 *
 * If the largest singular value of W is within 1e-6 of 1, W is shrunk to
 * spectral norm 1 - 1e-6 for this Gaussian only; log_unnorm_density() and
 * log_partition() then describe the shrunk model so importance weights can
 * correct for it. Build once and reuse while the parameters are unchanged.
 */
class GaussianBase {
 public:
  static constexpr double kShrinkMargin = 1e-6;

  explicit GaussianBase(const RbmParams& params);

  const Vector& mean() const noexcept { return mean_; }
  const Matrix& covariance() const noexcept { return covariance_; }
  bool shrunk() const noexcept { return shrink_factor_ != 1.0; }
  double shrink_factor() const noexcept { return shrink_factor_; }

  /// Log-normalizer of log_unnorm_density().
  double log_partition() const noexcept { return log_partition_; }
  /// -||v - a||^2 / 2 + ||W^T v + b||^2 / 2 for the (possibly shrunk) W.
  double log_unnorm_density(const Vector& v) const;

  Vector sample(Rng& rng) const;

 private:
  Matrix weights_;
  Vector visible_bias_;
  Vector hidden_bias_;
  Vector mean_;
  Matrix covariance_;
  Matrix factor_;
  double shrink_factor_ = 1.0;
  double log_partition_ = 0.0;
};

/// n exact draws (rows) from the c = 1 Gaussian; draw i uses stream i of `seed`.
Matrix sample_gaussian_base(const RbmParams& params, std::size_t n, std::uint64_t seed, int threads = 1);

/// One sweep h ~ p(h | v), v ~ p(v | h) at the model's own leakiness.
void gibbs_step(const RbmParams& params, GibbsState& state, Rng& rng);

/// One sweep at an overriding leakiness (ignored for Bernoulli units).
void gibbs_step(const RbmParams& params, double leakiness, GibbsState& state, Rng& rng);

struct ChainSet {
  std::vector<GibbsState> states;
  std::uint64_t rng_seed = 0;
  int step_count = 0;

  /// Visible vectors as rows.
  Matrix visible() const;
};

using StepCallback = std::function<void(int step, double leakiness, const ChainSet& chains)>;

struct SamplerOptions {
  int sweeps_per_level = 1;
  int threads = 1;
  /// Invoked after each schedule step, with every chain updated.
  StepCallback on_step;
};

/// Runs the schedule on chains started at the rows of `initial`. Chain i
/// draws from stream i of `seed`.
ChainSet run_schedule(const RbmParams& params, const Matrix& initial, const AnnealSchedule& schedule,
                      std::uint64_t seed, const SamplerOptions& options = {});

/// Leakiness-annealed sampler: chains start at exact c = 1 draws and anneal
/// down to schedule.c_target.
ChainSet anneal_leakiness_sample(const RbmParams& params, const AnnealSchedule& schedule,
                                 std::size_t n_chains, std::uint64_t seed,
                                 const SamplerOptions& options = {});

/// Same, reusing a precomputed base Gaussian.
ChainSet anneal_leakiness_sample(const GaussianBase& base, const RbmParams& params,
                                 const AnnealSchedule& schedule, std::size_t n_chains,
                                 std::uint64_t seed, const SamplerOptions& options = {});

/// Annealed sampler whose chains start at rows drawn uniformly with
/// replacement from `data_batch`. No Gaussian factorization is computed.
ChainSet mix_sample(const RbmParams& params, const Matrix& data_batch, const AnnealSchedule& schedule,
                    std::size_t n_chains, std::uint64_t seed, const SamplerOptions& options = {});

/// Row indices mix_sample() starts from for the given seed.
std::vector<std::size_t> mix_start_rows(std::size_t batch_rows, std::size_t n_chains, std::uint64_t seed);

}  // namespace lrbm
