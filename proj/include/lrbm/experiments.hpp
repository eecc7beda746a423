#pragma once

// The four canned experiments behind `lrbm experiment <name>`. Each one
// returns structured results (used directly by the acceptance checks) and
// renders them as CSV. Output depends only on the settings and seed.

#include "lrbm/model.hpp"
#include "lrbm/training.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lrbm {

/// Model with pairwise orthogonal weight columns of equal norm, a = 0, b = 0.
RbmParams orthogonal_model(Eigen::Index num_visible, Eigen::Index num_hidden, double column_norm, double leakiness,
                           std::uint64_t seed);

/// Exact draws from a leaky RBM (long annealed chains).
Matrix sample_model(const RbmParams& params, std::size_t n, std::uint64_t seed, int steps = 200);

// ---------------------------------------------------------------- partition bias

struct PartitionBiasSettings {
  Eigen::Index visible = 64;
  std::vector<int> hidden{2, 4, 8, 16};
  double leakiness = 0.01;
  /// At 0.9 both paths are nearly unbiased at this I. Near 0.975 the energy
  /// path is clearly biased for J >= 8 while the leaky path stays within 0.15.
  double column_norm = 0.975;
  int repeats = 10;
  std::size_t particles = 1000;
  int levels = 100;
  int threads = 1;
  bool timing = false;
};

struct BiasRow {
  int hidden = 0;
  std::string method;  // "energy" or "leaky"
  double bias_mean = 0.0;
  double bias_sd = 0.0;
  std::size_t particles = 0;
  int levels = 0;
  double seconds = 0.0;  // NaN unless timing was requested
  double mean_stderr = 0.0;
  std::vector<double> biases;
};

std::vector<BiasRow> run_partition_bias(const PartitionBiasSettings& settings, std::uint64_t seed);
std::string partition_bias_csv(const std::vector<BiasRow>& rows);

// ---------------------------------------------------------------- mixing

struct MixingSettings {
  double leakiness = 0.1;
  Eigen::Index hidden = 2;
  /// Spectral norm of the ground-truth weights. Closer to 1 slows Gibbs
  /// mixing, but fitted models then tend to hit the sigma = 1 boundary.
  double true_norm = 0.95;
  std::size_t train_rows = 2000;
  std::size_t test_rows = 2000;
  int epochs = 10;
  int cd_steps = 20;
  double learning_rate = 0.01;
  double momentum = 0.5;
  double learning_rate_decay = 1.0;
  int batch_size = 100;
  int threads = 1;
};

struct MixingRow {
  int epoch = 0;
  std::string method;  // "cd", "leaky", "mix"
  double loglik = 0.0;
  double stderr_ = 0.0;
};

/// Trains CD, LeakyAnneal and Mix models on I = 2 data from a known leaky RBM
/// and records the held-out log-likelihood (quadrature normalizer) per epoch.
std::vector<MixingRow> run_mixing(const MixingSettings& settings, std::uint64_t seed);
std::string mixing_csv(const std::vector<MixingRow>& rows);

// ---------------------------------------------------------------- divergence

struct DivergenceSettings {
  Eigen::Index visible = 16;
  Eigen::Index hidden = 8;
  double leakiness = 0.1;
  std::size_t rows = 2000;
  int epochs = 30;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::size_t chains = 1000;
  int steps = 200;
  int threads = 1;
};

struct DivergenceTrace {
  std::string model;  // "projected" or "unprojected"
  std::vector<double> mean_abs_v;  // one entry per step that stayed finite
  std::optional<int> diverged_at;  // step at which the chains overflowed
  double max_singular_value = 0.0;
  bool safe = true;
};

/// Trains with and without projection (CD-1 + weight decay) on rank-one
/// synthetic data, then runs free chains from N(0, I) on each model.
std::vector<DivergenceTrace> run_divergence(const DivergenceSettings& settings, std::uint64_t seed);
std::string divergence_csv(const std::vector<DivergenceTrace>& traces);

// ---------------------------------------------------------------- likelihood

struct LikelihoodSettings {
  Eigen::Index visible = 8;
  Eigen::Index true_hidden = 4;
  double true_norm = 0.95;
  double leakiness = 0.1;
  Eigen::Index hidden = 50;
  std::size_t train_rows = 2000;
  std::size_t test_rows = 1000;
  int epochs = 10;
  int cd_steps = 20;
  double learning_rate = 0.01;
  std::size_t particles = 1000;
  int levels = 1000;
  int threads = 1;
  /// Optional user data (already normalized); replaces the synthetic set.
  std::optional<Matrix> data;
};

struct LikelihoodRow {
  std::string model;  // "leaky" or "bernoulli"
  double loglik = 0.0;
  double logz = 0.0;
  double logz_stderr = 0.0;
};

std::vector<LikelihoodRow> run_likelihood_compare(const LikelihoodSettings& settings, std::uint64_t seed);
std::string likelihood_csv(const std::vector<LikelihoodRow>& rows);

/// Shortest round-trip decimal rendering used in every CSV.
std::string format_number(double x);

}  // namespace lrbm
