#pragma once

#include "lrbm/model.hpp"
#include "lrbm/sampler.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace lrbm {

enum class NegativeSampler { CD, LeakyAnneal, Mix };

struct TrainConfig {
  int cd_steps = 1;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 100;
  int epochs = 10;
  NegativeSampler neg_sampler = NegativeSampler::CD;
  /// Schedule for LeakyAnneal and Mix. Its total_steps is replaced by
  /// cd_steps; when epsilon <= 0 the default rate is used.
  AnnealSchedule anneal{1.0, 1.0, 0.0, 1};
  double weight_decay = 0.0;
  bool projection_enabled = true;
  /// Multiplies the learning rate after every epoch; 1 keeps it constant.
  double learning_rate_decay = 1.0;
  bool update_visible_bias = false;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

/// Gradient of the log-likelihood (ascent direction) or one phase of it.
struct GradientEstimate {
  Matrix dW;
  Vector da;
  Vector db;
};

/// Data term: batch average of v E[h|v]^T, E[h|v] and v - a with the
/// conditional mean of h (no sampling).
GradientEstimate positive_phase(const RbmParams& params, const Matrix& batch);

/// Model term, same statistics evaluated at the final states of the negative
/// chains started from `batch` according to config.neg_sampler.
GradientEstimate negative_phase(const RbmParams& params, const Matrix& batch, const TrainConfig& config,
                                std::uint64_t seed);

/// Final chain states of the negative phase (rows).
Matrix negative_samples(const RbmParams& params, const Matrix& batch, const TrainConfig& config,
                        std::uint64_t seed);

/// Rao-Blackwellized sufficient statistics of a set of visible vectors.
GradientEstimate expected_statistics(const RbmParams& params, const Matrix& visible);

/// W ~ Unif(0, 0.01), a = 0, b = 0.
RbmParams initial_params(Eigen::Index num_visible, Eigen::Index num_hidden, double leakiness, HiddenKind kind,
                         std::uint64_t seed);

struct EpochRecord {
  int epoch = 0;
  double reconstruction_error = 0.0;
  double log_likelihood = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  RbmParams params;
  std::vector<EpochRecord> log;
};

struct TrainHooks {
  /// Optional per-epoch log-likelihood (e.g. a quadrature oracle).
  std::function<double(const RbmParams&)> evaluate;
  /// Called after every parameter update (after projection).
  std::function<void(const RbmParams&)> after_update;
};

/**
 * Mini-batch training: gradient estimate, momentum step, optional weight
 * decay, then spectral projection of W when enabled.
 *
 * Throws NumericalError if the parameters stop being finite.
 */
TrainResult train(const RbmParams& initial, const Matrix& data, const TrainConfig& config,
                  const TrainHooks& hooks = {});

/// Mean squared error between `data` and W E[h|v] + a.
double reconstruction_error(const RbmParams& params, const Matrix& data);

}  // namespace lrbm
