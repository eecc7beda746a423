#include "lrbm/training.hpp"

#include "lrbm/error.hpp"
#include "lrbm/projection.hpp"
#include "lrbm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace lrbm {

namespace {

// Expected hidden activations, one row per visible row.
Matrix hidden_means(const RbmParams& params, const Matrix& visible) {
  Matrix eta = visible * params.weights();
  eta.rowwise() += params.hidden_bias().transpose();
  if (params.kind() == HiddenKind::Bernoulli) {
    return eta.unaryExpr([](double x) { return sigmoid(x); });
  }
  const double c = params.leakiness();
  return eta.unaryExpr([c](double x) { return x > 0.0 ? x : c * x; });
}

AnnealSchedule negative_schedule(const TrainConfig& config, double leakiness) {
  if (config.anneal.epsilon > 0.0) {
    AnnealSchedule s = config.anneal;
    s.c_target = leakiness;
    s.total_steps = config.cd_steps;
    s.validate();
    return s;
  }
  return AnnealSchedule::with_default_rate(leakiness, config.cd_steps, config.anneal.c_start);
}

Matrix take_rows(const Matrix& data, const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) {
  Matrix out(static_cast<Eigen::Index>(end - begin), data.cols());
  for (std::size_t r = begin; r < end; ++r) {
    out.row(static_cast<Eigen::Index>(r - begin)) = data.row(static_cast<Eigen::Index>(order[r]));
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw InvalidArgument("learning_rate must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  if (cd_steps < 1) throw InvalidArgument("cd_steps must be at least 1");
  if (batch_size < 1) throw InvalidArgument("batch_size must be at least 1");
  if (epochs < 0) throw InvalidArgument("epochs must be non-negative");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be non-negative");
  if (!(learning_rate_decay > 0.0)) throw InvalidArgument("learning_rate_decay must be positive");
}

GradientEstimate expected_statistics(const RbmParams& params, const Matrix& visible) {
  if (visible.rows() == 0) throw InvalidArgument("phase statistics need a nonempty batch");
  if (visible.cols() != params.num_visible()) {
    throw DimensionError("batch has " + std::to_string(visible.cols()) + " columns, model has " +
                         std::to_string(params.num_visible()) + " visible units");
  }
  const double n = static_cast<double>(visible.rows());
  const Matrix h = hidden_means(params, visible);
  GradientEstimate g;
  g.dW = visible.transpose() * h / n;
  g.db = h.colwise().mean().transpose();
  g.da = visible.colwise().mean().transpose() - params.visible_bias();
  return g;
}

GradientEstimate positive_phase(const RbmParams& params, const Matrix& batch) {
  return expected_statistics(params, batch);
}

Matrix negative_samples(const RbmParams& params, const Matrix& batch, const TrainConfig& config,
                        std::uint64_t seed) {
  if (batch.rows() == 0) throw InvalidArgument("negative phase needs a nonempty batch");
  SamplerOptions options;
  options.threads = config.threads;
  const auto n = static_cast<std::size_t>(batch.rows());
  switch (config.neg_sampler) {
    case NegativeSampler::CD:
      return run_schedule(params, batch, AnnealSchedule::constant(params.leakiness(), config.cd_steps), seed,
                          options)
          .visible();
    case NegativeSampler::LeakyAnneal:
      return anneal_leakiness_sample(params, negative_schedule(config, params.leakiness()), n, seed, options)
          .visible();
    case NegativeSampler::Mix:
      return mix_sample(params, batch, negative_schedule(config, params.leakiness()), n, seed, options).visible();
  }
  throw InvalidArgument("unknown negative sampler");
}

GradientEstimate negative_phase(const RbmParams& params, const Matrix& batch, const TrainConfig& config,
                                std::uint64_t seed) {
  if (params.kind() == HiddenKind::Bernoulli && config.neg_sampler != NegativeSampler::CD) {
    throw InvalidArgument("Bernoulli hidden units only support the CD negative phase");
  }
  return expected_statistics(params, negative_samples(params, batch, config, seed));
}

RbmParams initial_params(Eigen::Index num_visible, Eigen::Index num_hidden, double leakiness, HiddenKind kind,
                         std::uint64_t seed) {
  Rng rng(seed, 0);
  Matrix w(num_visible, num_hidden);
  for (Eigen::Index j = 0; j < num_hidden; ++j) {
    for (Eigen::Index i = 0; i < num_visible; ++i) w(i, j) = 0.01 * rng.uniform();
  }
  return RbmParams(w, Vector::Zero(num_visible), Vector::Zero(num_hidden), leakiness, kind);
}

double reconstruction_error(const RbmParams& params, const Matrix& data) {
  if (data.rows() == 0) return 0.0;
  Matrix recon = hidden_means(params, data) * params.weights().transpose();
  recon.rowwise() += params.visible_bias().transpose();
  return (data - recon).squaredNorm() / static_cast<double>(data.size());
}

TrainResult train(const RbmParams& initial, const Matrix& data, const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (data.rows() == 0) throw InvalidArgument("training data is empty");
  if (data.cols() != initial.num_visible()) {
    throw DimensionError("training data has " + std::to_string(data.cols()) + " columns, model has " +
                         std::to_string(initial.num_visible()) + " visible units");
  }
  if (config.projection_enabled && !initial.is_safe()) {
    throw InvalidArgument("projected training needs safe initial parameters");
  }

  Matrix w = initial.weights();
  Vector a = initial.visible_bias();
  Vector b = initial.hidden_bias();
  Matrix vel_w = Matrix::Zero(w.rows(), w.cols());
  Vector vel_a = Vector::Zero(a.size());
  Vector vel_b = Vector::Zero(b.size());
  TrainResult result{initial, {}};

  const auto n = static_cast<std::size_t>(data.rows());
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  double lr = config.learning_rate;
  Rng shuffler(config.seed, 0x5eed5eedULL);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffler.index(i)]);

    for (std::size_t start = 0, k = 0; start < n; start += batch, ++k) {
      const Matrix rows = take_rows(data, order, start, std::min(n, start + batch));
      const std::uint64_t batch_seed = derive_seed(config.seed, (static_cast<std::uint64_t>(epoch) << 32) | k);

      GradientEstimate g = positive_phase(result.params, rows);
      const GradientEstimate neg = negative_phase(result.params, rows, config, batch_seed);
      g.dW -= neg.dW;
      g.db -= neg.db;
      g.da -= neg.da;
      g.dW -= config.weight_decay * w;

      vel_w = config.momentum * vel_w + lr * g.dW;
      vel_b = config.momentum * vel_b + lr * g.db;
      w += vel_w;
      b += vel_b;
      if (config.update_visible_bias) {
        vel_a = config.momentum * vel_a + lr * g.da;
        a += vel_a;
      }
      if (!w.allFinite() || !a.allFinite() || !b.allFinite()) {
        throw NumericalError("training diverged: non-finite parameters at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(k));
      }
      if (config.projection_enabled) {
        w = project_spectral(w).weights;
      }
      result.params = RbmParams(w, a, b, initial.leakiness(), initial.kind());
      if (hooks.after_update) hooks.after_update(result.params);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.reconstruction_error = reconstruction_error(result.params, data);
    if (hooks.evaluate) rec.log_likelihood = hooks.evaluate(result.params);
    result.log.push_back(rec);
    lr *= config.learning_rate_decay;
  }
  return result;
}

}  // namespace lrbm
