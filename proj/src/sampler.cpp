#include "lrbm/sampler.hpp"

#include "lrbm/error.hpp"
#include "lrbm/projection.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace lrbm {

namespace {

// Stream reserved for the row draws of mix_sample, distinct from every chain index.
constexpr std::uint64_t kRowDrawStream = 0xffffffffffff0001ULL;

void sweep(const RbmParams& params, double leakiness, GibbsState& state, Rng& rng) {
  const Matrix& w = params.weights();
  const Vector eta = w.transpose() * state.v + params.hidden_bias();
  state.h.resize(eta.size());
  if (params.kind() == HiddenKind::LeakyRelu) {
    const double sd_neg = std::sqrt(leakiness);
    for (Eigen::Index j = 0; j < eta.size(); ++j) {
      const double z = rng.normal();
      state.h(j) = eta(j) > 0.0 ? eta(j) + z : leakiness * eta(j) + sd_neg * z;
    }
  } else {
    for (Eigen::Index j = 0; j < eta.size(); ++j) {
      state.h(j) = rng.uniform() < sigmoid(eta(j)) ? 1.0 : 0.0;
    }
  }
  state.v = w * state.h + params.visible_bias();
  for (Eigen::Index i = 0; i < state.v.size(); ++i) {
    state.v(i) += rng.normal();
  }
}

// Advances chains through the schedule; rngs[i] belongs to chain i.
void advance(const RbmParams& params, ChainSet& chains, std::vector<Rng>& rngs,
             const AnnealSchedule& schedule, const SamplerOptions& options) {
  if (options.sweeps_per_level < 1) {
    throw InvalidArgument("sweeps_per_level must be at least 1");
  }
  for (int t = 1; t <= schedule.total_steps; ++t) {
    const double c = schedule.leakiness_at(t);
    parallel_for(chains.states.size(), options.threads, [&](std::size_t i) {
      for (int s = 0; s < options.sweeps_per_level; ++s) {
        sweep(params, c, chains.states[i], rngs[i]);
      }
    });
    ++chains.step_count;
    if (options.on_step) {
      options.on_step(t, c, chains);
    }
  }
}

void check_schedule_params(const RbmParams& params, const AnnealSchedule& schedule) {
  schedule.validate();
  if (params.kind() != HiddenKind::LeakyRelu) {
    throw InvalidArgument("leakiness annealing requires leaky ReLU hidden units");
  }
}

}  // namespace

AnnealSchedule AnnealSchedule::with_default_rate(double c_target, int total_steps, double c_start) {
  AnnealSchedule s;
  s.c_start = c_start;
  s.c_target = c_target;
  s.total_steps = total_steps;
  s.epsilon = total_steps > 0 ? (c_start - c_target) / (0.9 * total_steps) : 0.0;
  if (s.epsilon <= 0.0) {
    s.epsilon = 1.0;  // unused: nothing to anneal
  }
  s.validate();
  return s;
}

AnnealSchedule AnnealSchedule::constant(double leakiness, int total_steps) {
  return with_default_rate(leakiness, total_steps, leakiness);
}

double AnnealSchedule::leakiness_at(int step) const {
  return std::max(c_target, c_start - step * epsilon);
}

void AnnealSchedule::validate() const {
  if (!(c_target > 0.0 && c_target <= c_start && c_start <= 1.0)) {
    throw InvalidArgument("anneal schedule needs 0 < c_target <= c_start <= 1");
  }
  if (!(epsilon > 0.0)) {
    throw InvalidArgument("anneal schedule epsilon must be positive");
  }
  if (total_steps < 0) {
    throw InvalidArgument("anneal schedule total_steps must be non-negative");
  }
}

GaussianBase::GaussianBase(const RbmParams& params)
    : weights_(params.weights()),
      visible_bias_(params.visible_bias()),
      hidden_bias_(params.hidden_bias()) {
  const SafetyCheck check = is_globally_safe(weights_);
  if (!check.safe) {
    throw NonPdRegionError("c = 1 base Gaussian needs spectral norm <= 1 (smallest eigenvalue of I - WW^T is " +
                               std::to_string(check.smallest_eigenvalue) + ")",
                           check.smallest_eigenvalue);
  }
  const double sigma_max = spectral_norm(weights_);
  if (sigma_max > 1.0 - kShrinkMargin) {
    shrink_factor_ = (1.0 - kShrinkMargin) / sigma_max;
    weights_ *= shrink_factor_;
  }
  const Eigen::Index n = weights_.rows();
  const Matrix precision = Matrix::Identity(n, n) - weights_ * weights_.transpose();
  Eigen::LLT<Matrix> prec_llt(precision);
  if (prec_llt.info() != Eigen::Success) {
    throw NumericalError("c = 1 base Gaussian: precision matrix is not positive definite");
  }
  covariance_ = prec_llt.solve(Matrix::Identity(n, n));
  covariance_ = 0.5 * (covariance_ + covariance_.transpose());
  Eigen::LLT<Matrix> cov_llt(covariance_);
  if (cov_llt.info() != Eigen::Success) {
    throw NumericalError("c = 1 base Gaussian: covariance is not positive definite");
  }
  factor_ = cov_llt.matrixL();
  const Vector linear = visible_bias_ + weights_ * hidden_bias_;
  mean_ = prec_llt.solve(linear);

  const Matrix l = prec_llt.matrixL();
  const double log_det_precision = 2.0 * l.diagonal().array().log().sum();
  log_partition_ = 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) - 0.5 * log_det_precision +
                   0.5 * linear.dot(mean_) - 0.5 * visible_bias_.squaredNorm() +
                   0.5 * hidden_bias_.squaredNorm();
}

double GaussianBase::log_unnorm_density(const Vector& v) const {
  return -0.5 * (v - visible_bias_).squaredNorm() +
         0.5 * (weights_.transpose() * v + hidden_bias_).squaredNorm();
}

Vector GaussianBase::sample(Rng& rng) const {
  Vector z(mean_.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z(i) = rng.normal();
  }
  return mean_ + factor_ * z;
}

Matrix sample_gaussian_base(const RbmParams& params, std::size_t n, std::uint64_t seed, int threads) {
  const GaussianBase base(params);
  Matrix out(static_cast<Eigen::Index>(n), params.num_visible());
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng(seed, i);
    out.row(static_cast<Eigen::Index>(i)) = base.sample(rng).transpose();
  });
  return out;
}

void gibbs_step(const RbmParams& params, GibbsState& state, Rng& rng) {
  gibbs_step(params, params.leakiness(), state, rng);
}

void gibbs_step(const RbmParams& params, double leakiness, GibbsState& state, Rng& rng) {
  if (state.v.size() != params.num_visible()) {
    throw DimensionError("Gibbs state has " + std::to_string(state.v.size()) + " visible units, model has " +
                         std::to_string(params.num_visible()));
  }
  sweep(params, leakiness, state, rng);
}

Matrix ChainSet::visible() const {
  if (states.empty()) {
    return {};
  }
  Matrix out(static_cast<Eigen::Index>(states.size()), states.front().v.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = states[i].v.transpose();
  }
  return out;
}

ChainSet run_schedule(const RbmParams& params, const Matrix& initial, const AnnealSchedule& schedule,
                      std::uint64_t seed, const SamplerOptions& options) {
  schedule.validate();
  if (initial.cols() != params.num_visible()) {
    throw DimensionError("initial states have " + std::to_string(initial.cols()) + " columns, model has " +
                         std::to_string(params.num_visible()) + " visible units");
  }
  const auto n = static_cast<std::size_t>(initial.rows());
  ChainSet chains;
  chains.rng_seed = seed;
  chains.states.resize(n);
  std::vector<Rng> rngs;
  rngs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    rngs.emplace_back(seed, i);
    chains.states[i].v = initial.row(static_cast<Eigen::Index>(i)).transpose();
    chains.states[i].h = Vector::Zero(params.num_hidden());
  }
  advance(params, chains, rngs, schedule, options);
  return chains;
}

ChainSet anneal_leakiness_sample(const RbmParams& params, const AnnealSchedule& schedule, std::size_t n_chains,
                                 std::uint64_t seed, const SamplerOptions& options) {
  check_schedule_params(params, schedule);
  return anneal_leakiness_sample(GaussianBase(params), params, schedule, n_chains, seed, options);
}

ChainSet anneal_leakiness_sample(const GaussianBase& base, const RbmParams& params,
                                 const AnnealSchedule& schedule, std::size_t n_chains, std::uint64_t seed,
                                 const SamplerOptions& options) {
  check_schedule_params(params, schedule);
  ChainSet chains;
  chains.rng_seed = seed;
  chains.states.resize(n_chains);
  std::vector<Rng> rngs;
  rngs.reserve(n_chains);
  for (std::size_t i = 0; i < n_chains; ++i) {
    rngs.emplace_back(seed, i);
  }
  parallel_for(n_chains, options.threads, [&](std::size_t i) {
    chains.states[i].v = base.sample(rngs[i]);
    chains.states[i].h = Vector::Zero(params.num_hidden());
  });
  advance(params, chains, rngs, schedule, options);
  return chains;
}

std::vector<std::size_t> mix_start_rows(std::size_t batch_rows, std::size_t n_chains, std::uint64_t seed) {
  if (batch_rows == 0) {
    throw InvalidArgument("mix_sample needs a nonempty data batch");
  }
  Rng rng(seed, kRowDrawStream);
  std::vector<std::size_t> rows(n_chains);
  for (auto& r : rows) {
    r = rng.index(batch_rows);
  }
  return rows;
}

ChainSet mix_sample(const RbmParams& params, const Matrix& data_batch, const AnnealSchedule& schedule,
                    std::size_t n_chains, std::uint64_t seed, const SamplerOptions& options) {
  check_schedule_params(params, schedule);
  const auto rows = mix_start_rows(static_cast<std::size_t>(data_batch.rows()), n_chains, seed);
  Matrix initial(static_cast<Eigen::Index>(n_chains), data_batch.cols());
  for (std::size_t i = 0; i < n_chains; ++i) {
    initial.row(static_cast<Eigen::Index>(i)) = data_batch.row(static_cast<Eigen::Index>(rows[i]));
  }
  return run_schedule(params, initial, schedule, seed, options);
}

}  // namespace lrbm
