#include "lrbm/model.hpp"

#include "lrbm/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace lrbm {

namespace {

void check_finite(const Eigen::Ref<const Matrix>& m, const char* name) {
  if (!m.allFinite()) {
    throw InvalidArgument(std::string("non-finite entries in ") + name);
  }
}

void check_visible(const RbmParams& params, const Vector& v) {
  if (v.size() != params.num_visible()) {
    throw DimensionError("visible vector has length " + std::to_string(v.size()) + ", model expects " +
                         std::to_string(params.num_visible()));
  }
}

void check_hidden(const RbmParams& params, const Vector& h) {
  if (h.size() != params.num_hidden()) {
    throw DimensionError("hidden vector has length " + std::to_string(h.size()) + ", model expects " +
                         std::to_string(params.num_hidden()));
  }
}

void require_leaky(const RbmParams& params, const char* op) {
  if (params.kind() != HiddenKind::LeakyRelu) {
    throw InvalidArgument(std::string(op) + " requires leaky ReLU hidden units");
  }
}

double leaky_potential(double eta, double c) noexcept {
  return eta > 0.0 ? 0.5 * eta * eta : 0.5 * c * eta * eta;
}

}  // namespace

RbmParams::RbmParams(Matrix weights, Vector visible_bias, Vector hidden_bias, double leakiness,
                     HiddenKind kind)
    : weights_(std::move(weights)),
      visible_bias_(std::move(visible_bias)),
      hidden_bias_(std::move(hidden_bias)),
      leakiness_(leakiness),
      kind_(kind) {
  if (visible_bias_.size() != weights_.rows()) {
    throw DimensionError("visible bias length " + std::to_string(visible_bias_.size()) +
                         " does not match " + std::to_string(weights_.rows()) + " visible units");
  }
  if (hidden_bias_.size() != weights_.cols()) {
    throw DimensionError("hidden bias length " + std::to_string(hidden_bias_.size()) +
                         " does not match " + std::to_string(weights_.cols()) + " hidden units");
  }
  check_finite(weights_, "weights");
  check_finite(visible_bias_, "visible bias");
  check_finite(hidden_bias_, "hidden bias");
  if (kind_ == HiddenKind::LeakyRelu && !(leakiness_ > 0.0 && leakiness_ <= 1.0)) {
    throw InvalidArgument("leakiness must lie in (0, 1], got " + std::to_string(leakiness_));
  }
}

RbmParams::RbmParams(Matrix weights, Vector hidden_bias, double leakiness, HiddenKind kind)
    : RbmParams(weights, Vector::Zero(weights.rows()), std::move(hidden_bias), leakiness, kind) {}

RbmParams RbmParams::with_leakiness(double leakiness) const {
  return RbmParams(weights_, visible_bias_, hidden_bias_, leakiness, kind_);
}

RbmParams RbmParams::scaled(double factor) const {
  return RbmParams(factor * weights_, visible_bias_, factor * hidden_bias_, leakiness_, kind_);
}

bool RbmParams::is_safe() const {
  const Eigen::Index n = weights_.rows();
  const Matrix gram = Matrix::Identity(n, n) - weights_ * weights_.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return n == 0 || eig.eigenvalues()(0) > -kPdTolerance;
}

double softplus(double x) noexcept {
  // log1p(exp(x)) loses everything past ~709; split at 0.
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector response(const RbmParams& params, const Vector& v) {
  check_visible(params, v);
  return params.weights().transpose() * v + params.hidden_bias();
}

HiddenConditional hidden_conditional(const RbmParams& params, const Vector& v) {
  require_leaky(params, "hidden_conditional");
  const Vector eta = response(params, v);
  const double c = params.leakiness();
  HiddenConditional out{Vector(eta.size()), Vector(eta.size())};
  for (Eigen::Index j = 0; j < eta.size(); ++j) {
    if (eta(j) > 0.0) {
      out.mean(j) = eta(j);
      out.variance(j) = 1.0;
    } else {
      out.mean(j) = c * eta(j);
      out.variance(j) = c;
    }
  }
  return out;
}

Vector bernoulli_hidden_conditional(const RbmParams& params, const Vector& v) {
  if (params.kind() != HiddenKind::Bernoulli) {
    throw InvalidArgument("bernoulli_hidden_conditional requires Bernoulli hidden units");
  }
  return response(params, v).unaryExpr([](double x) { return sigmoid(x); });
}

Vector visible_conditional(const RbmParams& params, const Vector& h) {
  check_hidden(params, h);
  return params.weights() * h + params.visible_bias();
}

ActivationPattern activation_pattern(const RbmParams& params, const Vector& v) {
  require_leaky(params, "activation_pattern");
  const Vector eta = response(params, v);
  const double c = params.leakiness();
  return {eta.unaryExpr([c](double x) { return x > 0.0 ? 1.0 : c; })};
}

RegionGaussian region_precision_mean(const RbmParams& params, const ActivationPattern& pattern) {
  const Matrix& w = params.weights();
  if (pattern.alpha.size() != w.cols()) {
    throw DimensionError("activation pattern has " + std::to_string(pattern.alpha.size()) +
                         " entries, model has " + std::to_string(w.cols()) + " hidden units");
  }
  const Eigen::Index n = w.rows();
  RegionGaussian out;
  out.precision = Matrix::Identity(n, n) - w * pattern.alpha.asDiagonal() * w.transpose();
  Vector rhs = params.visible_bias() + w * pattern.alpha.cwiseProduct(params.hidden_bias());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(out.precision);
  const Vector& lambda = eig.eigenvalues();
  out.smallest_eigenvalue = n > 0 ? lambda(0) : 1.0;
  out.positive_definite = out.smallest_eigenvalue > kPdTolerance;
  if (n > 0 && lambda.cwiseAbs().minCoeff() <= kPdTolerance) {
    throw NonPdRegionError("non-PD region: precision matrix is singular (smallest eigenvalue " +
                               std::to_string(out.smallest_eigenvalue) + ")",
                           out.smallest_eigenvalue);
  }
  const Matrix& q = eig.eigenvectors();
  out.mean = q * (q.transpose() * rhs).cwiseQuotient(lambda);
  return out;
}

double log_unnorm_marginal(const RbmParams& params, const Vector& v) {
  return log_unnorm_marginal(params, v, params.leakiness());
}

double log_unnorm_marginal(const RbmParams& params, const Vector& v, double leakiness) {
  require_leaky(params, "log_unnorm_marginal");
  const Vector eta = response(params, v);
  double acc = -0.5 * (v - params.visible_bias()).squaredNorm();
  for (Eigen::Index j = 0; j < eta.size(); ++j) {
    acc += leaky_potential(eta(j), leakiness);
  }
  return acc;
}

double bernoulli_log_unnorm_marginal(const RbmParams& params, const Vector& v) {
  if (params.kind() != HiddenKind::Bernoulli) {
    throw InvalidArgument("bernoulli_log_unnorm_marginal requires Bernoulli hidden units");
  }
  const Vector eta = response(params, v);
  double acc = -0.5 * (v - params.visible_bias()).squaredNorm();
  for (Eigen::Index j = 0; j < eta.size(); ++j) {
    acc += softplus(eta(j));
  }
  return acc;
}

double log_unnorm_density(const RbmParams& params, const Vector& v) {
  return params.kind() == HiddenKind::LeakyRelu ? log_unnorm_marginal(params, v)
                                                 : bernoulli_log_unnorm_marginal(params, v);
}

}  // namespace lrbm
