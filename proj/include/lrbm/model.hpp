#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace lrbm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class HiddenKind : std::uint8_t { LeakyRelu = 0, Bernoulli = 1 };

/// Smallest eigenvalue above which a precision matrix counts as positive
/// definite.
inline constexpr double kPdTolerance = 1e-10;

/**
 * Parameters of an RBM with unit-variance Gaussian visible units.
 *
 * Column j of the weight matrix (length I) is the weight vector of hidden
 * unit j. The leakiness is only meaningful for LeakyRelu hidden units and
 * must lie in (0, 1]. Instances are immutable once constructed.
 */
class RbmParams {
 public:
  RbmParams(Matrix weights, Vector visible_bias, Vector hidden_bias, double leakiness,
            HiddenKind kind = HiddenKind::LeakyRelu);

  /// Zero visible bias.
  RbmParams(Matrix weights, Vector hidden_bias, double leakiness,
            HiddenKind kind = HiddenKind::LeakyRelu);

  const Matrix& weights() const noexcept { return weights_; }
  const Vector& visible_bias() const noexcept { return visible_bias_; }
  const Vector& hidden_bias() const noexcept { return hidden_bias_; }
  double leakiness() const noexcept { return leakiness_; }
  HiddenKind kind() const noexcept { return kind_; }

  Eigen::Index num_visible() const noexcept { return weights_.rows(); }
  Eigen::Index num_hidden() const noexcept { return weights_.cols(); }

  /// Same weights and biases at a different leakiness.
  RbmParams with_leakiness(double leakiness) const;
  /// Weights and hidden bias multiplied by `factor`; visible bias untouched.
  RbmParams scaled(double factor) const;

  /// Largest singular value of the weight matrix is at most 1 (within the
  /// PD tolerance), so every region has a valid precision matrix.
  bool is_safe() const;

 private:
  Matrix weights_;
  Vector visible_bias_;
  Vector hidden_bias_;
  double leakiness_;
  HiddenKind kind_;
};

/// Per-hidden-unit coefficient alpha_j in {c, 1}.
struct ActivationPattern {
  Vector alpha;
};

struct GibbsState {
  Vector v;
  Vector h;
};

/// Mean and variance of each hidden unit given the visible vector.
struct HiddenConditional {
  Vector mean;
  Vector variance;
};

/// Gaussian piece of the marginal restricted to one activation region.
struct RegionGaussian {
  Matrix precision;
  Vector mean;
  double smallest_eigenvalue = 0.0;
  bool positive_definite = false;
};

/// eta = W^T v + b.
Vector response(const RbmParams& params, const Vector& v);

/// Leaky units: N(eta, 1) when eta > 0, N(c eta, c) otherwise.
HiddenConditional hidden_conditional(const RbmParams& params, const Vector& v);

/// Bernoulli units: p(h_j = 1 | v) = sigmoid(eta_j).
Vector bernoulli_hidden_conditional(const RbmParams& params, const Vector& v);

/// Mean of p(v | h); the variance is 1 for every unit.
Vector visible_conditional(const RbmParams& params, const Vector& h);

ActivationPattern activation_pattern(const RbmParams& params, const Vector& v);

/**
 * Precision Omega = I - sum_j alpha_j W_j W_j^T and mean mu solving
 * Omega mu = a + sum_j alpha_j b_j W_j for one activation region.
 *
 * An indefinite but invertible Omega is reported through
 * `positive_definite == false`; a numerically singular one throws
 * NonPdRegionError.
 */
RegionGaussian region_precision_mean(const RbmParams& params, const ActivationPattern& pattern);

/// -||v - a||^2 / 2 + sum_j F_c(eta_j), F_c(x) = x^2/2 for x > 0 and c x^2/2 otherwise.
double log_unnorm_marginal(const RbmParams& params, const Vector& v);

/// Same as above at an overriding leakiness.
double log_unnorm_marginal(const RbmParams& params, const Vector& v, double leakiness);

/// -||v - a||^2 / 2 + sum_j softplus(eta_j).
double bernoulli_log_unnorm_marginal(const RbmParams& params, const Vector& v);

/// Dispatches on the hidden kind.
double log_unnorm_density(const RbmParams& params, const Vector& v);

/// log(1 + e^x) without overflow.
double softplus(double x) noexcept;

double sigmoid(double x) noexcept;

}  // namespace lrbm
