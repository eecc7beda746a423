#include "lrbm/partition.hpp"

#include "lrbm/error.hpp"
#include "lrbm/projection.hpp"
#include "lrbm/rng.hpp"
#include "lrbm/sampler.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace lrbm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2 pi)

double log_sum_exp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

void require_leaky(const RbmParams& params, const char* op) {
  if (params.kind() != HiddenKind::LeakyRelu) {
    throw InvalidArgument(std::string(op) + " requires leaky ReLU hidden units");
  }
}

bool strictly_decreasing(const std::vector<double>& g) {
  for (std::size_t k = 1; k < g.size(); ++k) {
    if (!(g[k] < g[k - 1])) return false;
  }
  return true;
}

void check_path_endpoints(const AnnealingPath& path, const RbmParams& params) {
  path.validate();
  constexpr double tol = 1e-12;
  if (path.kind == PathKind::Leaky) {
    require_leaky(params, "leaky-path AIS");
    if (std::abs(path.grid.back() - params.leakiness()) > tol) {
      throw InvalidArgument("leaky path must end at the model leakiness " + std::to_string(params.leakiness()));
    }
  } else if (path.kind == PathKind::OneSided) {
    require_leaky(params, "one-sided-path AIS");
  }
}

// Log density of the distribution the particles are initially drawn from.
struct ParticleBase {
  PathKind kind;
  const RbmParams& params;
  const GaussianBase* gaussian = nullptr;

  Vector draw(Rng& rng) const {
    if (kind == PathKind::Energy) {
      Vector v = params.visible_bias();
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += rng.normal();
      return v;
    }
    return gaussian->sample(rng);
  }

  double log_density(const Vector& v) const {
    if (kind == PathKind::Energy) return -0.5 * (v - params.visible_bias()).squaredNorm();
    return gaussian->log_unnorm_density(v);
  }

  double log_z() const {
    if (kind == PathKind::Energy) return 0.5 * static_cast<double>(params.num_visible()) * kLog2Pi;
    return gaussian->log_partition();
  }
};

// --- quadrature helpers -----------------------------------------------------

// Smallest value of d^T Omega_alpha(d) d over unit directions d, where
// alpha(d) is the activation pattern far out along d. The marginal is
// integrable iff this is positive.
double min_directional_precision(const RbmParams& params) {
  const Matrix& w = params.weights();
  const double c = params.leakiness();
  auto q = [&](const Vector& d) {
    double acc = d.squaredNorm();
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      const double p = w.col(j).dot(d);
      acc -= (p > 0.0 ? 1.0 : c) * p * p;
    }
    return acc;
  };
  if (w.rows() == 1) {
    return std::min(q(Vector::Constant(1, 1.0)), q(Vector::Constant(1, -1.0)));
  }
  auto dir = [](double t) { return Vector((Vector(2) << std::cos(t), std::sin(t)).finished()); };
  auto wrap = [](double t) {
    const double two_pi = 2.0 * std::numbers::pi;
    t = std::fmod(t, two_pi);
    return t < 0.0 ? t + two_pi : t;
  };
  std::vector<double> cuts;
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    if (w.col(j).norm() == 0.0) continue;
    const double t = std::atan2(w(0, j), -w(1, j));
    cuts.push_back(wrap(t));
    cuts.push_back(wrap(t + std::numbers::pi));
  }
  std::sort(cuts.begin(), cuts.end());
  double best = std::numeric_limits<double>::infinity();
  if (cuts.empty()) {
    return q(dir(0.0));
  }
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    const double lo = cuts[k];
    double hi = k + 1 < cuts.size() ? cuts[k + 1] : cuts[0] + 2.0 * std::numbers::pi;
    best = std::min(best, q(dir(lo)));
    if (hi - lo <= 0.0) continue;
    const Vector mid = dir(0.5 * (lo + hi));
    Vector alpha(w.cols());
    for (Eigen::Index j = 0; j < w.cols(); ++j) alpha(j) = w.col(j).dot(mid) > 0.0 ? 1.0 : c;
    const Matrix omega = Matrix::Identity(2, 2) - w * alpha.asDiagonal() * w.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(omega);
    for (int e = 0; e < 2; ++e) {
      for (double sign : {1.0, -1.0}) {
        const Vector u = sign * eig.eigenvectors().col(e);
        double t = wrap(std::atan2(u(1), u(0)));
        if (t < lo) t += 2.0 * std::numbers::pi;
        if (t > lo && t < hi) best = std::min(best, eig.eigenvalues()(e));
      }
    }
  }
  return best;
}

// Points where most of the mass should sit, used to size the integration box.
std::vector<Vector> mass_centers(const RbmParams& params) {
  std::vector<Vector> centers{Vector::Zero(params.num_visible()), params.visible_bias()};
  const Eigen::Index j_count = params.num_hidden();
  if (j_count > 16) return centers;
  const Matrix& w = params.weights();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << j_count); ++mask) {
    Vector pick(j_count);
    for (Eigen::Index j = 0; j < j_count; ++j) pick(j) = ((mask >> j) & 1U) ? 1.0 : 0.0;
    if (params.kind() == HiddenKind::Bernoulli) {
      centers.push_back(params.visible_bias() + w * pick);
      continue;
    }
    ActivationPattern pattern{pick.unaryExpr([&](double x) { return x > 0.5 ? 1.0 : params.leakiness(); })};
    try {
      const RegionGaussian region = region_precision_mean(params, pattern);
      if (region.positive_definite) centers.push_back(region.mean);
    } catch (const NonPdRegionError&) {
    }
  }
  return centers;
}

template <typename F>
double integrate_pieces(F&& f, std::vector<double> breaks, double lo, double hi, double tol) {
  breaks.push_back(lo);
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = std::max(lo, breaks[k]);
    const double b = std::min(hi, breaks[k + 1]);
    if (!(b > a)) continue;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, tol);
  }
  return total;
}

// Integral of exp(logp(v) - shift) over [-half, half]^I for I in {1, 2}.
double box_integral(const RbmParams& params, double shift, double half, double tol) {
  const Matrix& w = params.weights();
  const Vector& b = params.hidden_bias();
  if (params.num_visible() == 1) {
    std::vector<double> breaks;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      if (w(0, j) != 0.0) breaks.push_back(-b(j) / w(0, j));
    }
    Vector v(1);
    auto f = [&](double x) {
      v(0) = x;
      return std::exp(log_unnorm_density(params, v) - shift);
    };
    return integrate_pieces(f, breaks, -half, half, tol);
  }
  // Kinks of the inner integrand sit where a hyperplane eta_j = 0 crosses the
  // vertical line; the outer integrand kinks at vertical hyperplanes and at
  // pairwise intersections.
  std::vector<double> outer_breaks;
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    if (w(1, j) == 0.0 && w(0, j) != 0.0) outer_breaks.push_back(-b(j) / w(0, j));
    for (Eigen::Index k = j + 1; k < w.cols(); ++k) {
      const double det = w(0, j) * w(1, k) - w(1, j) * w(0, k);
      if (std::abs(det) < 1e-14) continue;
      outer_breaks.push_back((-b(j) * w(1, k) + b(k) * w(1, j)) / det);
    }
  }
  auto inner = [&](double x) {
    std::vector<double> breaks;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      if (w(1, j) != 0.0) breaks.push_back(-(b(j) + w(0, j) * x) / w(1, j));
    }
    Vector v(2);
    v(0) = x;
    auto f = [&](double y) {
      v(1) = y;
      return std::exp(log_unnorm_density(params, v) - shift);
    };
    return integrate_pieces(f, breaks, -half, half, tol);
  };
  return integrate_pieces(inner, outer_breaks, -half, half, tol);
}

}  // namespace

// --- paths ------------------------------------------------------------------

AnnealingPath AnnealingPath::energy(int levels, int sweeps_per_level) {
  if (levels < 1) throw InvalidArgument("energy path needs at least one level");
  AnnealingPath p{PathKind::Energy, {}, sweeps_per_level};
  p.grid.resize(static_cast<std::size_t>(levels) + 1);
  for (int k = 0; k <= levels; ++k) p.grid[k] = 1.0 - static_cast<double>(k) / levels;
  return p;
}

AnnealingPath AnnealingPath::leaky(double target_leakiness, int levels, int sweeps_per_level) {
  if (!(target_leakiness > 0.0 && target_leakiness <= 1.0)) {
    throw InvalidArgument("leaky path target must lie in (0, 1]");
  }
  AnnealingPath p{PathKind::Leaky, {1.0}, sweeps_per_level};
  if (target_leakiness == 1.0) return p;
  if (levels < 1) throw InvalidArgument("leaky path needs at least one level");
  p.grid.resize(static_cast<std::size_t>(levels) + 1);
  for (int k = 0; k <= levels; ++k) {
    p.grid[k] = 1.0 - (1.0 - target_leakiness) * static_cast<double>(k) / levels;
  }
  p.grid.back() = target_leakiness;
  return p;
}

AnnealingPath AnnealingPath::one_sided(int levels, int sweeps_per_level) {
  AnnealingPath p = energy(levels, sweeps_per_level);
  p.kind = PathKind::OneSided;
  return p;
}

void AnnealingPath::validate() const {
  if (grid.empty()) throw InvalidArgument("annealing path has an empty grid");
  if (sweeps_per_level < 1) throw InvalidArgument("sweeps_per_level must be at least 1");
  if (!strictly_decreasing(grid)) throw InvalidArgument("annealing path grid must be strictly decreasing");
  if (grid.front() != 1.0) throw InvalidArgument("annealing path must start at 1");
  if (kind != PathKind::Leaky && grid.back() != 0.0) {
    throw InvalidArgument("energy and one-sided paths must end at beta = 0");
  }
}

double intermediate_log_density(PathKind kind, double level, const RbmParams& params, const Vector& v) {
  switch (kind) {
    case PathKind::Energy: {
      const double base = -0.5 * (v - params.visible_bias()).squaredNorm();
      const Vector eta = response(params, v);
      const double t = 1.0 - level;
      double acc = 0.0;
      if (params.kind() == HiddenKind::Bernoulli) {
        for (Eigen::Index j = 0; j < eta.size(); ++j) acc += softplus(t * eta(j));
        return base + acc;
      }
      const double c = params.leakiness();
      for (Eigen::Index j = 0; j < eta.size(); ++j) {
        acc += (eta(j) > 0.0 ? 0.5 : 0.5 * c) * eta(j) * eta(j);
      }
      return base + t * acc;
    }
    case PathKind::Leaky:
      return log_unnorm_marginal(params, v, level);
    case PathKind::OneSided:
      return level * log_unnorm_marginal(params, v, 1.0) + (1.0 - level) * log_unnorm_marginal(params, v);
  }
  throw InvalidArgument("unknown path kind");
}

LevelTransition level_transition(PathKind kind, double level, const RbmParams& params) {
  switch (kind) {
    case PathKind::Energy:
      // Leaky: scaling W and b by sqrt(1 - beta) scales every F_c(eta_j) by
      // (1 - beta). Bernoulli: the joint-level geometric path scales W, b by (1 - beta).
      if (params.kind() == HiddenKind::Bernoulli) return {params.scaled(1.0 - level), params.leakiness()};
      return {params.scaled(std::sqrt(std::max(0.0, 1.0 - level))), params.leakiness()};
    case PathKind::Leaky:
      return {params, level};
    case PathKind::OneSided:
      return {params, level + (1.0 - level) * params.leakiness()};
  }
  throw InvalidArgument("unknown path kind");
}

// --- AIS --------------------------------------------------------------------

LogZEstimate summarize_log_weights(std::vector<double> log_weights, double log_z_base) {
  LogZEstimate out;
  out.log_z_base = log_z_base;
  std::vector<double> kept;
  kept.reserve(log_weights.size());
  for (double lw : log_weights) {
    if (std::isfinite(lw)) {
      kept.push_back(lw);
    } else {
      ++out.dropped_particles;
    }
  }
  if (kept.empty()) {
    throw NumericalError("AIS: every particle has a non-finite log-weight");
  }
  const double m = *std::max_element(kept.begin(), kept.end());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double lw : kept) {
    const double w = std::exp(lw - m);
    sum += w;
    sum_sq += w * w;
  }
  const auto n = static_cast<double>(kept.size());
  const double mean = sum / n;
  out.log_z = log_z_base + m + std::log(mean);
  out.effective_sample_size = sum * sum / sum_sq;
  if (kept.size() > 1) {
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    out.standard_error = std::sqrt(var) / (mean * std::sqrt(n));
  }
  out.log_weights = std::move(kept);
  return out;
}

LogZEstimate ais_estimate(const RbmParams& params, const AnnealingPath& path, std::size_t n_particles,
                          std::uint64_t seed, int threads) {
  check_path_endpoints(path, params);
  if (n_particles == 0) throw InvalidArgument("AIS needs at least one particle");
  std::unique_ptr<GaussianBase> gaussian;
  if (path.kind != PathKind::Energy) {
    gaussian = std::make_unique<GaussianBase>(params);
  }
  const ParticleBase base{path.kind, params, gaussian.get()};

  const int levels = path.levels();
  std::vector<LevelTransition> transitions;
  transitions.reserve(static_cast<std::size_t>(std::max(levels, 0)));
  for (int k = 0; k < levels; ++k) {
    transitions.push_back(level_transition(path.kind, path.grid[k], params));
  }

  std::vector<double> log_weights(n_particles);
  parallel_for(n_particles, threads, [&](std::size_t i) {
    Rng rng(seed, i);
    GibbsState state{base.draw(rng), Vector::Zero(params.num_hidden())};
    double lw = intermediate_log_density(path.kind, path.grid[0], params, state.v) - base.log_density(state.v);
    for (int k = 1; k <= levels; ++k) {
      lw += intermediate_log_density(path.kind, path.grid[k], params, state.v) -
            intermediate_log_density(path.kind, path.grid[k - 1], params, state.v);
      if (k < levels) {
        const LevelTransition& tr = transitions[static_cast<std::size_t>(k)];
        for (int s = 0; s < path.sweeps_per_level; ++s) gibbs_step(tr.params, tr.leakiness, state, rng);
      }
    }
    log_weights[i] = lw;
  });
  return summarize_log_weights(std::move(log_weights), base.log_z());
}

// --- exact oracles ----------------------------------------------------------

double exact_log_z_orthogonal(const RbmParams& params) {
  require_leaky(params, "exact_log_z_orthogonal");
  const Matrix& w = params.weights();
  const Eigen::Index n = w.rows();
  const Eigen::Index j_count = w.cols();
  if (params.hidden_bias().cwiseAbs().maxCoeff() > 0.0 || params.visible_bias().cwiseAbs().maxCoeff() > 0.0) {
    throw InvalidArgument("exact_log_z_orthogonal requires zero biases");
  }
  if (j_count > 25) throw InvalidArgument("exact_log_z_orthogonal enumerates 2^J patterns; J must be <= 25");
  const Matrix gram = w.transpose() * w;
  for (Eigen::Index i = 0; i < j_count; ++i) {
    for (Eigen::Index k = i + 1; k < j_count; ++k) {
      if (std::abs(gram(i, k)) > 1e-8) {
        throw InvalidArgument("exact_log_z_orthogonal requires pairwise orthogonal weight columns");
      }
    }
  }
  const SafetyCheck check = is_globally_safe(w);
  if (!check.safe) {
    throw NonPdRegionError("exact_log_z_orthogonal requires I - WW^T to be PSD", check.smallest_eigenvalue);
  }
  // det(I_I - W D W^T) = det(I_J - D^1/2 W^T W D^1/2).
  const double c = params.leakiness();
  const double log_prefactor = 0.5 * static_cast<double>(n) * kLog2Pi - static_cast<double>(j_count) * std::log(2.0);
  std::vector<double> terms(std::size_t{1} << j_count);
  for (std::uint64_t mask = 0; mask < terms.size(); ++mask) {
    Vector root_alpha(j_count);
    for (Eigen::Index j = 0; j < j_count; ++j) root_alpha(j) = ((mask >> j) & 1U) ? 1.0 : std::sqrt(c);
    const Matrix m = Matrix::Identity(j_count, j_count) - root_alpha.asDiagonal() * gram * root_alpha.asDiagonal();
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success || (j_count > 0 && llt.matrixLLT().diagonal().minCoeff() <= 0.0)) {
      throw NonPdRegionError("exact_log_z_orthogonal: a region precision matrix is singular", 0.0);
    }
    const Matrix l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    terms[mask] = log_prefactor - 0.5 * log_det;
  }
  return log_sum_exp(terms);
}

double gaussian_log_z(const RbmParams& params) {
  const Matrix& w = params.weights();
  const Eigen::Index n = w.rows();
  const Matrix precision = Matrix::Identity(n, n) - w * w.transpose();
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(precision, Eigen::EigenvaluesOnly);
    throw NonPdRegionError("c = 1 Gaussian: I - WW^T is not positive definite", eig.eigenvalues()(0));
  }
  const Vector linear = params.visible_bias() + w * params.hidden_bias();
  const Vector mean = llt.solve(linear);
  const Matrix l = llt.matrixL();
  return 0.5 * static_cast<double>(n) * kLog2Pi - l.diagonal().array().log().sum() + 0.5 * linear.dot(mean) -
         0.5 * params.visible_bias().squaredNorm() + 0.5 * params.hidden_bias().squaredNorm();
}

double exact_log_z_bernoulli(const RbmParams& params) {
  if (params.kind() != HiddenKind::Bernoulli) {
    throw InvalidArgument("exact_log_z_bernoulli requires Bernoulli hidden units");
  }
  const Eigen::Index j_count = params.num_hidden();
  if (j_count > 25) throw InvalidArgument("exact_log_z_bernoulli enumerates 2^J states; J must be <= 25");
  const Matrix& w = params.weights();
  const Vector& a = params.visible_bias();
  const double base = 0.5 * static_cast<double>(params.num_visible()) * kLog2Pi - 0.5 * a.squaredNorm();
  std::vector<double> terms(std::size_t{1} << j_count);
  Vector h(j_count);
  for (std::uint64_t mask = 0; mask < terms.size(); ++mask) {
    for (Eigen::Index j = 0; j < j_count; ++j) h(j) = ((mask >> j) & 1U) ? 1.0 : 0.0;
    terms[mask] = base + 0.5 * (a + w * h).squaredNorm() + params.hidden_bias().dot(h);
  }
  return log_sum_exp(terms);
}

double quadrature_log_z(const RbmParams& params, double tolerance) {
  const Eigen::Index dim = params.num_visible();
  if (dim < 1 || dim > 2) {
    throw InvalidArgument("quadrature_log_z supports 1 or 2 visible units, got " + std::to_string(dim));
  }
  double min_q = 1.0;
  if (params.kind() == HiddenKind::LeakyRelu) {
    min_q = min_directional_precision(params);
    if (min_q <= 1e-12) {
      throw DivergenceError("marginal is not integrable: a region's precision matrix is not PD along a direction "
                            "inside the region (smallest directional precision " + std::to_string(min_q) + ")");
    }
  }
  const double max_sd = 1.0 / std::sqrt(min_q);

  const std::vector<Vector> centers = mass_centers(params);
  double radius = 0.0;
  double shift = -std::numeric_limits<double>::infinity();
  for (const Vector& x : centers) {
    radius = std::max(radius, x.cwiseAbs().maxCoeff());
    shift = std::max(shift, log_unnorm_density(params, x));
  }
  double half = radius + 10.0 * max_sd;

  // Grow the box until the density on its boundary is negligible next to the
  // largest value seen inside it.
  Vector v(dim);
  for (int attempt = 0; attempt < 40; ++attempt) {
    constexpr int kScan = 200;
    double boundary_max = -std::numeric_limits<double>::infinity();
    for (int s = 0; s <= kScan; ++s) {
      const double t = -half + 2.0 * half * s / kScan;
      if (dim == 1) {
        for (double x : {-half, half, t}) {
          v(0) = x;
          shift = std::max(shift, log_unnorm_density(params, v));
        }
        v(0) = -half;
        boundary_max = std::max(boundary_max, log_unnorm_density(params, v));
        v(0) = half;
        boundary_max = std::max(boundary_max, log_unnorm_density(params, v));
        continue;
      }
      for (int r = 0; r <= kScan; r += 4) {
        v << t, -half + 2.0 * half * r / kScan;
        shift = std::max(shift, log_unnorm_density(params, v));
      }
      for (const auto& p : {std::pair{t, -half}, {t, half}, {-half, t}, {half, t}}) {
        v << p.first, p.second;
        boundary_max = std::max(boundary_max, log_unnorm_density(params, v));
      }
    }
    if (boundary_max < shift - 60.0) break;
    half *= 1.5;
  }

  double previous = std::numeric_limits<double>::quiet_NaN();
  double estimate = 0.0;
  for (double tol = 1e-7; tol >= 1e-15; tol *= 1e-2) {
    estimate = box_integral(params, shift, half, tol);
    if (!(estimate > 0.0) || !std::isfinite(estimate)) {
      throw NumericalError("quadrature_log_z: integral is not finite and positive");
    }
    if (std::isfinite(previous) && std::abs(estimate - previous) <= tolerance * estimate) break;
    previous = estimate;
  }
  return shift + std::log(estimate);
}

double eval_mean_log_likelihood(const RbmParams& params, const Matrix& data, double log_z) {
  if (!std::isfinite(log_z)) throw InvalidArgument("eval_mean_log_likelihood needs a finite log Z");
  if (data.rows() == 0) throw InvalidArgument("eval_mean_log_likelihood needs at least one row");
  if (data.cols() != params.num_visible()) {
    throw DimensionError("data has " + std::to_string(data.cols()) + " columns, model has " +
                         std::to_string(params.num_visible()) + " visible units");
  }
  double acc = 0.0;
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    acc += log_unnorm_density(params, data.row(r).transpose()) - log_z;
  }
  return acc / static_cast<double>(data.rows());
}

}  // namespace lrbm
