#include "lrbm/error.hpp"
#include "lrbm/model.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace lrbm;

namespace {

RbmParams make(std::initializer_list<std::initializer_list<double>> w, std::initializer_list<double> b, double c,
               HiddenKind kind = HiddenKind::LeakyRelu) {
  Matrix m(static_cast<Eigen::Index>(w.size()), static_cast<Eigen::Index>(w.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : w) {
    Eigen::Index j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  Vector bv(static_cast<Eigen::Index>(b.size()));
  Eigen::Index j = 0;
  for (double x : b) bv(j++) = x;
  return RbmParams(m, bv, c, kind);
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("construction validates shapes, values and leakiness") {
  CHECK_THROWS_AS(RbmParams(Matrix::Zero(2, 2), Vector::Zero(3), 0.5), DimensionError);
  CHECK_THROWS_AS(RbmParams(Matrix::Zero(2, 2), Vector::Zero(1), Vector::Zero(2), 0.5), DimensionError);
  CHECK_THROWS_AS(RbmParams(Matrix::Zero(2, 2), Vector::Zero(2), 0.0), InvalidArgument);
  CHECK_THROWS_AS(RbmParams(Matrix::Zero(2, 2), Vector::Zero(2), 1.5), InvalidArgument);
  Matrix w = Matrix::Zero(2, 2);
  w(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(RbmParams(w, Vector::Zero(2), 0.5), InvalidArgument);
  // leakiness is irrelevant for Bernoulli units
  CHECK_NOTHROW(RbmParams(Matrix::Zero(2, 2), Vector::Zero(2), 7.0, HiddenKind::Bernoulli));
}

TEST_CASE("response") {
  const RbmParams p = make({{1}, {0}}, {0.5}, 0.1);
  CHECK(response(p, vec({2, 7}))(0) == doctest::Approx(2.5));
  CHECK(response(p, Vector::Zero(2)) == p.hidden_bias());
  CHECK_THROWS_AS(response(p, Vector::Zero(3)), DimensionError);

  Rng rng(1);
  const Matrix w = oracle::random_matrix(3, 2, rng);
  const Vector b = oracle::random_vector(2, rng);
  const Vector v = oracle::random_vector(3, rng);
  const Vector eta = response(RbmParams(w, b, 0.3), v);
  for (int j = 0; j < 2; ++j) {
    double e = b(j);
    for (int i = 0; i < 3; ++i) e += w(i, j) * v(i);
    CHECK(eta(j) == doctest::Approx(e).epsilon(1e-14));
  }
}

TEST_CASE("leaky hidden conditional branches") {
  // J = 3 units with eta = (2, -2, 0) at v = 1
  const RbmParams p = make({{2, -2, 0}}, {0, 0, 0}, 0.1);
  const HiddenConditional hc = hidden_conditional(p, vec({1}));
  CHECK(hc.mean(0) == 2.0);
  CHECK(hc.variance(0) == 1.0);
  CHECK(hc.mean(1) == doctest::Approx(-0.2));
  CHECK(hc.variance(1) == 0.1);
  CHECK(hc.mean(2) == 0.0);
  CHECK(hc.variance(2) == 0.1);  // boundary takes the leaky branch

  const HiddenConditional half = hidden_conditional(p.with_leakiness(0.5), vec({1}));
  CHECK(half.variance(2) == 0.5);

  // variances are exactly 1 or exactly c, never in between
  Rng rng(3);
  const RbmParams q(oracle::random_matrix(4, 6, rng), oracle::random_vector(6, rng), 0.37);
  for (int t = 0; t < 50; ++t) {
    const HiddenConditional r = hidden_conditional(q, oracle::random_vector(4, rng));
    for (Eigen::Index j = 0; j < 6; ++j) CHECK((r.variance(j) == 1.0 || r.variance(j) == 0.37));
  }
}

TEST_CASE("Bernoulli hidden conditional") {
  const RbmParams p = make({{0, 50, 1}}, {0, 0, 0}, 1.0, HiddenKind::Bernoulli);
  const Vector prob = bernoulli_hidden_conditional(p, vec({1}));
  CHECK(prob(0) == 0.5);
  CHECK(std::abs(prob(1) - 1.0) <= 1e-15);
  CHECK(prob(2) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));
}

TEST_CASE("visible conditional") {
  Rng rng(4);
  const Matrix w = oracle::random_matrix(3, 2, rng);
  const Vector a = oracle::random_vector(3, rng);
  const RbmParams p(w, a, Vector::Zero(2), 0.2);
  CHECK(visible_conditional(p, Vector::Zero(2)) == a);
  const RbmParams q(w, Vector::Zero(2), 0.2);
  CHECK((visible_conditional(q, vec({1, 0})) - w.col(0)).norm() == 0.0);
  const Vector h = oracle::random_vector(2, rng);
  const Vector m = visible_conditional(p, h);
  for (int i = 0; i < 3; ++i) CHECK(m(i) == doctest::Approx(a(i) + w(i, 0) * h(0) + w(i, 1) * h(1)));
}

TEST_CASE("activation pattern") {
  const RbmParams p = make({{3, -1, 0}}, {0, 0, 0}, 0.2);
  const Vector alpha = activation_pattern(p, vec({1})).alpha;
  CHECK(alpha(0) == 1.0);
  CHECK(alpha(1) == 0.2);
  CHECK(alpha(2) == 0.2);
  CHECK(activation_pattern(p.with_leakiness(1.0), vec({-4})).alpha == Vector::Ones(3));

  Rng rng(5);
  const RbmParams q(oracle::random_matrix(3, 5, rng), oracle::random_vector(5, rng), 0.3);
  for (int t = 0; t < 100; ++t) {
    const Vector v = oracle::random_vector(3, rng);
    const Vector eta = response(q, v);
    const Vector al = activation_pattern(q, v).alpha;
    for (int j = 0; j < 5; ++j) CHECK(al(j) == (eta(j) > 0 ? 1.0 : 0.3));
    // piecewise constant: a perturbation too small to flip any sign keeps the pattern
    const double margin = eta.cwiseAbs().minCoeff();
    const Vector dv = oracle::random_vector(3, rng).normalized() * 0.5 * margin / q.weights().norm();
    CHECK(activation_pattern(q, v + dv).alpha == al);
  }
}

TEST_CASE("region precision and mean") {
  const RbmParams zero(Matrix::Zero(2, 1), Vector::Zero(1), 0.3);
  const RegionGaussian g0 = region_precision_mean(zero, {Vector::Ones(1)});
  CHECK(g0.precision == Matrix::Identity(2, 2));
  CHECK(g0.mean == Vector::Zero(2));
  CHECK(g0.positive_definite);

  const RbmParams p = make({{0.6}, {0}}, {0}, 0.1);
  const RegionGaussian g = region_precision_mean(p, {vec({0.1})});
  CHECK(g.precision(0, 0) == doctest::Approx(1 - 0.036));
  CHECK(g.precision(1, 1) == 1.0);
  CHECK(g.precision(0, 1) == 0.0);

  // c = 1: N((I - WW^T)^-1 W b, ...), and the all-ones pattern agrees
  Rng rng(6);
  const Matrix w = oracle::with_spectral_norm(oracle::random_matrix(3, 2, rng), 0.8);
  const Vector b = oracle::random_vector(2, rng);
  const RbmParams c1(w, b, 1.0);
  const RegionGaussian gc = region_precision_mean(c1, activation_pattern(c1, Vector::Zero(3)));
  const RegionGaussian g1 = region_precision_mean(c1, {Vector::Ones(2)});
  CHECK((gc.precision - g1.precision).norm() == 0.0);
  CHECK((gc.mean - oracle::gaussian_mean(w, Vector::Zero(3), b)).norm() < 1e-12);

  // indefinite but invertible: reported, not thrown
  const RbmParams big = make({{1.5}, {0}}, {0}, 0.1);
  const RegionGaussian gb = region_precision_mean(big, {vec({1.0})});
  CHECK_FALSE(gb.positive_definite);
  CHECK(gb.smallest_eigenvalue == doctest::Approx(1 - 2.25));

  // singular: explicit error carrying the eigenvalue
  const RbmParams unit = make({{1.0}, {0}}, {0}, 0.1);
  try {
    region_precision_mean(unit, {vec({1.0})});
    FAIL("expected NonPdRegionError");
  } catch (const NonPdRegionError& e) {
    CHECK(std::abs(e.smallest_eigenvalue()) < 1e-12);
  }
}

TEST_CASE("leaky marginal") {
  const RbmParams p(Matrix::Zero(2, 2), Vector::Zero(2), 0.1);
  CHECK(log_unnorm_marginal(p, Vector::Zero(2)) == 0.0);

  const RbmParams one = make({{0.5}}, {0}, 0.1);
  CHECK(log_unnorm_marginal(one, vec({-2})) == doctest::Approx(-1.95).epsilon(1e-14));

  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const Matrix w = oracle::with_spectral_norm(oracle::random_matrix(4, 3, rng), 0.9);
    const Vector a = oracle::random_vector(4, rng);
    const Vector b = oracle::random_vector(3, rng);
    const Vector v = oracle::random_vector(4, rng, 2.0);
    const RbmParams q(w, a, b, 0.25);
    CHECK(log_unnorm_marginal(q, v) == doctest::Approx(oracle::leaky_marginal(w, a, b, 0.25, v)).epsilon(1e-12));
    CHECK(log_unnorm_marginal(q, v, 0.6) == doctest::Approx(oracle::leaky_marginal(w, a, b, 0.6, v)).epsilon(1e-12));

    // c = 1 is the Gaussian quadratic form -v^T Omega v / 2 + (Wb)^T v + ||b||^2 / 2 (a = 0)
    const RbmParams g(w, b, 1.0);
    const Matrix omega = Matrix::Identity(4, 4) - w * w.transpose();
    const double quad = -0.5 * v.dot(omega * v) + (w * b).dot(v) + 0.5 * b.squaredNorm();
    CHECK(log_unnorm_marginal(g, v) == doctest::Approx(quad).epsilon(1e-10));
  }
}

TEST_CASE("Bernoulli marginal") {
  const RbmParams p(Matrix::Zero(2, 3), Vector::Zero(3), 1.0, HiddenKind::Bernoulli);
  CHECK(bernoulli_log_unnorm_marginal(p, Vector::Zero(2)) == doctest::Approx(3 * std::log(2.0)));

  const RbmParams sat = make({{1}}, {-51}, 1.0, HiddenKind::Bernoulli);
  CHECK(std::abs(bernoulli_log_unnorm_marginal(sat, vec({1})) + 0.5) < 1e-20);
  CHECK(std::isfinite(softplus(800.0)));
  CHECK(softplus(800.0) == 800.0);

  Rng rng(8);
  for (const int j : {2, 5, 10}) {
    const Matrix w = oracle::random_matrix(2, j, rng);
    const Vector a = oracle::random_vector(2, rng);
    const Vector b = oracle::random_vector(j, rng);
    const RbmParams q(w, a, b, 1.0, HiddenKind::Bernoulli);
    for (int t = 0; t < 10; ++t) {
      const Vector v = oracle::random_vector(2, rng);
      CHECK(bernoulli_log_unnorm_marginal(q, v) ==
            doctest::Approx(oracle::bernoulli_marginal(w, a, b, v)).epsilon(1e-9));
      CHECK(log_unnorm_density(q, v) == bernoulli_log_unnorm_marginal(q, v));
    }
  }
}

TEST_CASE("safety flag and scaled copies") {
  CHECK(make({{0.6}, {0.8}}, {0}, 0.1).is_safe());
  CHECK_FALSE(make({{1.5}, {0}}, {0}, 0.1).is_safe());
  const RbmParams p = make({{1.0, 2.0}}, {3.0, 4.0}, 0.1);
  const RbmParams s = p.scaled(0.5);
  CHECK(s.weights()(0, 1) == 1.0);
  CHECK(s.hidden_bias()(1) == 2.0);
}
