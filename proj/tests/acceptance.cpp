// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "cli.hpp"

#include "lrbm/experiments.hpp"
#include "lrbm/partition.hpp"
#include "lrbm/projection.hpp"
#include "lrbm/sampler.hpp"
#include "gradient_check.hpp"
#include "oracles.hpp"

#include <Eigen/Eigenvalues>

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace lrbm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double min_eig(const Matrix& m) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

Outcome oracle_agreement() {
  Rng rng(2024);
  double worst = 0.0;
  const double cs[] = {0.01, 0.1, 0.5, 1.0};
  for (int t = 0; t < 20; ++t) {
    const int j = 1 + t % 2;
    const double c = cs[(t / 2) % 4];
    const RbmParams p = orthogonal_model(2, j, 0.1 + 0.89 * rng.uniform(), c, rng.next_u64());
    const double exact = exact_log_z_orthogonal(p);
    worst = std::max(worst, std::abs(quadrature_log_z(p) - exact) / std::abs(exact));
  }
  return {worst <= 1e-6, "max relative difference " + fmt("%.2e", worst) + " over 20 instances"};
}

Outcome table_pattern() {
  const PartitionBiasSettings s;
  const std::vector<BiasRow> rows = run_partition_bias(s, 0);
  std::vector<const BiasRow*> energy, leaky;
  for (const auto& r : rows) (r.method == "energy" ? energy : leaky).push_back(&r);
  bool ok = energy.size() == s.hidden.size() && leaky.size() == s.hidden.size();
  std::ostringstream d;
  const double root_n = std::sqrt(static_cast<double>(s.repeats));
  for (std::size_t k = 0; ok && k < leaky.size(); ++k) {
    const double l = std::abs(leaky[k]->bias_mean);
    const double e = std::abs(energy[k]->bias_mean);
    d << "J=" << leaky[k]->hidden << " leaky " << fmt("%.3f", l) << " energy " << fmt("%.3f", e) << "; ";
    ok = ok && l <= 0.15;
    if (leaky[k]->hidden >= 8) ok = ok && e >= 2.0 * l;
    if (k > 0) {
      const double se = std::hypot(leaky[k]->bias_sd, leaky[k - 1]->bias_sd) / root_n;
      ok = ok && l >= std::abs(leaky[k - 1]->bias_mean) - 2.0 * se;
    }
  }
  return {ok, d.str()};
}

Outcome psd_property() {
  Rng rng(7);
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 200; ++t) {
    const auto rows = static_cast<Eigen::Index>(2 + rng.index(7));
    const auto cols = static_cast<Eigen::Index>(1 + rng.index(8));
    const Matrix w = project_spectral(oracle::random_matrix(rows, cols, rng) * (0.5 + 2.0 * rng.uniform())).weights;
    for (int k = 0; k < 200; ++k) {
      Matrix omega = Matrix::Identity(rows, rows);
      for (Eigen::Index j = 0; j < cols; ++j) omega -= rng.uniform() * w.col(j) * w.col(j).transpose();
      worst = std::min(worst, min_eig(omega));
    }
  }
  return {worst >= -1e-10, "smallest eigenvalue " + fmt("%.3e", worst) + " over 40000 (W, alpha) pairs"};
}

Outcome projection_optimality() {
  // uniform grid over [-1, 1]^4, keeping points with spectral norm <= 1
  const int n = 46;
  std::vector<Eigen::Matrix2d> feasible;
  for (long i = 0; i < static_cast<long>(n) * n * n * n; ++i) {
    Eigen::Matrix2d g;
    long k = i;
    for (int e = 0; e < 4; ++e, k /= n) g(e / 2, e % 2) = -1.0 + 2.0 * static_cast<double>(k % n) / (n - 1);
    if (spectral_norm(g) <= 1.0) feasible.push_back(g);
  }
  Rng rng(11);
  bool ok = feasible.size() >= 1000000;
  double worst_gap = -std::numeric_limits<double>::infinity();
  double worst_idem = 0.0;
  for (int t = 0; t < 50; ++t) {
    Matrix w = oracle::random_matrix(2, 2, rng) * 1.5;
    const Matrix p = project_spectral(w).weights;
    worst_idem = std::max(worst_idem, (project_spectral(p).weights - p).cwiseAbs().maxCoeff());
    const Eigen::Matrix2d w2 = w;
    double grid_best = std::numeric_limits<double>::infinity();
    for (const auto& g : feasible) grid_best = std::min(grid_best, (w2 - g).squaredNorm());
    worst_gap = std::max(worst_gap, (w - p).norm() - std::sqrt(grid_best));
  }
  ok = ok && worst_gap <= 1e-6 && worst_idem <= 1e-12;
  return {ok, std::to_string(feasible.size()) + " feasible grid points; max (projection - grid) distance " +
                  fmt("%.3e", worst_gap) + "; idempotence error " + fmt("%.1e", worst_idem)};
}

Outcome gradient_check() {
  const oracle::GradientComparison g = oracle::compare_gradient(0.1, 100000, 200, 7);
  return {g.relative_w < 0.02 && g.relative_b < 0.02,
          "relative error W " + fmt("%.4f", g.relative_w) + ", b " + fmt("%.4f", g.relative_b)};
}

Outcome gaussian_chain() {
  Matrix w(2, 2);
  w << 0.5, 0.3, -0.4, 0.45;
  Vector a(2), b(2);
  a << 0.2, -0.1;
  b << 0.6, -0.4;
  const RbmParams p(w, a, b, 1.0);
  const Matrix cov = oracle::gaussian_covariance(w);
  const Vector mean = oracle::gaussian_mean(w, a, b);
  bool ok = true;
  std::ostringstream d;

  auto moments_ok = [&](const Matrix& x, bool with_cov) {
    const double n = static_cast<double>(x.rows());
    const Vector m = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - m.transpose();
    const Matrix c = centered.transpose() * centered / (n - 1);
    double z = 0.0;
    for (Eigen::Index i = 0; i < 2; ++i) {
      z = std::max(z, std::abs(m(i) - mean(i)) / std::sqrt(cov(i, i) / n));
      if (!with_cov) continue;
      for (Eigen::Index k = 0; k < 2; ++k) {
        const double se = std::sqrt((cov(i, i) * cov(k, k) + cov(i, k) * cov(i, k)) / n);
        z = std::max(z, std::abs(c(i, k) - cov(i, k)) / se);
      }
    }
    return z;
  };

  const double z_base = moments_ok(sample_gaussian_base(p, 100000, 1), true);
  const double z_gibbs =
      moments_ok(run_schedule(p, Matrix::Zero(10000, 2), AnnealSchedule::constant(1.0, 500), 2).visible(), false);
  ok = ok && z_base <= 3.0 && z_gibbs <= 3.0;
  d << "base moments max z " << fmt("%.2f", z_base) << ", Gibbs means max z " << fmt("%.2f", z_gibbs);

  const double closed = gaussian_log_z(p);
  const double quad = quadrature_log_z(p);
  const LogZEstimate leaky = ais_estimate(p, AnnealingPath::leaky(1.0, 100), 500, 3);
  const LogZEstimate one_sided = ais_estimate(p, AnnealingPath::one_sided(100), 500, 4);
  const LogZEstimate energy = ais_estimate(p, AnnealingPath::energy(200), 2000, 5);
  ok = ok && std::abs(quad - closed) <= 1e-8 * std::abs(closed);
  ok = ok && std::abs(leaky.log_z - closed) <= 1e-8 && std::abs(one_sided.log_z - closed) <= 1e-8;
  ok = ok && std::abs(energy.log_z - closed) <= 3.0 * energy.standard_error;
  d << "; log Z closed " << fmt("%.6f", closed) << ", quadrature " << fmt("%+.1e", quad - closed) << ", AIS leaky "
    << fmt("%+.1e", leaky.log_z - closed) << ", one-sided " << fmt("%+.1e", one_sided.log_z - closed)
    << ", energy " << fmt("%+.4f", energy.log_z - closed) << " (se " << fmt("%.4f", energy.standard_error) << ")";
  return {ok, d.str()};
}

Outcome divergence_demo() {
  int good = 0;
  std::ostringstream d;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto traces = run_divergence(DivergenceSettings{}, seed);
    bool projected_ok = false, unprojected_ok = false;
    for (const auto& t : traces) {
      double peak = 0.0;
      for (double x : t.mean_abs_v) peak = std::max(peak, x);
      if (t.model == "projected") projected_ok = t.safe && !t.diverged_at && peak < 10.0;
      if (t.model == "unprojected") unprojected_ok = !t.safe && (t.diverged_at.has_value() || peak > 1e6);
    }
    good += projected_ok && unprojected_ok;
  }
  d << good << "/10 seeds: unprojected model unsafe and blows up, projected stays below 10";
  return {good >= 9, d.str()};
}

Outcome path_equivalence() {
  Matrix w(2, 2);
  w << 0.6, -0.35, 0.25, 0.55;
  const RbmParams p(w, Vector::Zero(2), 0.1);
  int agree = 0;
  double worst = 0.0;
  for (std::uint64_t r = 0; r < 10; ++r) {
    const LogZEstimate a = ais_estimate(p, AnnealingPath::one_sided(100), 1000, 2 * r);
    const LogZEstimate b = ais_estimate(p, AnnealingPath::leaky(0.1, 100), 1000, 2 * r + 1);
    const double z = std::abs(a.log_z - b.log_z) / std::hypot(a.standard_error, b.standard_error);
    worst = std::max(worst, z);
    agree += z <= 3.0;
  }
  return {agree == 10, std::to_string(agree) + "/10 repeats within 3 combined SE (max " + fmt("%.2f", worst) + ")"};
}

Outcome mixing_direction() {
  const MixingSettings s;
  int leaky_wins = 0, mix_wins = 0;
  double mean_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    double cd = 0, lk = 0, mx = 0;
    for (const auto& r : run_mixing(s, seed)) {
      if (r.epoch != s.epochs) continue;
      (r.method == "cd" ? cd : r.method == "leaky" ? lk : mx) = r.loglik;
    }
    const bool finite = std::isfinite(cd);
    leaky_wins += std::isfinite(lk) && (!finite || lk >= cd);
    mix_wins += std::isfinite(mx) && (!finite || mx >= cd);
    if (finite && std::isfinite(lk)) mean_gap += (lk - cd) / 10.0;
  }
  return {leaky_wins >= 8 && mix_wins >= 7, "leaky >= CD in " + std::to_string(leaky_wins) + "/10, mix >= CD in " +
                                                 std::to_string(mix_wins) + "/10; mean leaky - CD " +
                                                 fmt("%+.2e", mean_gap) + " nats"};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / ("lrbm_accept_" + std::to_string(::getpid()));
  bool ok = true;
  std::string detail;
  for (const std::string name : {"partition-bias", "mixing", "divergence", "likelihood-compare"}) {
    std::string csv[2];
    for (int k = 0; k < 2; ++k) {
      const std::string dir = (root / std::to_string(k)).string();
      const char* argv[] = {"lrbm", "--out", dir.c_str(), "--seed", "5", "--threads", "2", "experiment", name.c_str()};
      std::ostringstream out, err;
      if (cli_main(9, argv, out, err) != 0) ok = false;
      csv[k] = slurp(fs::path(dir) / (name + ".csv"));
    }
    const bool same = !csv[0].empty() && csv[0] == csv[1];
    ok = ok && same;
    detail += name + (same ? " identical; " : " DIFFERS; ");
  }
  fs::remove_all(root);
  return {ok, detail};
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  struct Criterion {
    const char* name;
    double limit_seconds;  // <= 0: no limit
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {"oracle agreement (orthogonal closed form vs quadrature)", 60, oracle_agreement},
      {"partition bias pattern, I = 64, c = 0.01", 600, table_pattern},
      {"I - sum alpha_j W_j W_j^T stays PSD", 60, psd_property},
      {"projection is grid-optimal and idempotent", 60, projection_optimality},
      {"gradient estimator vs finite differences", 300, gradient_check},
      {"c = 1 exactness chain", 120, gaussian_chain},
      {"divergence without projection", 300, divergence_demo},
      {"one-sided and leaky paths agree", 120, path_equivalence},
      {"annealed negative phase vs CD", 600, mixing_direction},
      {"CLI experiments are byte-reproducible", 0, cli_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    const bool in_time = criteria[i].limit_seconds <= 0 || secs <= criteria[i].limit_seconds;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].name << " — " << o.detail << " ["
              << fmt("%.1f", secs) << " s" << (in_time ? "" : ", over time limit") << "]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
