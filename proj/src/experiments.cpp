#include "lrbm/experiments.hpp"

#include "lrbm/dataset.hpp"
#include "lrbm/error.hpp"
#include "lrbm/partition.hpp"
#include "lrbm/projection.hpp"
#include "lrbm/rng.hpp"
#include "lrbm/sampler.hpp"

#include <Eigen/QR>

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace lrbm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? kNaN : s / static_cast<double>(xs.size());
}

double sd_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

// Ground-truth model for the I = 2 and likelihood experiments: Gaussian
// weights rescaled to spectral norm `norm`, hidden biases N(0, 0.5^2).
RbmParams ground_truth(Eigen::Index visible, Eigen::Index hidden, double norm, double leakiness, std::uint64_t seed) {
  Rng rng(seed, 1);
  Matrix w = gaussian_matrix(visible, hidden, rng);
  w *= norm / spectral_norm(w);
  Vector b(hidden);
  for (Eigen::Index j = 0; j < hidden; ++j) b(j) = 0.5 * rng.normal();
  return RbmParams(w, b, leakiness, HiddenKind::LeakyRelu);
}

// Per-row log-likelihood summary: mean and standard error of the mean.
std::pair<double, double> held_out_loglik(const RbmParams& params, const Matrix& data, double log_z) {
  std::vector<double> ll(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    ll[static_cast<std::size_t>(r)] = log_unnorm_density(params, data.row(r).transpose()) - log_z;
  }
  return {mean_of(ll), sd_of(ll) / std::sqrt(static_cast<double>(ll.size()))};
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

RbmParams orthogonal_model(Eigen::Index num_visible, Eigen::Index num_hidden, double column_norm, double leakiness,
                           std::uint64_t seed) {
  if (num_hidden > num_visible) throw InvalidArgument("orthogonal columns need J <= I");
  Rng rng(seed, 0);
  const Matrix g = gaussian_matrix(num_visible, num_hidden, rng);
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ() * Matrix::Identity(num_visible, num_hidden);
  return RbmParams(column_norm * q, Vector::Zero(num_hidden), leakiness, HiddenKind::LeakyRelu);
}

Matrix sample_model(const RbmParams& params, std::size_t n, std::uint64_t seed, int steps) {
  const auto schedule = AnnealSchedule::with_default_rate(params.leakiness(), steps);
  return anneal_leakiness_sample(params, schedule, n, seed).visible();
}

// ---------------------------------------------------------------- partition bias

std::vector<BiasRow> run_partition_bias(const PartitionBiasSettings& s, std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  std::vector<BiasRow> rows;
  for (const int hidden : s.hidden) {
    const RbmParams params =
        orthogonal_model(s.visible, hidden, s.column_norm, s.leakiness, derive_seed(seed, static_cast<std::uint64_t>(hidden)));
    const double exact = exact_log_z_orthogonal(params);
    const std::array<AnnealingPath, 2> paths{AnnealingPath::energy(s.levels),
                                             AnnealingPath::leaky(s.leakiness, s.levels)};
    const std::array<const char*, 2> names{"energy", "leaky"};
    for (std::size_t m = 0; m < paths.size(); ++m) {
      BiasRow row;
      row.hidden = hidden;
      row.method = names[m];
      row.particles = s.particles;
      row.levels = paths[m].levels();
      std::vector<double> stderrs;
      const auto start = Clock::now();
      for (int r = 0; r < s.repeats; ++r) {
        const std::uint64_t run_seed = derive_seed(seed, (static_cast<std::uint64_t>(hidden) << 32) |
                                                             (static_cast<std::uint64_t>(r) << 1) | m);
        const LogZEstimate est = ais_estimate(params, paths[m], s.particles, run_seed, s.threads);
        row.biases.push_back(est.log_z - exact);
        stderrs.push_back(est.standard_error);
      }
      row.seconds = s.timing ? std::chrono::duration<double>(Clock::now() - start).count() : kNaN;
      row.bias_mean = mean_of(row.biases);
      row.bias_sd = sd_of(row.biases);
      row.mean_stderr = mean_of(stderrs);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string partition_bias_csv(const std::vector<BiasRow>& rows) {
  std::ostringstream out;
  out << "J,method,bias_mean,bias_sd,particles,levels,seconds\n";
  for (const auto& r : rows) {
    out << r.hidden << ',' << r.method << ',' << format_number(r.bias_mean) << ',' << format_number(r.bias_sd) << ','
        << r.particles << ',' << r.levels << ',' << format_number(r.seconds) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------- mixing

std::vector<MixingRow> run_mixing(const MixingSettings& s, std::uint64_t seed) {
  const RbmParams truth = ground_truth(2, s.hidden, s.true_norm, s.leakiness, seed);
  const Matrix train_data = sample_model(truth, s.train_rows, derive_seed(seed, 2));
  const Matrix test_data = sample_model(truth, s.test_rows, derive_seed(seed, 3));
  const RbmParams start = initial_params(2, s.hidden, s.leakiness, HiddenKind::LeakyRelu, derive_seed(seed, 4));

  std::vector<MixingRow> rows;
  const std::array<std::pair<NegativeSampler, const char*>, 3> methods{
      {{NegativeSampler::CD, "cd"}, {NegativeSampler::LeakyAnneal, "leaky"}, {NegativeSampler::Mix, "mix"}}};
  for (const auto& [sampler, name] : methods) {
    TrainConfig cfg;
    cfg.cd_steps = s.cd_steps;
    cfg.learning_rate = s.learning_rate;
    cfg.momentum = s.momentum;
    cfg.learning_rate_decay = s.learning_rate_decay;
    cfg.batch_size = s.batch_size;
    cfg.epochs = s.epochs;
    cfg.neg_sampler = sampler;
    cfg.seed = derive_seed(seed, 5);
    cfg.threads = s.threads;
    cfg.update_visible_bias = true;
    TrainHooks hooks;
    std::vector<double> stderrs;
    hooks.evaluate = [&](const RbmParams& p) {
      double log_z = kNaN;
      try {
        log_z = quadrature_log_z(p, 1e-9);
      } catch (const DivergenceError&) {
        stderrs.push_back(kNaN);
        return -std::numeric_limits<double>::infinity();
      }
      const auto [ll, se] = held_out_loglik(p, test_data, log_z);
      stderrs.push_back(se);
      return ll;
    };
    const TrainResult result = train(start, train_data, cfg, hooks);
    for (std::size_t e = 0; e < result.log.size(); ++e) {
      rows.push_back({result.log[e].epoch, name, result.log[e].log_likelihood, stderrs[e]});
    }
  }
  return rows;
}

std::string mixing_csv(const std::vector<MixingRow>& rows) {
  std::ostringstream out;
  out << "epoch,method,loglik,stderr\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.method << ',' << format_number(r.loglik) << ',' << format_number(r.stderr_) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------- divergence

std::vector<DivergenceTrace> run_divergence(const DivergenceSettings& s, std::uint64_t seed) {
  // Strongly correlated data: one latent factor with positive loadings.
  Rng rng(seed, 1);
  Vector loading(s.visible);
  for (Eigen::Index i = 0; i < s.visible; ++i) loading(i) = std::abs(rng.normal());
  Matrix raw(static_cast<Eigen::Index>(s.rows), s.visible);
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    const double z = rng.normal();
    for (Eigen::Index i = 0; i < s.visible; ++i) raw(r, i) = z * loading(i) + 0.1 * rng.normal();
  }
  const Matrix data = apply_normalization(raw, compute_normalization(raw));
  const RbmParams start = initial_params(s.visible, s.hidden, s.leakiness, HiddenKind::LeakyRelu, derive_seed(seed, 2));

  std::vector<DivergenceTrace> traces;
  for (const bool projected : {true, false}) {
    TrainConfig cfg;
    cfg.cd_steps = 1;
    cfg.learning_rate = s.learning_rate;
    cfg.momentum = s.momentum;
    cfg.batch_size = 100;
    cfg.epochs = s.epochs;
    cfg.weight_decay = projected ? 0.0 : s.weight_decay;
    cfg.projection_enabled = projected;
    cfg.seed = derive_seed(seed, 3);
    cfg.threads = s.threads;

    DivergenceTrace trace;
    trace.model = projected ? "projected" : "unprojected";
    std::optional<RbmParams> model;
    try {
      model = train(start, data, cfg).params;
    } catch (const NumericalError&) {
      trace.diverged_at = 0;  // the weights themselves blew up
      trace.safe = false;
      trace.max_singular_value = std::numeric_limits<double>::infinity();
      traces.push_back(std::move(trace));
      continue;
    }
    trace.max_singular_value = spectral_norm(model->weights());
    trace.safe = is_globally_safe(model->weights()).safe;

    std::vector<GibbsState> states(s.chains);
    std::vector<Rng> rngs;
    rngs.reserve(s.chains);
    const std::uint64_t chain_seed = derive_seed(seed, projected ? 4 : 5);
    for (std::size_t i = 0; i < s.chains; ++i) {
      rngs.emplace_back(chain_seed, i);
      states[i].v.resize(s.visible);
      for (Eigen::Index k = 0; k < s.visible; ++k) states[i].v(k) = rngs[i].normal();
      states[i].h = Vector::Zero(s.hidden);
    }
    for (int step = 1; step <= s.steps; ++step) {
      parallel_for(s.chains, s.threads, [&](std::size_t i) { gibbs_step(*model, states[i], rngs[i]); });
      double total = 0.0;
      for (const auto& st : states) total += st.v.cwiseAbs().sum();
      const double mean_abs = total / static_cast<double>(s.chains * static_cast<std::size_t>(s.visible));
      if (!std::isfinite(mean_abs)) {
        trace.diverged_at = step;
        break;
      }
      trace.mean_abs_v.push_back(mean_abs);
    }
    traces.push_back(std::move(trace));
  }
  return traces;
}

std::string divergence_csv(const std::vector<DivergenceTrace>& traces) {
  std::ostringstream out;
  out << "step,mean_abs_v,model\n";
  for (const auto& t : traces) {
    for (std::size_t k = 0; k < t.mean_abs_v.size(); ++k) {
      out << k + 1 << ',' << format_number(t.mean_abs_v[k]) << ',' << t.model << '\n';
    }
    if (t.diverged_at) out << *t.diverged_at << ",inf," << t.model << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------- likelihood

std::vector<LikelihoodRow> run_likelihood_compare(const LikelihoodSettings& s, std::uint64_t seed) {
  Matrix train_data;
  Matrix test_data;
  if (s.data) {
    // Last third held out.
    const Eigen::Index n = s.data->rows();
    const Eigen::Index n_test = std::max<Eigen::Index>(1, n / 3);
    if (n - n_test < 1) throw InvalidArgument("likelihood comparison needs at least 2 data rows");
    train_data = s.data->topRows(n - n_test);
    test_data = s.data->bottomRows(n_test);
  } else {
    const RbmParams truth = ground_truth(s.visible, s.true_hidden, s.true_norm, s.leakiness, seed);
    train_data = sample_model(truth, s.train_rows, derive_seed(seed, 2));
    test_data = sample_model(truth, s.test_rows, derive_seed(seed, 3));
  }
  const Eigen::Index visible = train_data.cols();

  std::vector<LikelihoodRow> rows;
  for (const HiddenKind kind : {HiddenKind::LeakyRelu, HiddenKind::Bernoulli}) {
    const double c = kind == HiddenKind::LeakyRelu ? s.leakiness : 1.0;
    const RbmParams start = initial_params(visible, s.hidden, c, kind, derive_seed(seed, 4));
    TrainConfig cfg;
    cfg.cd_steps = s.cd_steps;
    cfg.learning_rate = s.learning_rate;
    cfg.momentum = 0.9;
    cfg.batch_size = 100;
    cfg.epochs = s.epochs;
    cfg.update_visible_bias = true;
    // Projection only constrains the leaky model; Bernoulli units are always proper.
    cfg.projection_enabled = kind == HiddenKind::LeakyRelu;
    cfg.seed = derive_seed(seed, 5);
    cfg.threads = s.threads;
    const RbmParams model = train(start, train_data, cfg).params;

    const AnnealingPath path = kind == HiddenKind::LeakyRelu ? AnnealingPath::leaky(s.leakiness, s.levels)
                                                             : AnnealingPath::energy(s.levels);
    const LogZEstimate est = ais_estimate(model, path, s.particles, derive_seed(seed, 6), s.threads);
    rows.push_back({kind == HiddenKind::LeakyRelu ? "leaky" : "bernoulli",
                    eval_mean_log_likelihood(model, test_data, est.log_z), est.log_z, est.standard_error});
  }
  return rows;
}

std::string likelihood_csv(const std::vector<LikelihoodRow>& rows) {
  std::ostringstream out;
  out << "model,loglik,logz,logz_stderr\n";
  for (const auto& r : rows) {
    out << r.model << ',' << format_number(r.loglik) << ',' << format_number(r.logz) << ','
        << format_number(r.logz_stderr) << '\n';
  }
  return out.str();
}

}  // namespace lrbm
