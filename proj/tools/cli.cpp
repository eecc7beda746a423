#include "cli.hpp"

#include "lrbm/config.hpp"
#include "lrbm/dataset.hpp"
#include "lrbm/error.hpp"
#include "lrbm/experiments.hpp"
#include "lrbm/model_io.hpp"
#include "lrbm/partition.hpp"
#include "lrbm/sampler.hpp"
#include "lrbm/training.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace lrbm {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = ".";
  std::optional<int> threads;
  std::vector<std::string> overrides;  // key=value, applied after the config file
  bool timing = false;
};

RunSettings resolve_settings(const Globals& g) {
  RunSettings s;
  if (!g.config.empty()) apply_config(load_config(g.config), s);
  ConfigMap extra;
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
    extra[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  apply_config(extra, s);
  if (g.seed) s.train.seed = *g.seed;
  if (g.threads) s.train.threads = *g.threads;
  return s;
}

fs::path out_file(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return fs::path(g.out) / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

AnnealingPath make_path(const PathSettings& p, const RbmParams& params) {
  switch (p.kind) {
    case PathKind::Energy: return AnnealingPath::energy(p.levels, p.sweeps_per_level);
    case PathKind::Leaky: return AnnealingPath::leaky(params.leakiness(), p.levels, p.sweeps_per_level);
    case PathKind::OneSided: return AnnealingPath::one_sided(p.levels, p.sweeps_per_level);
  }
  throw InvalidArgument("unknown path kind");
}

std::string matrix_csv(const Matrix& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out += ',';
      out += format_number(m(r, c));
    }
    out += '\n';
  }
  return out;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Leaky-ReLU RBM training, sampling and partition-function estimation"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Master random seed");
  app.add_option("--config", g.config, "Flat key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("--set", g.overrides, "Override one config key (key=value); repeatable");
  app.add_flag("--timing", g.timing, "Fill wall-clock columns (makes CSVs run-dependent)");

  std::string data_path;
  std::string data_format = "csv";
  std::string model_path;
  std::string norm_path;

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model on a data file");
  train_cmd->add_option("--data", data_path, "Training data")->required();
  train_cmd->add_option("--format", data_format, "csv or raw-f32")->capture_default_str();
  train_cmd->add_option("--model", model_path, "Where to write the model (default <out>/model.rbm)");

  // sample
  std::size_t chains = 100;
  int steps = 1000;
  std::string sampler = "leaky";
  auto* sample_cmd = app.add_subcommand("sample", "Draw samples from a saved model");
  sample_cmd->add_option("--model", model_path, "Model file")->required();
  sample_cmd->add_option("--chains", chains, "Number of chains")->capture_default_str();
  sample_cmd->add_option("--steps", steps, "Gibbs sweeps per chain")->capture_default_str();
  sample_cmd->add_option("--sampler", sampler, "gibbs (from N(0, I)) or leaky (annealed)")
      ->check(CLI::IsMember({"gibbs", "leaky"}))
      ->capture_default_str();

  // estimate-z / eval-ll share the AIS options
  std::optional<std::string> path_name;
  std::optional<int> levels;
  std::optional<std::size_t> particles;
  std::optional<int> sweeps;
  auto add_ais_options = [&](CLI::App* cmd) {
    cmd->add_option("--path", path_name, "energy, leaky or one-sided");
    cmd->add_option("--levels", levels, "Intermediate distributions");
    cmd->add_option("--particles", particles, "AIS particles");
    cmd->add_option("--sweeps", sweeps, "Gibbs sweeps per level");
  };
  auto* estimate_cmd = app.add_subcommand("estimate-z", "Estimate log Z of a saved model by AIS");
  estimate_cmd->add_option("--model", model_path, "Model file")->required();
  add_ais_options(estimate_cmd);

  auto* eval_cmd = app.add_subcommand("eval-ll", "Mean log-likelihood of a data file under a saved model");
  eval_cmd->add_option("--model", model_path, "Model file")->required();
  eval_cmd->add_option("--data", data_path, "Data file")->required();
  eval_cmd->add_option("--format", data_format, "csv or raw-f32")->capture_default_str();
  eval_cmd->add_option("--normalization", norm_path, "Stored normalization from `train`");
  add_ais_options(eval_cmd);

  // experiment
  std::string experiment;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a canned experiment and write <out>/<name>.csv");
  exp_cmd->add_option("name", experiment, "partition-bias, mixing, divergence or likelihood-compare")
      ->required()
      ->check(CLI::IsMember({"partition-bias", "mixing", "divergence", "likelihood-compare"}));
  exp_cmd->add_option("--data", data_path, "likelihood-compare: use this data instead of synthetic data");
  exp_cmd->add_option("--format", data_format, "csv or raw-f32")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 1;
  }

  try {
    RunSettings s = resolve_settings(g);
    if (path_name) s.path.kind = parse_path_kind(*path_name);
    if (levels) s.path.levels = *levels;
    if (particles) s.path.particles = *particles;
    if (sweeps) s.path.sweeps_per_level = *sweeps;
    const std::uint64_t seed = s.train.seed;
    const int threads = s.train.threads;

    if (*train_cmd) {
      const Dataset ds = ingest(data_path, parse_data_format(data_format));
      const RbmParams start = initial_params(ds.matrix.cols(), s.model.hidden, s.model.leakiness, s.model.kind,
                                             derive_seed(seed, 0x1417));
      const TrainResult result = train(start, ds.matrix, s.train);
      const fs::path model_out = model_path.empty() ? out_file(g, "model.rbm") : fs::path(model_path);
      save_model(model_out, result.params,
                 {config_hash(s.train), seed, static_cast<std::uint32_t>(s.train.epochs)});
      write_normalization(out_file(g, "normalization.csv"), ds.normalization);
      std::string log = "epoch,reconstruction_error\n";
      for (const auto& rec : result.log) {
        log += std::to_string(rec.epoch) + "," + format_number(rec.reconstruction_error) + "\n";
      }
      write_text(out_file(g, "train_log.csv"), log);
      out << "wrote " << model_out.string() << "\n";
      return 0;
    }

    if (*sample_cmd) {
      const RbmParams params = load_model(model_path).params;
      SamplerOptions opts;
      opts.threads = threads;
      Matrix samples;
      if (sampler == "leaky" && params.kind() == HiddenKind::LeakyRelu) {
        samples = anneal_leakiness_sample(params, AnnealSchedule::with_default_rate(params.leakiness(), steps),
                                          chains, seed, opts)
                      .visible();
      } else {
        const Matrix start = sample_gaussian_base(RbmParams(Matrix::Zero(params.num_visible(), params.num_hidden()),
                                                            Vector::Zero(params.num_hidden()), 1.0),
                                                  chains, derive_seed(seed, 1), threads);
        samples = run_schedule(params, start, AnnealSchedule::constant(params.leakiness(), steps), seed, opts)
                      .visible();
      }
      const fs::path path = out_file(g, "samples.csv");
      write_text(path, matrix_csv(samples));
      out << "wrote " << samples.rows() << " samples to " << path.string() << "\n";
      return 0;
    }

    if (*estimate_cmd || *eval_cmd) {
      const RbmParams params = load_model(model_path).params;
      const AnnealingPath path = make_path(s.path, params);
      const LogZEstimate est = ais_estimate(params, path, s.path.particles, seed, threads);
      if (est.dropped_particles > 0) {
        err << "warning: dropped " << est.dropped_particles << " particles with non-finite weights\n";
      }
      if (*estimate_cmd) {
        out << "log Z = " << format_number(est.log_z) << " +/- " << format_number(est.standard_error) << "\n";
        std::string csv = "path,levels,particles,log_z,stderr,ess,dropped\n";
        csv += path_kind_name(path.kind) + "," + std::to_string(path.levels()) + "," +
               std::to_string(s.path.particles) + "," + format_number(est.log_z) + "," +
               format_number(est.standard_error) + "," + format_number(est.effective_sample_size) + "," +
               std::to_string(est.dropped_particles) + "\n";
        write_text(out_file(g, "estimate_z.csv"), csv);
        return 0;
      }
      const DataFormat fmt = parse_data_format(data_format);
      const Matrix data = norm_path.empty() ? read_matrix(data_path, fmt)
                                            : ingest(data_path, fmt, read_normalization(norm_path)).matrix;
      const double ll = eval_mean_log_likelihood(params, data, est.log_z);
      out << "mean log-likelihood = " << format_number(ll) << " (log Z = " << format_number(est.log_z)
          << " +/- " << format_number(est.standard_error) << ")\n";
      write_text(out_file(g, "eval_ll.csv"), "loglik,logz,logz_stderr\n" + format_number(ll) + "," +
                                                 format_number(est.log_z) + "," +
                                                 format_number(est.standard_error) + "\n");
      return 0;
    }

    if (*exp_cmd) {
      std::string csv;
      if (experiment == "partition-bias") {
        PartitionBiasSettings ps;
        ps.threads = threads;
        ps.timing = g.timing;
        csv = partition_bias_csv(run_partition_bias(ps, seed));
      } else if (experiment == "mixing") {
        MixingSettings ms;
        ms.threads = threads;
        csv = mixing_csv(run_mixing(ms, seed));
      } else if (experiment == "divergence") {
        DivergenceSettings ds;
        ds.threads = threads;
        csv = divergence_csv(run_divergence(ds, seed));
      } else {
        LikelihoodSettings ls;
        ls.threads = threads;
        if (!data_path.empty()) ls.data = ingest(data_path, parse_data_format(data_format)).matrix;
        csv = likelihood_csv(run_likelihood_compare(ls, seed));
      }
      const fs::path path = out_file(g, experiment + ".csv");
      write_text(path, csv);
      out << "wrote " << path.string() << "\n";
      return 0;
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace lrbm
