#include "cli.hpp"

#include "lrbm/dataset.hpp"
#include "lrbm/experiments.hpp"
#include "lrbm/model_io.hpp"
#include "lrbm/partition.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace lrbm;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "lrbm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::size_t fields(const std::string& line) {
  return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

struct Scratch {
  fs::path dir = fs::temp_directory_path() / ("lrbm_cli_" + std::to_string(::getpid()));
  Scratch() { fs::create_directories(dir); }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"experiment", "nonsense"}).code == 1);
  CHECK(run({"train"}).code == 1);  // --data is required

  const Run missing = run({"estimate-z", "--model", "/nonexistent/dir/m.rbm"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("/nonexistent/dir/m.rbm") != std::string::npos);
}

TEST_CASE("train, sample, estimate and evaluate") {
  const Scratch tmp;
  Rng rng(1);
  write_matrix(tmp / "data.csv", oracle::random_matrix(200, 3, rng), DataFormat::Csv);
  {
    std::ofstream cfg(tmp / "run.cfg");
    cfg << "hidden = 2\nepochs = 2\ncd_steps = 2\n";
  }

  const Run trained = run({"--out", tmp.dir.string(), "--config", tmp / "run.cfg", "--set", "learning_rate=0.01",
                           "train", "--data", tmp / "data.csv"});
  REQUIRE(trained.code == 0);
  const ModelFile m = load_model(tmp / "model.rbm");
  CHECK(m.params.num_visible() == 3);
  CHECK(m.params.num_hidden() == 2);
  CHECK(m.provenance.epoch == 2);
  CHECK(lines(slurp(tmp / "train_log.csv")).size() == 3);
  CHECK(read_normalization(tmp / "normalization.csv").mean.size() == 3);

  CHECK(run({"--out", tmp.dir.string(), "sample", "--model", tmp / "model.rbm", "--chains", "7", "--steps", "5"})
            .code == 0);
  CHECK(read_matrix(tmp / "samples.csv", DataFormat::Csv).rows() == 7);

  const Run est = run({"--out", tmp.dir.string(), "estimate-z", "--model", tmp / "model.rbm", "--levels", "20",
                       "--particles", "50"});
  REQUIRE(est.code == 0);
  CHECK(est.out.rfind("log Z = ", 0) == 0);
  const auto est_csv = lines(slurp(tmp / "estimate_z.csv"));
  REQUIRE(est_csv.size() == 2);
  CHECK(est_csv[0] == "path,levels,particles,log_z,stderr,ess,dropped");
  CHECK(est_csv[1].rfind("leaky,20,50,", 0) == 0);

  const Run ll = run({"--out", tmp.dir.string(), "eval-ll", "--model", tmp / "model.rbm", "--data",
                      tmp / "data.csv", "--normalization", tmp / "normalization.csv", "--levels", "20",
                      "--particles", "50", "--path", "energy"});
  CHECK(ll.code == 0);
  CHECK(lines(slurp(tmp / "eval_ll.csv"))[0] == "loglik,logz,logz_stderr");

  // a bad key in --set is a usage error, not a crash
  CHECK(run({"--set", "hiden=3", "train", "--data", tmp / "data.csv"}).code == 1);
  CHECK(run({"--set", "nokeyvalue", "train", "--data", tmp / "data.csv"}).code == 1);
}

TEST_CASE("numerical failures exit 2") {
  const Scratch tmp;
  Matrix w(2, 1);
  w << 1.5, 0.0;
  save_model(tmp / "unsafe.rbm", RbmParams(w, Vector::Zero(1), 0.1));
  const Run r = run({"estimate-z", "--model", tmp / "unsafe.rbm", "--levels", "5", "--particles", "5"});
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("experiment CSVs have the documented columns and are reproducible") {
  const Scratch tmp;
  const std::string a = tmp / "a";
  const std::string b = tmp / "b";
  REQUIRE(run({"--out", a, "--seed", "3", "experiment", "divergence"}).code == 0);
  REQUIRE(run({"--out", b, "--seed", "3", "experiment", "divergence"}).code == 0);
  const std::string csv = slurp(fs::path(a) / "divergence.csv");
  CHECK(csv == slurp(fs::path(b) / "divergence.csv"));
  const auto rows = lines(csv);
  REQUIRE(rows.size() > 2);
  CHECK(rows[0] == "step,mean_abs_v,model");
  for (const auto& r : rows) CHECK(fields(r) == 3);

  REQUIRE(run({"--out", a, "experiment", "likelihood-compare"}).code == 0);
  const auto lc = lines(slurp(fs::path(a) / "likelihood-compare.csv"));
  REQUIRE(lc.size() == 3);
  CHECK(lc[0] == "model,loglik,logz,logz_stderr");
  CHECK(lc[1].rfind("leaky,", 0) == 0);
  CHECK(lc[2].rfind("bernoulli,", 0) == 0);
}

TEST_CASE("partition-bias rows and the c = 1 control") {
  PartitionBiasSettings s;
  s.visible = 8;
  s.hidden = {2, 4};
  s.repeats = 3;
  s.particles = 200;
  s.levels = 20;
  const auto rows = run_partition_bias(s, 1);
  const auto csv = lines(partition_bias_csv(rows));
  REQUIRE(csv.size() == 5);
  CHECK(csv[0] == "J,method,bias_mean,bias_sd,particles,levels,seconds");
  CHECK(csv[1].rfind("2,energy,", 0) == 0);
  CHECK(csv[2].rfind("2,leaky,", 0) == 0);
  CHECK(csv[1].substr(csv[1].size() - 3) == ",NA");

  // with c = 1 both paths start from the exact target
  s.leakiness = 1.0;
  for (const BiasRow& r : run_partition_bias(s, 2)) {
    CHECK(std::abs(r.bias_mean) <= 3.0 * r.mean_stderr + 1e-10);
  }
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-2.5e-300) == "-2.5e-300");
  CHECK(format_number(std::nan("")) == "NA");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
}
