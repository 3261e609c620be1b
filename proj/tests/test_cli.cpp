#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string output;  // stdout and stderr
};

fs::path workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("mkv_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = "cd '" + workdir().string() + "' && " + env + " '" MKV_SIM_PATH "' " +
                          args + " 2>&1";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

void write(const std::string& name, const std::string& text) {
  std::ofstream(workdir() / name) << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(workdir() / p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string l;
  while (std::getline(is, l)) out.push_back(l);
  return out;
}

// Drops the last CSV column (wall-clock seconds).
std::string without_last_column(const std::string& csv) {
  std::string out;
  for (const auto& l : lines(csv)) out += l.substr(0, l.rfind(',')) + "\n";
  return out;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  auto r = run("frobnicate");
  CHECK(r.code == 2);
  CHECK(r.output.find("frobnicate") != std::string::npos);
  CHECK(r.output.find("Subcommands") != std::string::npos);
  CHECK(run("").code == 2);
  CHECK(run("simulate").code == 2);  // no config
  CHECK(run("simulate --config does_not_exist.json").code == 2);
  write("broken.json", "{ not json");
  CHECK(run("simulate --config broken.json").code == 2);
}

TEST_CASE("missing grid.M names the field") {
  write("nogrid.json", R"({"model": {"name": "gbm"}, "grid": {"T": 1}, "N": 2})");
  const auto r = run("simulate --config nogrid.json --out nogrid");
  CHECK(r.code == 2);
  CHECK(r.output.find("grid.M") != std::string::npos);
}

TEST_CASE("zero coefficients give a constant-state CSV") {
  write("zero.json", R"({"model": {"name": "custom_affine", "params": {}},
                         "grid": {"T": 1, "M": 5}, "N": 3, "replications": 2,
                         "init": {"type": "constant", "value": 0.25}})");
  REQUIRE(run("simulate --config zero.json --out zero").code == 0);
  const auto rows = lines(slurp("zero/ensemble.csv"));
  REQUIRE(rows.size() == 1 + 2 * 3 * 6);
  CHECK(rows[0] == "replication,particle,step,time,x0");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].substr(rows[i].rfind(',')) == ",0.25");
}

TEST_CASE("simulate is reproducible and manifests re-run byte-identically") {
  write("sim.json", R"({"model": {"name": "linear_meanfield", "params": {"sigma0": 0.3}},
                        "grid": {"T": 1, "M": 20}, "N": 5, "replications": 3, "seed": 11,
                        "output": {"binary": true}})");
  REQUIRE(run("simulate --config sim.json --out a").code == 0);
  REQUIRE(run("simulate --config sim.json --out b --threads 2").code == 0);
  CHECK(slurp("a/ensemble.csv") == slurp("b/ensemble.csv"));
  CHECK(slurp("a/ensemble.bin") == slurp("b/ensemble.bin"));
  REQUIRE(run("simulate --config a/ensemble.manifest.json --out c").code == 0);
  CHECK(slurp("a/ensemble.csv") == slurp("c/ensemble.csv"));

  const auto m = json::parse(slurp("a/ensemble.manifest.json"));
  CHECK(m["subcommand"] == "simulate");
  CHECK(m["master_seed"] == 11);
  CHECK(m["outputs"].size() == 2);
  CHECK(m.contains("config_hash"));
  CHECK(m.contains("version"));
  CHECK(m.contains("wall_seconds"));

  REQUIRE(run("simulate --config sim.json --out d --seed 12").code == 0);
  CHECK(slurp("a/ensemble.csv") != slurp("d/ensemble.csv"));
  // a manifest cannot drive another subcommand
  CHECK(run("convergence --config a/ensemble.manifest.json --out e").code == 2);
}

TEST_CASE("thread count falls back to MKV_SIM_THREADS") {
  REQUIRE(run("simulate --config sim.json --out env", "MKV_SIM_THREADS=3").code == 0);
  CHECK(json::parse(slurp("env/ensemble.manifest.json"))["threads"] == 3);
  CHECK(slurp("env/ensemble.csv") == slurp("a/ensemble.csv"));
}

TEST_CASE("non-finite states exit 3") {
  write("blowup.json", R"({"model": {"name": "custom_affine", "params": {"b1": 1e200}},
                           "grid": {"T": 1, "M": 10}, "N": 2,
                           "init": {"type": "constant", "value": 1e200}})");
  const auto r = run("simulate --config blowup.json --out blowup");
  CHECK(r.code == 3);
  CHECK(r.output.find("step") != std::string::npos);
}

TEST_CASE("order-check verdict is the exit code") {
  write("same.json", R"({"kind": "cv", "mu": [1, 2, 3, 4], "nu": [1, 2, 3, 4]})");
  auto r = run("order-check --config same.json --out same");
  CHECK(r.code == 0);
  const auto rep = json::parse(slurp("same/order_report.json"));
  CHECK(rep["verdict"] == "consistent");
  CHECK(rep["probes"].size() == 21);  // mean plus 20 default TVaR levels

  write("samples.csv", "id,value\n0,1\n1,2\n2,3\n3,4\n");
  write("named.json", R"({"kind": "cv", "mu": {"csv": "samples.csv", "column": "value"},
                          "nu": [1, 2, 3, 4]})");
  CHECK(run("order-check --config named.json --out named").code == 0);
  write("badcol.json", R"({"kind": "cv", "mu": {"csv": "samples.csv", "column": "nope"},
                           "nu": [1, 2, 3, 4]})");
  r = run("order-check --config badcol.json --out badcol");
  CHECK(r.code == 2);
  CHECK(r.output.find("mu.column") != std::string::npos);

  write("rev.json", R"({"kind": "cv", "mu": [-3, 3, -3, 3, -3, 3, -3, 3],
                        "nu": [0, 0, 0, 0, 0, 0, 0, 0]})");
  r = run("order-check --config rev.json --out rev");
  CHECK(r.code == 1);
  CHECK(json::parse(slurp("rev/order_report.json"))["verdict"] == "violated");
}

TEST_CASE("cfs-sweep writes one row per variant, N and a") {
  write("sweep.json", R"({"N": [1, 3], "a": [0, 1, 10], "n_mc": 40, "steps": 20, "seed": 5})");
  REQUIRE(run("cfs-sweep --config sweep.json --out sweep/esd.csv --emit-plotdata").code == 0);
  const auto rows = lines(slurp("sweep/esd.csv"));
  REQUIRE(rows.size() == 1 + 2 * 2 * 3);
  CHECK(rows[0] == "variant,N,a,n_mc,steps,esd,esd_stderr,mean_T,mean_T_stderr,seconds");
  CHECK(fs::exists(workdir() / "sweep/esd_constant.csv"));
  CHECK(fs::exists(workdir() / "sweep/esd_sigmoid.csv"));
  REQUIRE(run("cfs-sweep --config sweep/esd.manifest.json --out again/esd.csv").code == 0);
  CHECK(without_last_column(slurp("sweep/esd.csv")) == without_last_column(slurp("again/esd.csv")));
}

TEST_CASE("convergence study CSV") {
  write("conv.json", R"({"model": {"name": "linear_meanfield"}, "M_list": [8, 16, 32],
                         "M_ref": 256, "N": 4, "replications": 20})");
  REQUIRE(run("convergence --config conv.json --out conv").code == 0);
  const auto rows = lines(slurp("conv/convergence.csv"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "M,h,strong_error,fitted_slope");
  write("conv_bad.json", R"({"model": {"name": "linear_meanfield"}, "M_list": [256],
                             "M_ref": 256})");
  CHECK(run("convergence --config conv_bad.json --out conv_bad").code == 2);
}

TEST_CASE("lq-compare JSON") {
  write("gamma.csv", "t,Gamma,gamma\n0,0,0\n0.5,0,0\n1,0,0\n");
  write("lq.json", R"({"sigma_bar": 1, "q2": 1, "grid": {"T": 1, "M": 2},
                       "theta": {"type": "constant", "value": 1},
                       "control": {"csv": "gamma.csv"}, "N": 5, "n_mc": 4})");
  const auto r = run("lq-compare --config lq.json --out lq");
  CHECK(r.code == 0);
  const auto j = json::parse(slurp("lq/lq_compare.json"));
  for (const char* k : {"cost_x", "cost_y", "gap", "stderr", "verdict"}) CHECK(j.contains(k));
  CHECK(j["gap"] == 0.0);
}
