#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>

#include "mkv/config.hpp"
#include "mkv/hash.hpp"
#include "mkv/io.hpp"
#include "mkv/noise.hpp"

using namespace mkv;
namespace fs = std::filesystem;

namespace {

std::string error_field(const json& j) {
  try {
    parse_simulate_config(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

json base_sim() {
  return json::parse(R"({"model": {"name": "gbm", "params": {"r": 0.01, "s": 0.2}},
                         "grid": {"T": 1, "M": 10}, "N": 4, "seed": 3})");
}

}  // namespace

TEST_CASE("registry builds every built-in model") {
  for (const char* name : {"cfs", "cfs_sigmoid", "linear_meanfield", "gbm", "custom_affine"}) {
    const json empty = json::object();
    const auto c = make_coefficients(name, FieldReader(empty));
    CHECK(c.dim_state == 1);
  }
  const json params = json::parse(R"({"a": 2, "idio": 1.5, "common": 0.5})");
  const auto cfs = make_coefficients("cfs", FieldReader(params));
  CHECK(cfs.lip_x_drift == 2.0);
  const json bad = json::parse(R"({"a": -1})");
  CHECK_THROWS_AS(make_coefficients("cfs", FieldReader(bad, "model.params")), ConfigError);
  CHECK_THROWS_AS(make_coefficients("heston", FieldReader(params)), ConfigError);
}

TEST_CASE("field-level schema errors") {
  auto j = base_sim();
  j["grid"].erase("M");
  CHECK(error_field(j) == "grid.M");
  j = base_sim();
  j["N"] = "four";
  CHECK(error_field(j) == "N");
  j = base_sim();
  j["model"]["params"]["s"] = "x";
  CHECK(error_field(j) == "model.params.s");
  j = base_sim();
  j["scheme"] = "milstein";
  CHECK(error_field(j) == "scheme");
  j = base_sim();
  j.erase("model");
  CHECK(error_field(j) == "model");
  CHECK(error_field(base_sim()).empty());
}

TEST_CASE("simulate config details") {
  auto j = base_sim();
  j["init"] = json::parse(R"({"type": "gaussian", "mean": 1, "sd": 0.5})");
  j["output"] = json::parse(R"({"csv": false, "binary": true})");
  const auto c = parse_simulate_config(j);
  CHECK(c.n_particles == 4);
  CHECK(c.grid.steps() == 10);
  CHECK(c.seed == 3);
  CHECK_FALSE(c.write_csv);
  CHECK(c.write_binary);
  // truncated scheme on a model with constant diffusion is rejected
  j = base_sim();
  j["model"] = json::parse(R"({"name": "custom_affine", "params": {"s0": 1}})");
  j["scheme"] = "truncated_euler";
  CHECK(error_field(j) == "scheme");
}

TEST_CASE("convergence config requires a regression") {
  auto j = json::parse(R"({"model": {"name": "linear_meanfield"}, "M_list": [16, 32],
                            "M_ref": 256})");
  CHECK(parse_convergence_config(j).reference_steps == 256);
  j["M_list"] = json::array({256});
  CHECK_THROWS_AS(parse_convergence_config(j), ConfigError);
  j["M_list"] = json::array({16, 48});
  CHECK_THROWS_AS(parse_convergence_config(j), ConfigError);
}

TEST_CASE("order-check config and probes") {
  auto j = json::parse(R"({"kind": "icv", "mu": [0, 1, 2], "nu": [1, 2, 3]})");
  const auto c = parse_order_check_config(j);
  CHECK(c.kind == OrderKind::icv);
  const auto f = parse_probes(c.probes, true, c.mu, c.nu);
  CHECK(f.kind == ProbeFamily::Kind::stop_loss_grid);
  CHECK(f.levels.size() == 41);
  const auto t = parse_probes(json::parse(R"({"type": "tvar", "levels": [0.5, 0.9]})"), false,
                              {}, {});
  CHECK(t.levels == std::vector<double>{0.5, 0.9});
  CHECK_THROWS_AS(parse_probes(json::parse(R"({"type": "tvar", "levels": [1.5]})"), false, {}, {}),
                  ParameterError);
  const auto pw = parse_probes(json::parse(R"({"type": "power", "exponents": [2, 4]})"), false,
                               {}, {});
  CHECK(pw.size() == 2);
  j = json::parse(R"({"kind": "cv", "mu": [], "nu": [1]})");
  CHECK_THROWS_AS(parse_order_check_config(j), ConfigError);
  j = json::parse(R"({"kind": "conditional_cv", "grid": {"T": 1, "M": 10},
                      "system_x": {"model": {"name": "gbm"}},
                      "system_y": {"model": {"name": "gbm"}}, "n_common": 4, "N": 50})");
  const auto cc = parse_order_check_config(j);
  CHECK(cc.conditional.n_common == 4);
  CHECK(cc.conditional.test.paired);
}

TEST_CASE("sweep and lq configs") {
  auto s = parse_sweep_config(json::parse(R"({"N": [1, 2], "a": [0], "n_mc": 10})"));
  CHECK(s.n_values.size() == 2);
  CHECK(s.n_mc == 10);
  CHECK_THROWS_AS(parse_sweep_config(json::parse(R"({"sigma0": 9})")), ConfigError);

  auto lq = json::parse(R"({"sigma_bar": 1, "q2": 1, "grid": {"T": 1, "M": 4},
                            "theta": {"type": "constant", "value": 0.5},
                            "control": {"Gamma": [0, 0, 0, 0, 0], "gamma": 0}})");
  const auto c = parse_lq_config(lq);
  CHECK(c.control.gamma_big.size() == 5);
  CHECK(c.control.gamma_small.size() == 5);
  lq["control"]["Gamma"] = json::array({0, 0});
  CHECK_THROWS_AS(parse_lq_config(lq), ConfigError);
  lq["control"]["Gamma"] = 0;
  lq["theta"]["value"] = 2.0;
  CHECK_THROWS_AS(parse_lq_config(lq), ConfigError);
}

TEST_CASE("round-trip number formatting") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, 123456789.125}) {
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("ensemble csv and binary dump") {
  const auto coeffs = linear_meanfield_coefficients({});
  const TimeGrid g(1.0, 3);
  const NoisePlan plan(1, 2, 3);
  const auto e0 = simulate_particle_system(coeffs, g, constant_init(0.0), 2, plan, 0);
  const auto e1 = simulate_particle_system(coeffs, g, constant_init(0.0), 2, plan, 1);

  std::ostringstream os;
  write_ensemble_csv_header(os, 1);
  write_ensemble_csv_rows(os, e1, 1);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "replication,particle,step,time,x0");
  std::getline(is, line);
  CHECK(line == "1,0,0,0,0");
  std::size_t rows = 1;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 2 * 4);

  const auto path = fs::temp_directory_path() / "mkv_io_test.bin";
  {
    BinaryEnsembleWriter w(path, 2, g, 1, 2);
    w.append(e0);
    w.append(e1);
    w.close();
  }
  CHECK(fs::file_size(path) == 40 + 8 * (4 + 2 * 2 * 4));
  const auto b = read_binary_ensemble(path);
  CHECK(b.n == 2);
  CHECK(b.steps == 3);
  CHECK(b.replications == 2);
  CHECK(b.times.back() == 1.0);
  for (std::size_t i = 0; i < e1.states.size(); ++i) CHECK(b.states[e0.states.size() + i] == e1.states[i]);
  fs::remove(path);
}

TEST_CASE("report serialization") {
  std::vector<double> a{0, 0, 0, 0}, b{-1, 1, -1, 1};
  const auto r = check_cv_1d(a, b, ProbeFamily::tvar({0.5}));
  const auto j = order_report_json(r);
  CHECK(j["kind"] == "cv");
  CHECK(j["verdict"] == "consistent");
  CHECK(j["probes"].is_array());
  CHECK(j["probes"][0].contains("margin"));
  std::ostringstream os;
  write_order_report_text(os, r);
  CHECK(os.str().find("consistent") != std::string::npos);

  std::ostringstream csv;
  write_sweep_csv(csv, {SweepRow{"constant", 10, 1.0, 5, 100, 0.5, 0.1, 0.0, 0.2, 1.5}});
  CHECK(csv.str().substr(0, csv.str().find('\n')) ==
        "variant,N,a,n_mc,steps,esd,esd_stderr,mean_T,mean_T_stderr,seconds");
}
