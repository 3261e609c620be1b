// mkv_sim: batch runner for particle simulations, convergence studies,
// convex-order checks, the interbank default sweep and LQ value comparisons.
//
// Exit codes: 0 ok, 1 verdict violated, 2 config/usage error, 3 numeric failure.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mkv/config.hpp"
#include "mkv/errors.hpp"
#include "mkv/hash.hpp"
#include "mkv/io.hpp"
#include "mkv/noise.hpp"
#include "mkv/parallel.hpp"

#ifndef MKV_VERSION
#define MKV_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using mkv::json;

namespace {

constexpr int kOk = 0;
constexpr int kViolated = 1;
constexpr int kUsage = 2;
constexpr int kNumeric = 3;

struct Globals {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  bool emit_plotdata = false;
};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// A manifest is accepted wherever a config is: its embedded config is rerun.
json load_config(const Globals& g, const std::string& subcommand) {
  if (g.config.empty()) throw UsageError(subcommand + ": --config <path> is required");
  json j;
  try {
    j = json::parse(mkv::read_text_file(g.config));
  } catch (const json::parse_error& e) {
    throw mkv::ConfigError("<root>", std::string("invalid JSON in ") + g.config + ": " + e.what());
  }
  if (!j.is_object()) throw mkv::ConfigError("<root>", "expected a JSON object");
  if (j.contains("mkv_manifest")) {
    const std::string recorded = j.value("subcommand", "");
    if (recorded != subcommand) {
      throw mkv::ConfigError("subcommand", "manifest was written by '" + recorded +
                                               "', not '" + subcommand + "'");
    }
    if (!j.contains("config")) throw mkv::ConfigError("config", "manifest has no config");
    j = j.at("config");
  }
  if (g.seed) j["seed"] = *g.seed;
  return j;
}

// --out is a directory, or a file path when it carries an extension.
struct Target {
  fs::path primary;
  fs::path manifest;
};

Target resolve_target(const Globals& g, const std::string& default_name) {
  fs::path out(g.out);
  Target t;
  if (out.has_extension()) {
    t.primary = out;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
  } else {
    fs::create_directories(out);
    t.primary = out / default_name;
  }
  t.manifest = t.primary;
  t.manifest.replace_extension(".manifest.json");
  return t;
}

class Run {
 public:
  Run(std::string subcommand, json config, std::size_t threads)
      : subcommand_(std::move(subcommand)),
        config_(std::move(config)),
        threads_(threads),
        started_(utc_now()),
        t0_(std::chrono::steady_clock::now()) {}

  void output(const fs::path& p) { outputs_.push_back(p); }

  void write_manifest(const fs::path& path) const {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    json m;
    m["mkv_manifest"] = 1;
    m["tool"] = "mkv_sim";
    m["version"] = MKV_VERSION;
    m["subcommand"] = subcommand_;
    m["config"] = config_;
    m["config_hash"] = mkv::hex64(mkv::fnv1a64(config_.dump()));
    m["master_seed"] = config_.value("seed", json(nullptr));
    m["threads"] = threads_;
    m["started_at"] = started_;
    m["wall_seconds"] = wall;
    auto& files = m["outputs"] = json::array();
    for (const auto& p : outputs_) {
      files.push_back({{"file", p.filename().string()}, {"digest", mkv::file_digest(p)}});
    }
    mkv::write_text_file(path, m.dump(2) + "\n");
  }

 private:
  std::string subcommand_;
  json config_;
  std::size_t threads_;
  std::string started_;
  std::chrono::steady_clock::time_point t0_;
  std::vector<fs::path> outputs_;
};

int cmd_simulate(const Globals& g) {
  const json j = load_config(g, "simulate");
  const auto cfg = mkv::parse_simulate_config(j);
  const std::size_t threads = mkv::resolve_threads(g.threads);
  const Target target = resolve_target(g, "ensemble.csv");
  Run run("simulate", j, threads);

  const mkv::NoisePlan plan(cfg.seed, cfg.n_particles, cfg.grid.steps(), cfg.coeffs.dim_noise);
  std::ofstream csv;
  if (cfg.write_csv) {
    csv.open(target.primary, std::ios::binary | std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write " + target.primary.string());
    mkv::write_ensemble_csv_header(csv, cfg.coeffs.dim_state);
  }
  fs::path bin_path = target.primary;
  bin_path.replace_extension(".bin");
  std::optional<mkv::BinaryEnsembleWriter> bin;
  if (cfg.write_binary) {
    bin.emplace(bin_path, cfg.n_particles, cfg.grid, cfg.coeffs.dim_state, cfg.replications);
  }

  // Replications run in parallel batches and are written in index order.
  for (std::size_t first = 0; first < cfg.replications; first += threads) {
    const std::size_t count = std::min(threads, cfg.replications - first);
    std::vector<mkv::ParticleEnsemble> batch(count);
    mkv::parallel_for(count, threads, [&](std::size_t i) {
      const std::uint64_t r = first + i;
      batch[i] = cfg.scheme == mkv::Scheme::truncated_euler
                     ? mkv::simulate_truncated(cfg.coeffs, cfg.grid, cfg.init, cfg.n_particles,
                                               plan, r)
                     : mkv::simulate_particle_system(cfg.coeffs, cfg.grid, cfg.init,
                                                     cfg.n_particles, plan, r);
    });
    for (std::size_t i = 0; i < count; ++i) {
      if (cfg.write_csv) mkv::write_ensemble_csv_rows(csv, batch[i], first + i);
      if (bin) bin->append(batch[i]);
    }
  }
  if (cfg.write_csv) {
    csv.close();
    run.output(target.primary);
  }
  if (bin) {
    bin->close();
    run.output(bin_path);
  }
  run.write_manifest(target.manifest);
  std::cout << "simulated " << cfg.replications << " x " << cfg.n_particles << " particles, "
            << cfg.grid.steps() << " steps (" << cfg.coeffs.name << ")\n";
  return kOk;
}

int cmd_convergence(const Globals& g) {
  const json j = load_config(g, "convergence");
  auto cfg = mkv::parse_convergence_config(j);
  cfg.threads = mkv::resolve_threads(g.threads);
  const Target target = resolve_target(g, "convergence.csv");
  Run run("convergence", j, cfg.threads);
  const auto result = mkv::strong_convergence_study(cfg);
  std::ostringstream os;
  mkv::write_convergence_csv(os, result);
  mkv::write_text_file(target.primary, os.str());
  run.output(target.primary);
  run.write_manifest(target.manifest);
  std::cout << "fitted slope " << mkv::format_double(result.slope) << '\n';
  return kOk;
}

int cmd_order_check(const Globals& g) {
  const json j = load_config(g, "order-check");
  auto cfg = mkv::parse_order_check_config(j);
  const std::size_t threads = mkv::resolve_threads(g.threads);
  const Target target = resolve_target(g, "order_report.json");
  Run run("order-check", j, threads);

  mkv::OrderReport report;
  if (cfg.kind == mkv::OrderKind::cv || cfg.kind == mkv::OrderKind::icv) {
    const auto probes = mkv::parse_probes(cfg.probes, cfg.kind == mkv::OrderKind::icv, cfg.mu,
                                          cfg.nu);
    report = cfg.kind == mkv::OrderKind::cv ? mkv::check_cv_1d(cfg.mu, cfg.nu, probes, cfg.test)
                                            : mkv::check_icv_1d(cfg.mu, cfg.nu, probes, cfg.test);
  } else {
    // Strikes for a stop-loss span are not known before simulating; an
    // absent family falls back to the TVaR grid, or the library default.
    const auto probes =
        cfg.probes.is_null()
            ? (cfg.conditional.increasing ? mkv::ProbeFamily::stop_loss({})
                                          : mkv::ProbeFamily::default_tvar())
            : mkv::parse_probes(cfg.probes, cfg.conditional.increasing, {}, {});
    cfg.conditional.threads = threads;
    const mkv::NoisePlan plan(cfg.seed, cfg.conditional.n_particles, cfg.grid.steps(), 1);
    report = mkv::check_conditional(cfg.system_x, cfg.system_y, cfg.grid, probes, plan,
                                    cfg.conditional);
  }
  mkv::write_text_file(target.primary, mkv::order_report_json(report).dump(2) + "\n");
  run.output(target.primary);
  run.write_manifest(target.manifest);
  mkv::write_order_report_text(std::cout, report);
  return report.verdict == mkv::Verdict::violated ? kViolated : kOk;
}

int cmd_cfs_sweep(const Globals& g) {
  const json j = load_config(g, "cfs-sweep");
  auto cfg = mkv::parse_sweep_config(j);
  cfg.threads = mkv::resolve_threads(g.threads);
  const Target target = resolve_target(g, "cfs_sweep.csv");
  Run run("cfs-sweep", j, cfg.threads);
  const auto result = mkv::figure1_sweep(cfg);
  std::ostringstream os;
  mkv::write_sweep_csv(os, result.rows);
  mkv::write_text_file(target.primary, os.str());
  run.output(target.primary);
  if (g.emit_plotdata) {
    const fs::path dir = target.primary.has_parent_path() ? target.primary.parent_path() : ".";
    for (const auto& p : mkv::write_sweep_plotdata(dir, result.rows)) run.output(p);
  }
  run.write_manifest(target.manifest);
  for (const auto& c : result.cells) {
    std::cout << "N=" << c.n_banks << " a=" << mkv::format_double(c.a)
              << "  ESD(constant) - ESD(sigmoid) = " << mkv::format_double(c.gap) << " +- "
              << mkv::format_double(c.gap_stderr) << '\n';
  }
  return kOk;
}

int cmd_lq_compare(const Globals& g) {
  const json j = load_config(g, "lq-compare");
  auto cfg = mkv::parse_lq_config(j);
  cfg.options.threads = mkv::resolve_threads(g.threads);
  const Target target = resolve_target(g, "lq_compare.json");
  Run run("lq-compare", j, cfg.options.threads);
  const mkv::NoisePlan plan(cfg.seed, cfg.options.n_particles, cfg.spec.grid.steps(), 1);
  const auto v = mkv::compare_values(cfg.spec, cfg.control, plan, cfg.options);
  json out = {{"cost_x", v.cost_x},
              {"cost_y", v.cost_y},
              {"gap", v.gap},
              {"stderr", v.std_error},
              {"verdict", mkv::to_string(v.verdict)}};
  mkv::write_text_file(target.primary, out.dump(2) + "\n");
  run.output(target.primary);
  run.write_manifest(target.manifest);
  std::cout << out.dump() << '\n';
  return v.verdict == mkv::Verdict::violated ? kViolated : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle simulation and convex-order toolkit for McKean-Vlasov SDEs",
               "mkv_sim"};
  app.set_version_flag("--version", MKV_VERSION);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "JSON config, or a manifest to re-run");
  app.add_option("--out", g.out, "output directory, or output file path");
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--threads", g.threads, "worker threads (default: $MKV_SIM_THREADS or all cores)");
  app.require_subcommand(1, 1);
  app.fallthrough();

  auto* sim = app.add_subcommand("simulate", "simulate particle ensembles to CSV/binary");
  auto* conv = app.add_subcommand("convergence", "strong convergence rate study");
  auto* order = app.add_subcommand("order-check", "convex / increasing convex order test");
  auto* sweep = app.add_subcommand("cfs-sweep", "expected systemic default sweep over (N, a)");
  sweep->add_flag("--emit-plotdata", g.emit_plotdata, "also write one series file per variant");
  auto* lq = app.add_subcommand("lq-compare", "value comparison of two LQ control problems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (e.get_exit_code() == 0) return kOk;
    if (code != 0) {
      for (const auto& extra : app.remaining()) {
        if (!extra.empty() && extra[0] != '-') {
          std::cerr << "unknown subcommand '" << extra << "'\n";
          break;
        }
      }
      std::cerr << app.help();
    }
    return kUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (sim->parsed()) return cmd_simulate(g);
    if (conv->parsed()) return cmd_convergence(g);
    if (order->parsed()) return cmd_order_check(g);
    if (sweep->parsed()) return cmd_cfs_sweep(g);
    if (lq->parsed()) return cmd_lq_compare(g);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  } catch (const mkv::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const mkv::ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  std::cerr << app.help();
  return kUsage;
}
