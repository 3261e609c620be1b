#include "mkv/config.hpp"

#include "mkv/hash.hpp"
#include "mkv/measures.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mkv {

std::string FieldReader::full(std::string_view path) const {
  if (prefix_.empty()) return std::string(path);
  if (path.empty()) return prefix_;
  return prefix_ + "." + std::string(path);
}

const json* FieldReader::find(std::string_view path) const {
  const json* cur = node_;
  while (!path.empty()) {
    const auto dot = path.find('.');
    const std::string key(path.substr(0, dot));
    if (!cur->is_object()) return nullptr;
    const auto it = cur->find(key);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    path = dot == std::string_view::npos ? std::string_view{} : path.substr(dot + 1);
  }
  return cur;
}

bool FieldReader::has(std::string_view path) const {
  const json* j = find(path);
  return j != nullptr && !j->is_null();
}

const json& FieldReader::require(std::string_view path) const {
  const json* j = find(path);
  if (j == nullptr || j->is_null()) throw ConfigError(full(path), "missing required field");
  return *j;
}

FieldReader FieldReader::sub(std::string_view path) const {
  const json& j = require(path);
  if (!j.is_object()) throw ConfigError(full(path), "expected an object");
  return FieldReader(j, full(path));
}

double FieldReader::number(std::string_view path) const {
  const json& j = require(path);
  if (!j.is_number()) throw ConfigError(full(path), "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(full(path), "expected a finite number");
  return v;
}

double FieldReader::number(std::string_view path, double fallback) const {
  return has(path) ? number(path) : fallback;
}

std::size_t FieldReader::count(std::string_view path) const {
  const json& j = require(path);
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ConfigError(full(path), "expected a non-negative integer");
  }
  return j.get<std::size_t>();
}

std::size_t FieldReader::count(std::string_view path, std::size_t fallback) const {
  return has(path) ? count(path) : fallback;
}

std::uint64_t FieldReader::seed(std::string_view path, std::uint64_t fallback) const {
  if (!has(path)) return fallback;
  const json& j = require(path);
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return j.get<std::uint64_t>();
  throw ConfigError(full(path), "expected an unsigned 64-bit integer");
}

std::string FieldReader::string(std::string_view path, const std::string& fallback) const {
  if (!has(path)) return fallback;
  const json& j = require(path);
  if (!j.is_string()) throw ConfigError(full(path), "expected a string");
  return j.get<std::string>();
}

bool FieldReader::boolean(std::string_view path, bool fallback) const {
  if (!has(path)) return fallback;
  const json& j = require(path);
  if (!j.is_boolean()) throw ConfigError(full(path), "expected true or false");
  return j.get<bool>();
}

std::vector<double> FieldReader::numbers(std::string_view path) const {
  const json& j = require(path);
  if (!j.is_array()) throw ConfigError(full(path), "expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(full(path), "expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::size_t> FieldReader::counts(std::string_view path) const {
  const json& j = require(path);
  if (!j.is_array()) throw ConfigError(full(path), "expected an array of integers");
  std::vector<std::size_t> out;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError(full(path), "expected an array of non-negative integers");
    }
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

namespace {

template <class Fn>
auto wrap(const std::string& field, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const ParameterError& e) {
    throw ConfigError(field, e.what());
  }
}

CfsParams parse_cfs_common(const FieldReader& r, CfsParams base) {
  base.sigma = r.number("sigma", base.sigma);
  base.rho = r.number("rho", base.rho);
  base.default_level = r.number("D", base.default_level);
  base.displayed_loadings = r.boolean("displayed_loadings", base.displayed_loadings);
  base.sigma0 = r.number("sigma0", base.sigma0);
  base.idio_scale = r.number("idio_scale", base.idio_scale);
  base.sigmoid_slope = r.number("sigmoid_slope", base.sigmoid_slope);
  return base;
}

}  // namespace

CoefficientSet make_coefficients(const std::string& name, const FieldReader& p) {
  return wrap(p.full(""), [&]() -> CoefficientSet {
    if (name == "cfs") {
      const double a = p.number("a", 1.0);
      if (!(a >= 0.0)) throw ConfigError(p.full("a"), "exchange rate must be >= 0");
      if (p.has("idio") || p.has("common")) {
        return cfs_coefficients(a, p.number("idio"), p.number("common"));
      }
      CfsParams c = parse_cfs_common(p, CfsParams{});
      c.a = a;
      return c.coefficients();
    }
    if (name == "cfs_sigmoid") {
      const double a = p.number("a", 1.0);
      if (!(a >= 0.0)) throw ConfigError(p.full("a"), "exchange rate must be >= 0");
      return cfs_sigmoid_coefficients(a, p.number("idio_scale", 4.0), p.number("slope", 0.1),
                                      p.number("sigma0", 2.0));
    }
    if (name == "linear_meanfield") {
      LinearMeanFieldParams lp;
      lp.kappa = p.number("kappa", lp.kappa);
      lp.gamma = p.number("gamma", lp.gamma);
      lp.b0 = p.number("b0", lp.b0);
      lp.s = p.number("s", lp.s);
      lp.amp = p.number("amp", lp.amp);
      lp.freq = p.number("freq", lp.freq);
      lp.sigma0 = p.number("sigma0", lp.sigma0);
      return linear_meanfield_coefficients(lp);
    }
    if (name == "gbm") {
      return gbm_coefficients(p.number("r", 0.0), p.number("s", 0.2), p.number("s0", 0.0));
    }
    if (name == "custom_affine") {
      AffineParams ap;
      ap.b0 = p.number("b0", 0.0);
      ap.b1 = p.number("b1", 0.0);
      ap.b2 = p.number("b2", 0.0);
      ap.s0 = p.number("s0", 0.0);
      ap.s1 = p.number("s1", 0.0);
      ap.s2 = p.number("s2", 0.0);
      ap.c0 = p.number("c0", 0.0);
      ap.c2 = p.number("c2", 0.0);
      auto c = custom_affine_coefficients(ap);
      if (p.has("lip_x_diffusion")) c.lip_x_diffusion = p.number("lip_x_diffusion");
      return c;
    }
    throw ConfigError(p.full(""), "unknown model '" + name +
                                      "' (expected cfs, cfs_sigmoid, linear_meanfield, gbm, "
                                      "custom_affine)");
  });
}

CoefficientSet parse_model(const FieldReader& model) {
  const auto& name_node = model.require("name");
  if (!name_node.is_string()) throw ConfigError(model.full("name"), "expected a string");
  static const json empty = json::object();
  const FieldReader params =
      model.has("params") ? model.sub("params") : FieldReader(empty, model.full("params"));
  return make_coefficients(name_node.get<std::string>(), params);
}

InitSampler parse_init(const FieldReader& init) {
  const std::string type = init.string("type", "constant");
  if (type == "constant") return constant_init(init.number("value", 0.0));
  if (type == "gaussian") {
    const double sd = init.number("sd", 1.0);
    if (!(sd >= 0.0)) throw ConfigError(init.full("sd"), "standard deviation must be >= 0");
    return gaussian_init(init.number("mean", 0.0), sd);
  }
  throw ConfigError(init.full("type"), "unknown initial condition '" + type + "'");
}

Scheme parse_scheme(const std::string& s, const std::string& field) {
  if (s == "euler") return Scheme::euler;
  if (s == "truncated_euler" || s == "truncated") return Scheme::truncated_euler;
  throw ConfigError(field, "unknown scheme '" + s + "' (expected euler or truncated_euler)");
}

TimeGrid parse_grid(const FieldReader& grid) {
  const double t = grid.number("T");
  const std::size_t m = grid.count("M");
  return wrap(grid.full(""), [&] { return TimeGrid(t, m); });
}

namespace {

InitSampler init_or_default(const FieldReader& r, std::string_view path) {
  if (!r.has(path)) return constant_init(0.0);
  return parse_init(r.sub(path));
}

SystemSpec parse_system(const FieldReader& r) {
  SystemSpec s;
  s.coeffs = parse_model(r.sub("model"));
  s.init = init_or_default(r, "init");
  s.scheme = parse_scheme(r.string("scheme", "euler"), r.full("scheme"));
  return s;
}

std::vector<double> parse_samples(const FieldReader& r, std::string_view path) {
  const json& j = r.require(path);
  if (j.is_array()) return r.numbers(path);
  if (j.is_object()) {
    const FieldReader s = r.sub(path);
    const std::string file = s.string("csv", "");
    if (file.empty()) throw ConfigError(s.full("csv"), "missing required field");
    std::size_t col = 0;
    if (s.has("column") && s.require("column").is_string()) {
      // header name: look it up in the first line
      const std::string name = s.string("column", "");
      std::ifstream in(file);
      std::string header, cell;
      std::getline(in, header);
      std::stringstream hs(header);
      bool found = false;
      for (std::size_t k = 0; std::getline(hs, cell, ','); ++k) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        if (cell == name) {
          col = k;
          found = true;
          break;
        }
      }
      if (!found) throw ConfigError(s.full("column"), "no column named '" + name + "' in " + file);
    } else {
      col = s.count("column", 0);
    }
    auto cols = wrap(s.full("csv"), [&] { return read_sample_csv(file); });
    if (col >= cols.size()) throw ConfigError(s.full("column"), "column out of range");
    return cols[col];
  }
  throw ConfigError(r.full(path), "expected an array of samples or {\"csv\": path}");
}

}  // namespace

SimulateConfig parse_simulate_config(const json& j) {
  const FieldReader r(j);
  SimulateConfig c;
  c.coeffs = parse_model(r.sub("model"));
  c.grid = parse_grid(r.sub("grid"));
  c.n_particles = r.count("N");
  if (c.n_particles == 0) throw ConfigError("N", "need at least one particle");
  c.replications = r.count("replications", 1);
  if (c.replications == 0) throw ConfigError("replications", "must be >= 1");
  c.scheme = parse_scheme(r.string("scheme", "euler"), "scheme");
  c.init = init_or_default(r, "init");
  c.seed = r.seed("seed", 1);
  c.write_csv = r.boolean("output.csv", true);
  c.write_binary = r.boolean("output.binary", false);
  if (c.scheme == Scheme::truncated_euler) {
    wrap("scheme", [&] {
      validate_truncated(c.coeffs, c.grid);
      return 0;
    });
  }
  return c;
}

ConvergenceConfig parse_convergence_config(const json& j) {
  const FieldReader r(j);
  ConvergenceConfig c;
  c.coeffs = parse_model(r.sub("model"));
  c.init = init_or_default(r, "init");
  c.horizon = r.number("T", 1.0);
  c.steps = r.counts("M_list");
  c.reference_steps = r.count("M_ref");
  c.n_particles = r.count("N", c.n_particles);
  c.n_rep = r.count("replications", c.n_rep);
  c.p = r.number("p", c.p);
  c.scheme = parse_scheme(r.string("scheme", "euler"), "scheme");
  c.seed = r.seed("seed", c.seed);
  bool only_reference = true;
  for (auto m : c.steps) only_reference = only_reference && m == c.reference_steps;
  if (only_reference) {
    throw ConfigError("M_list", "needs coarse grids below M_ref to fit a rate");
  }
  for (auto m : c.steps) {
    if (m == 0 || (m & (m - 1)) != 0) {
      throw ConfigError("M_list", "grid sizes must be dyadic (powers of two), got " +
                                      std::to_string(m));
    }
  }
  return c;
}

ProbeFamily parse_probes(const json& j, bool increasing, std::span<const double> mu,
                         std::span<const double> nu) {
  if (j.is_null()) {
    if (increasing) {
      return mu.empty() ? ProbeFamily::stop_loss({}) : ProbeFamily::stop_loss_span(mu, nu);
    }
    return ProbeFamily::default_tvar();
  }
  const FieldReader r(j, "probes");
  const std::string type = r.string("type", increasing ? "stop_loss_span" : "tvar");
  ProbeFamily f;
  if (type == "tvar") {
    f = r.has("levels") ? ProbeFamily::tvar(r.numbers("levels")) : ProbeFamily::default_tvar();
  } else if (type == "stop_loss") {
    f = ProbeFamily::stop_loss(r.numbers("strikes"));
  } else if (type == "stop_loss_span") {
    const std::size_t count = r.count("count", 41);
    f = mu.empty() ? ProbeFamily::stop_loss({})
                   : wrap(r.full("count"), [&] { return ProbeFamily::stop_loss_span(mu, nu, count); });
  } else if (type == "power") {
    // |x - center|^k for each k listed, a convex family usable from configs.
    const double center = r.number("center", 0.0);
    std::vector<ConvexProbe> probes;
    for (double k : r.numbers("exponents")) {
      if (!(k >= 1.0)) throw ConfigError(r.full("exponents"), "exponents must be >= 1");
      std::ostringstream name;
      name << "|x-" << center << "|^" << k;
      probes.push_back({name.str(), [center, k](double x) { return std::pow(std::abs(x - center), k); },
                        "polynomial"});
    }
    f = ProbeFamily::convex(std::move(probes));
  } else {
    throw ConfigError(r.full("type"), "unknown probe family '" + type + "'");
  }
  wrap(r.full(""), [&] {
    f.validate();
    return 0;
  });
  return f;
}

OrderCheckConfig parse_order_check_config(const json& j) {
  const FieldReader r(j);
  OrderCheckConfig c;
  const std::string kind = r.string("kind", "cv");
  if (kind == "cv") c.kind = OrderKind::cv;
  else if (kind == "icv") c.kind = OrderKind::icv;
  else if (kind == "conditional_cv") c.kind = OrderKind::conditional_cv;
  else if (kind == "conditional_icv") c.kind = OrderKind::conditional_icv;
  else throw ConfigError("kind", "unknown order kind '" + kind + "'");
  c.probes = j.contains("probes") ? j.at("probes") : json(nullptr);
  c.seed = r.seed("seed", 1);
  c.test.z = r.number("z", 3.0);
  if (!(c.test.z > 0.0)) throw ConfigError("z", "confidence multiplier must be positive");
  c.test.bootstrap = r.count("bootstrap", 200);
  c.test.paired = r.boolean("paired", false);
  c.test.seed = splitmix64(c.seed);
  if (c.kind == OrderKind::cv || c.kind == OrderKind::icv) {
    c.mu = parse_samples(r, "mu");
    c.nu = parse_samples(r, "nu");
    if (c.mu.empty()) throw ConfigError("mu", "needs at least one sample");
    if (c.nu.empty()) throw ConfigError("nu", "needs at least one sample");
  } else {
    c.system_x = parse_system(r.sub("system_x"));
    c.system_y = parse_system(r.sub("system_y"));
    c.grid = parse_grid(r.sub("grid"));
    c.conditional.n_common = r.count("n_common", 64);
    c.conditional.n_particles = r.count("N", 1000);
    c.conditional.increasing = c.kind == OrderKind::conditional_icv;
    if (r.has("nodes")) c.conditional.nodes = r.counts("nodes");
    c.conditional.test = c.test;
    c.conditional.test.paired = true;
  }
  return c;
}

SweepConfig parse_sweep_config(const json& j) {
  const FieldReader r(j);
  SweepConfig c;
  if (r.has("N")) c.n_values = r.counts("N");
  if (r.has("a")) c.a_values = r.numbers("a");
  c.n_mc = r.count("n_mc", c.n_mc);
  c.steps = r.count("steps", c.steps);
  c.horizon = r.number("T", c.horizon);
  c.seed = r.seed("seed", c.seed);
  c.base = parse_cfs_common(r, c.base);
  if (c.n_values.empty()) throw ConfigError("N", "needs at least one bank count");
  if (c.a_values.empty()) throw ConfigError("a", "needs at least one exchange rate");
  if (c.steps == 0) throw ConfigError("steps", "must be >= 1");
  wrap("", [&] {
    CfsParams probe = c.base;
    probe.grid = TimeGrid(c.horizon, c.steps);
    for (auto n : c.n_values) {
      probe.n_banks = n;
      for (double a : c.a_values) {
        probe.a = a;
        probe.variant = CfsParams::Variant::constant;
        probe.validate();
        probe.variant = CfsParams::Variant::sigmoid;
        probe.validate();
      }
    }
    return 0;
  });
  return c;
}

namespace {

std::vector<double> read_table(const FieldReader& r, std::string_view path, std::size_t nodes) {
  const json& j = r.require(path);
  if (j.is_number()) return std::vector<double>(nodes, j.get<double>());
  auto v = r.numbers(path);
  if (v.size() != nodes) {
    throw ConfigError(r.full(path), "table has " + std::to_string(v.size()) +
                                        " entries, grid has " + std::to_string(nodes) + " nodes");
  }
  return v;
}

}  // namespace

LqConfig parse_lq_config(const json& j) {
  const FieldReader r(j);
  LqConfig c;
  auto& s = c.spec;
  s.b0 = r.number("b0", 0.0);
  s.b = r.number("b", 0.0);
  s.b_bar = r.number("b_bar", 0.0);
  s.c = r.number("c", 0.0);
  s.sigma_bar = r.number("sigma_bar");
  s.sigma0 = r.number("sigma0", 0.0);
  s.q2 = r.number("q2", 0.0);
  s.q2_bar = r.number("q2_bar", 0.0);
  s.r2 = r.number("r2", 1.0);
  s.p2 = r.number("p2", 0.0);
  s.p2_bar = r.number("p2_bar", 0.0);
  s.x0 = r.number("x0", 0.0);
  s.grid = parse_grid(r.sub("grid"));
  if (r.has("theta")) {
    const FieldReader t = r.sub("theta");
    const std::string type = t.string("type", "constant");
    if (type == "constant") {
      const double v = t.number("value");
      s.theta = [v](double, double, const MeasureView&) { return v; };
    } else if (type == "sigmoid") {
      const double scale = t.number("scale");
      const double slope = t.number("slope", 1.0);
      s.theta = [scale, slope](double, double x, const MeasureView&) {
        return scale * scaled_sigmoid(x, slope);
      };
    } else {
      throw ConfigError(t.full("type"), "unknown theta type '" + type + "'");
    }
  }
  const std::size_t nodes = s.grid.size();
  if (r.has("control.csv")) {
    const std::string file = r.string("control.csv", "");
    auto cols = wrap("control.csv", [&] { return read_sample_csv(file); });
    // columns: t, Gamma, gamma
    if (cols.size() < 3) throw ConfigError("control.csv", "expected columns t, Gamma, gamma");
    if (cols[1].size() != nodes) {
      throw ConfigError("control.csv", "table has " + std::to_string(cols[1].size()) +
                                           " rows, grid has " + std::to_string(nodes) + " nodes");
    }
    c.control = FeedbackControl{cols[1], cols[2]};
  } else if (r.has("control")) {
    const FieldReader ctl = r.sub("control");
    c.control = FeedbackControl{read_table(ctl, "Gamma", nodes), read_table(ctl, "gamma", nodes)};
  } else {
    c.control = FeedbackControl::zero(s.grid);
  }
  c.options.n_particles = r.count("N", c.options.n_particles);
  c.options.n_mc = r.count("n_mc", c.options.n_mc);
  c.options.z = r.number("z", c.options.z);
  const std::string quad = r.string("quadrature", "left_endpoint");
  if (quad == "left_endpoint") c.options.quadrature = Quadrature::left_endpoint;
  else if (quad == "trapezoidal") c.options.quadrature = Quadrature::trapezoidal;
  else throw ConfigError("quadrature", "expected left_endpoint or trapezoidal");
  c.seed = r.seed("seed", 1);
  wrap("", [&] {
    s.validate();
    return 0;
  });
  return c;
}

}  // namespace mkv
