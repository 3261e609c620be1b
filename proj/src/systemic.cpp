#include "mkv/systemic.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mkv/errors.hpp"
#include "mkv/hash.hpp"
#include "mkv/parallel.hpp"

namespace mkv {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct MeanSd {
  double mean = 0.0;
  double se = 0.0;
};

MeanSd mean_and_se(const std::vector<double>& v) {
  MeanSd r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return r;
}

}  // namespace

const char* to_string(CfsParams::Variant v) noexcept {
  return v == CfsParams::Variant::constant ? "constant" : "sigmoid";
}

double CfsParams::idiosyncratic_loading() const noexcept {
  return displayed_loadings ? sigma * std::abs(rho) : sigma * std::sqrt(1.0 - rho * rho);
}

double CfsParams::common_loading() const noexcept {
  return displayed_loadings ? sigma * std::sqrt(1.0 - rho * rho) : sigma * rho;
}

double CfsParams::mean_variance_rate() const noexcept {
  const double i = idiosyncratic_loading();
  const double c = common_loading();
  return c * c + i * i / static_cast<double>(n_banks);
}

void CfsParams::validate() const {
  if (!(a >= 0.0) || !std::isfinite(a)) throw ParameterError("CFS exchange rate a must be >= 0");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterError("CFS sigma must be > 0");
  if (!(std::abs(rho) <= 1.0)) throw ParameterError("CFS correlation rho must lie in [-1, 1]");
  if (n_banks == 0) throw ParameterError("CFS model needs N >= 1 banks");
  if (!(default_level < 0.0)) throw ParameterError("CFS default level D must be negative");
  if (variant == Variant::sigmoid) {
    // sup S = 1
    if (!(idio_scale > 0.0) || idio_scale > idiosyncratic_loading() * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "sigmoid variant needs 0 < idio_scale <= " << idiosyncratic_loading()
         << " (idiosyncratic loading of the constant variant), got " << idio_scale;
      throw ParameterError(os.str());
    }
    if (std::abs(sigma0) > std::abs(common_loading()) * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "sigmoid variant needs |sigma0| <= " << std::abs(common_loading())
         << " (common loading of the constant variant), got " << sigma0;
      throw ParameterError(os.str());
    }
    if (!std::isfinite(sigmoid_slope)) throw ParameterError("sigmoid slope must be finite");
  }
}

CoefficientSet CfsParams::coefficients() const {
  validate();
  if (variant == Variant::constant) {
    return cfs_coefficients(a, idiosyncratic_loading(), common_loading());
  }
  return cfs_sigmoid_coefficients(a, idio_scale, sigmoid_slope, sigma0);
}

std::string CfsParams::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "cfs;variant=" << to_string(variant) << ";a=" << a << ";sigma=" << sigma
     << ";rho=" << rho << ";N=" << n_banks << ";D=" << default_level
     << ";T=" << grid.horizon() << ";M=" << grid.steps()
     << ";displayed=" << displayed_loadings << ";sigma0=" << sigma0
     << ";idio_scale=" << idio_scale << ";slope=" << sigmoid_slope;
  return os.str();
}

ParticleEnsemble simulate_cfs(const CfsParams& params, const NoisePlan& noise,
                              std::uint64_t replication) {
  const auto coeffs = params.coefficients();
  return simulate_particle_system(coeffs, params.grid, constant_init(0.0), params.n_banks, noise,
                                  replication);
}

double size_of_default(std::span<const double> mean_path, double default_level) {
  double worst = 0.0;
  for (double m : mean_path) worst = std::max(worst, default_level - m);
  return worst;
}

EsdEstimate esd(const std::vector<DiscretePath>& mean_paths, double default_level) {
  if (mean_paths.empty()) throw ParameterError("esd needs at least one mean path");
  const std::size_t len = mean_paths.front().size();
  std::vector<double> v;
  v.reserve(mean_paths.size());
  for (const auto& p : mean_paths) {
    if (p.size() != len) throw ParameterError("esd: mean paths are not on a common grid");
    v.push_back(size_of_default(p.values, default_level));
  }
  const auto s = mean_and_se(v);
  return EsdEstimate{s.mean, s.se, v.size(), 0};
}

double esd_oracle_variance(double variance_rate, double default_level, double horizon,
                           std::size_t n_quad) {
  if (!(variance_rate >= 0.0)) throw ParameterError("variance rate must be >= 0");
  if (!(horizon > 0.0)) throw ParameterError("horizon must be > 0");
  if (!(default_level < 0.0)) throw ParameterError("default level must be negative");
  if (n_quad < 2) throw ParameterError("quadrature needs at least two intervals");
  const double s = std::sqrt(variance_rate * horizon);
  if (s == 0.0) return 0.0;
  // E[(D - min)_+] = int_0^inf P(min <= D - u) du = int_0^inf 2 Phi((D - u)/s) du.
  if (n_quad % 2 == 1) ++n_quad;
  const double upper = 12.0 * s;
  const double du = upper / static_cast<double>(n_quad);
  auto f = [&](double u) { return 2.0 * norm_cdf((default_level - u) / s); };
  double acc = f(0.0) + f(upper);
  for (std::size_t k = 1; k < n_quad; ++k) {
    acc += (k % 2 == 1 ? 4.0 : 2.0) * f(du * static_cast<double>(k));
  }
  return acc * du / 3.0;
}

double esd_analytic_oracle(double sigma, double rho, std::size_t n_banks, double default_level,
                           double horizon, std::size_t n_quad) {
  if (n_banks == 0) throw ParameterError("oracle needs N >= 1");
  if (!(std::abs(rho) <= 1.0)) throw ParameterError("rho must lie in [-1, 1]");
  const double v =
      sigma * sigma * (rho * rho + (1.0 - rho * rho) / static_cast<double>(n_banks));
  return esd_oracle_variance(v, default_level, horizon, n_quad);
}

double esd_analytic_oracle(const CfsParams& params, std::size_t n_quad) {
  params.validate();
  if (params.variant != CfsParams::Variant::constant) {
    throw ParameterError("the ESD oracle covers the constant variant only");
  }
  return esd_oracle_variance(params.mean_variance_rate(), params.default_level,
                             params.grid.horizon(), n_quad);
}

MonitoringCalibration calibrate_discrete_monitoring(double variance_rate, double default_level,
                                                    double horizon,
                                                    std::vector<std::size_t> steps,
                                                    std::size_t n_rep, std::uint64_t seed,
                                                    std::size_t threads) {
  if (steps.size() < 2) throw ParameterError("calibration needs at least two grids");
  std::sort(steps.begin(), steps.end());
  const std::size_t finest = steps.back();
  for (auto m : steps) {
    if (m == 0 || finest % m != 0) {
      throw ParameterError("calibration grids must divide the finest grid");
    }
  }
  if (n_rep < 2) throw ParameterError("calibration needs at least two replications");
  const NoisePlan plan(seed, 1, finest);
  const double vol = std::sqrt(variance_rate);
  std::vector<std::vector<double>> per_rep(steps.size(), std::vector<double>(n_rep));
  parallel_for(n_rep, threads, [&](std::size_t r) {
    std::vector<double> z(finest);
    plan.gaussian(NoiseDomain::auxiliary, r, 0, 0, z);
    for (std::size_t g = 0; g < steps.size(); ++g) {
      const std::size_t m = steps[g];
      const std::size_t ratio = finest / m;
      const double h = horizon / static_cast<double>(m);
      double x = 0.0, worst = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        double agg = 0.0;
        for (std::size_t j = 0; j < ratio; ++j) agg += z[k * ratio + j];
        x += vol * std::sqrt(h) * agg / std::sqrt(static_cast<double>(ratio));
        worst = std::max(worst, default_level - x);
      }
      per_rep[g][r] = worst;
    }
  });
  MonitoringCalibration cal;
  cal.steps = steps;
  std::vector<double> xs;
  for (std::size_t g = 0; g < steps.size(); ++g) {
    cal.esd_values.push_back(mean_and_se(per_rep[g]).mean);
    xs.push_back(std::sqrt(horizon / static_cast<double>(steps[g])));
  }
  // Least squares for esd = limit - c * sqrt(h).
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t g = 0; g < xs.size(); ++g) {
    sx += xs[g];
    sy += cal.esd_values[g];
    sxx += xs[g] * xs[g];
    sxy += xs[g] * cal.esd_values[g];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  cal.c = -slope;
  cal.esd_limit = (sy - slope * sx) / n;
  return cal;
}

std::uint64_t sweep_cell_seed(std::uint64_t seed, std::size_t n_banks, double a) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(n_banks));
  h = splitmix64(h ^ std::bit_cast<std::uint64_t>(a));
  return h;
}

SweepResult figure1_sweep(const SweepConfig& config) {
  if (config.n_values.empty() || config.a_values.empty()) {
    throw ParameterError("sweep needs at least one N value and one a value");
  }
  if (config.n_mc < 2) throw ParameterError("sweep needs n_mc >= 2");
  using clock = std::chrono::steady_clock;
  SweepResult result;
  std::vector<SweepRow> constant_rows, sigmoid_rows;

  for (std::size_t n_banks : config.n_values) {
    for (double a : config.a_values) {
      CfsParams px = config.base;
      px.a = a;
      px.n_banks = n_banks;
      px.grid = TimeGrid(config.horizon, config.steps);
      px.variant = CfsParams::Variant::constant;
      CfsParams py = px;
      py.variant = CfsParams::Variant::sigmoid;
      const auto cx = px.coefficients();
      const auto cy = py.coefficients();

      const std::uint64_t cell_seed = sweep_cell_seed(config.seed, n_banks, a);
      const NoisePlan plan(cell_seed, n_banks, config.steps);
      std::vector<double> sx(config.n_mc), sy(config.n_mc), tx(config.n_mc), ty(config.n_mc);
      std::vector<double> secs_x(config.n_mc), secs_y(config.n_mc);

      parallel_for(config.n_mc, config.threads, [&](std::size_t r) {
        const auto t0 = clock::now();
        const auto ex = simulate_particle_system(cx, px.grid, constant_init(0.0), n_banks, plan, r);
        const auto t1 = clock::now();
        const auto ey = simulate_particle_system(cy, py.grid, constant_init(0.0), n_banks, plan, r);
        const auto t2 = clock::now();
        sx[r] = size_of_default(ex.mean_path, px.default_level);
        sy[r] = size_of_default(ey.mean_path, py.default_level);
        tx[r] = ex.mean_path.back();
        ty[r] = ey.mean_path.back();
        secs_x[r] = std::chrono::duration<double>(t1 - t0).count();
        secs_y[r] = std::chrono::duration<double>(t2 - t1).count();
      });

      auto make_row = [&](const char* variant, const std::vector<double>& s,
                          const std::vector<double>& t, const std::vector<double>& secs) {
        SweepRow row;
        row.variant = variant;
        row.n_banks = n_banks;
        row.a = a;
        row.n_mc = config.n_mc;
        row.steps = config.steps;
        const auto es = mean_and_se(s);
        const auto et = mean_and_se(t);
        row.esd = es.mean;
        row.esd_stderr = es.se;
        row.mean_terminal = et.mean;
        row.mean_terminal_stderr = et.se;
        for (double v : secs) row.seconds += v;
        return row;
      };
      constant_rows.push_back(make_row("constant", sx, tx, secs_x));
      sigmoid_rows.push_back(make_row("sigmoid", sy, ty, secs_y));

      std::vector<double> gap(config.n_mc);
      for (std::size_t r = 0; r < config.n_mc; ++r) gap[r] = sx[r] - sy[r];
      const auto g = mean_and_se(gap);
      result.cells.push_back(SweepCell{n_banks, a, cell_seed, g.mean, g.se});
    }
  }
  result.rows = std::move(constant_rows);
  result.rows.insert(result.rows.end(), sigmoid_rows.begin(), sigmoid_rows.end());
  return result;
}

}  // namespace mkv
