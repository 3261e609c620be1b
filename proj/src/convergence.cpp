#include "mkv/convergence.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "mkv/errors.hpp"
#include "mkv/parallel.hpp"

namespace mkv {

namespace {

// Fine increments of one replication held in memory; serves coarse steps by
// the same aggregation rule as AggregatedIncrements.
class BufferedIncrements final : public IncrementSource {
 public:
  BufferedIncrements(const std::vector<double>& idio, const std::vector<double>& common,
                     std::size_t n, std::size_t q, std::size_t fine_steps, std::size_t ratio)
      : idio_(&idio), common_(&common), n_(n), q_(q), fine_steps_(fine_steps), ratio_(ratio) {}

  std::size_t n_particles() const noexcept override { return n_; }
  std::size_t dim_noise() const noexcept override { return q_; }

  void fill(std::size_t step, std::span<double> idio, std::span<double> common) override {
    const double scale = 1.0 / std::sqrt(static_cast<double>(ratio_));
    const std::size_t first = step * ratio_;
    for (std::size_t n = 0; n < n_; ++n) {
      for (std::size_t k = 0; k < q_; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < ratio_; ++j)
          acc += (*idio_)[(n * fine_steps_ + first + j) * q_ + k];
        idio[n * q_ + k] = acc * scale;
      }
    }
    for (std::size_t k = 0; k < q_; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < ratio_; ++j) acc += (*common_)[(first + j) * q_ + k];
      common[k] = acc * scale;
    }
  }

 private:
  const std::vector<double>* idio_;
  const std::vector<double>* common_;
  std::size_t n_, q_, fine_steps_, ratio_;
};

}  // namespace

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("line fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw ParameterError("line fit needs distinct abscissae");
  const double slope = (n * sxy - sx * sy) / denom;
  return {slope, (sy - slope * sx) / n};
}

ConvergenceResult strong_convergence_study(const ConvergenceConfig& cfg) {
  cfg.coeffs.validate();
  if (!std::has_single_bit(cfg.reference_steps)) {
    throw ParameterError("reference step count must be a power of two");
  }
  std::vector<std::size_t> steps = cfg.steps;
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  for (auto m : steps) {
    if (!std::has_single_bit(m)) {
      throw ParameterError("convergence grid M = " + std::to_string(m) + " is not dyadic");
    }
    if (m >= cfg.reference_steps) {
      throw ParameterError("coarse grid M = " + std::to_string(m) +
                           " must be coarser than the reference M = " +
                           std::to_string(cfg.reference_steps));
    }
  }
  if (steps.size() < 2) {
    throw ParameterError("convergence study needs at least two coarse grids below the reference");
  }
  if (cfg.n_rep == 0 || cfg.n_particles == 0) {
    throw ParameterError("convergence study needs replications and particles");
  }
  if (!(cfg.p >= 1.0)) throw ParameterError("error exponent p must be >= 1");

  const std::size_t n = cfg.n_particles;
  const std::size_t q = cfg.coeffs.dim_noise;
  const std::size_t d = cfg.coeffs.dim_state;
  const std::size_t fine = cfg.reference_steps;
  const TimeGrid fine_grid(cfg.horizon, fine);
  const NoisePlan plan(cfg.seed, n, fine, q);

  // acc[g][r] = sum over particles of max_m |error|^p
  std::vector<std::vector<double>> acc(steps.size(), std::vector<double>(cfg.n_rep, 0.0));
  parallel_for(cfg.n_rep, cfg.threads, [&](std::size_t r) {
    std::vector<double> idio(n * fine * q), common(fine * q);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t m = 0; m < fine; ++m) {
        plan.particle_increment(r, i, m, std::span<double>(idio).subspan((i * fine + m) * q, q));
      }
    }
    for (std::size_t m = 0; m < fine; ++m) {
      plan.common_increment(r, m, std::span<double>(common).subspan(m * q, q));
    }
    BufferedIncrements ref_src(idio, common, n, q, fine, 1);
    const auto ref = simulate_with_source(cfg.coeffs, fine_grid, cfg.init, ref_src, plan, r);
    for (std::size_t g = 0; g < steps.size(); ++g) {
      const std::size_t ratio = fine / steps[g];
      BufferedIncrements src(idio, common, n, q, fine, ratio);
      SimulationOptions so;
      so.scheme = cfg.scheme;
      const TimeGrid grid(cfg.horizon, steps[g]);
      const auto ens = simulate_with_source(cfg.coeffs, grid, cfg.init, src, plan, r, so);
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double worst = 0.0;
        for (std::size_t m = 0; m < grid.size(); ++m) {
          double sq = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            const double e = ens.state(i, m, k) - ref.state(i, m * ratio, k);
            sq += e * e;
          }
          worst = std::max(worst, std::sqrt(sq));
        }
        sum += std::pow(worst, cfg.p);
      }
      acc[g][r] = sum;
    }
  });

  ConvergenceResult out;
  std::vector<double> lx, ly;
  for (std::size_t g = 0; g < steps.size(); ++g) {
    double total = 0.0;
    for (double v : acc[g]) total += v;
    const double mean = total / static_cast<double>(cfg.n_rep * n);
    ConvergencePoint pt;
    pt.steps = steps[g];
    pt.h = cfg.horizon / static_cast<double>(steps[g]);
    pt.error = std::pow(mean, 1.0 / cfg.p);
    out.points.push_back(pt);
    if (pt.error > 0.0) {
      lx.push_back(std::log(pt.h));
      ly.push_back(std::log(pt.error));
    }
  }
  if (lx.size() >= 2) {
    const auto [slope, intercept] = fit_line(lx, ly);
    out.slope = slope;
    out.intercept = intercept;
  }
  return out;
}

}  // namespace mkv
