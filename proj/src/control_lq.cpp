#include "mkv/control_lq.hpp"

#include <cmath>
#include <string>

#include "mkv/parallel.hpp"
#include "mkv/simulate.hpp"

namespace mkv {

void LqSpec::validate() const {
  for (double w : {sigma0, q2, q2_bar, r2, p2, p2_bar, sigma_bar}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ParameterError("LQ weights, sigma_bar and sigma0 must be finite and >= 0");
    }
  }
  if (!(r2 > 0.0)) throw ParameterError("LQ control weight r2 must be > 0");
  for (double v : {b0, b, b_bar, c, x0}) {
    if (!std::isfinite(v)) throw ParameterError("LQ drift constants must be finite");
  }
  if (theta) {
    // Probe grid over (t, x) with a Dirac measure at x0 as the law argument.
    const double xs[] = {-10.0, -3.0, -1.0, -0.1, 0.0, 0.1, 1.0, 3.0, 10.0};
    for (std::size_t m = 0; m <= 10; ++m) {
      const double t = grid.horizon() * static_cast<double>(m) / 10.0;
      for (double x : xs) {
        const double pts[1] = {x};
        const double mean[1] = {x0};
        const MeasureView mu(pts, mean, 1);
        const double v = theta(t, x, mu);
        if (!(v >= 0.0 && v <= sigma_bar * (1.0 + 1e-12))) {
          throw ParameterError("theta(" + std::to_string(t) + ", " + std::to_string(x) +
                               ") = " + std::to_string(v) + " outside [0, sigma_bar]");
        }
      }
    }
  }
}

FeedbackControl FeedbackControl::constant(const TimeGrid& grid, double gamma_big,
                                          double gamma_small) {
  return FeedbackControl{std::vector<double>(grid.size(), gamma_big),
                         std::vector<double>(grid.size(), gamma_small)};
}

void FeedbackControl::validate(const TimeGrid& grid) const {
  if (gamma_big.size() != grid.size() || gamma_small.size() != grid.size()) {
    throw ParameterError("feedback tables must cover all " + std::to_string(grid.size()) +
                         " grid nodes");
  }
}

CoefficientSet lq_coefficients(const LqSpec& spec, const FeedbackControl& ctrl, LqSystem system) {
  const TimeGrid grid = spec.grid;
  ScalarDrift drift = [spec, ctrl, grid](double t, double x, const MeasureView& mu) {
    const double mean = mu.mean();
    const double alpha = ctrl(grid.nearest_node(t), x, mean, spec.c);
    return spec.b0 + spec.b * x + spec.b_bar * mean + spec.c * alpha;
  };
  ScalarDrift diffusion;
  if (system == LqSystem::x || !spec.theta) {
    diffusion = [s = spec.sigma_bar](double, double, const MeasureView&) { return s; };
  } else {
    diffusion = spec.theta;
  }
  auto coeffs = scalar_coefficients(system == LqSystem::x ? "lq_x" : "lq_y", std::move(drift),
                                    std::move(diffusion),
                                    [s0 = spec.sigma0](double, const MeasureView&) { return s0; });
  return coeffs;
}

namespace {

double ensemble_cost(const ParticleEnsemble& ens, const LqSpec& spec, const FeedbackControl& ctrl,
                     Quadrature quad) {
  const auto& g = ens.grid;
  const std::size_t n = ens.n_particles;
  const std::size_t last = g.steps();
  std::vector<double> running(g.size(), 0.0);
  for (std::size_t m = 0; m <= last; ++m) {
    const double mean = ens.mean_path[m];
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = ens.state(i, m);
      const double alpha = ctrl(m, x, mean, spec.c);
      acc += spec.q2 * x * x + spec.r2 * alpha * alpha;
    }
    running[m] = acc / static_cast<double>(n) + spec.q2_bar * mean * mean;
  }
  double integral = 0.0;
  for (std::size_t m = 0; m < last; ++m) {
    const double h = g.node(m + 1) - g.node(m);
    integral += quad == Quadrature::left_endpoint ? h * running[m]
                                                  : 0.5 * h * (running[m] + running[m + 1]);
  }
  double terminal = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ens.state(i, last);
    terminal += spec.p2 * x * x;
  }
  terminal /= static_cast<double>(n);
  const double mean_t = ens.mean_path[last];
  return integral + terminal + spec.p2_bar * mean_t * mean_t;
}

CostEstimate summarize(std::vector<double> v) {
  CostEstimate e;
  for (double x : v) e.cost += x;
  e.cost /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - e.cost) * (x - e.cost);
    e.std_error = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  e.per_replication = std::move(v);
  return e;
}

void check_options(const LqOptions& o) {
  if (o.n_particles == 0) throw ParameterError("LQ evaluation needs N >= 1");
  if (o.n_mc == 0) throw ParameterError("LQ evaluation needs n_mc >= 1");
}

}  // namespace

CostEstimate evaluate_cost(const LqSpec& spec, const FeedbackControl& ctrl, LqSystem system,
                           const NoisePlan& noise, const LqOptions& options) {
  spec.validate();
  ctrl.validate(spec.grid);
  check_options(options);
  const auto coeffs = lq_coefficients(spec, ctrl, system);
  std::vector<double> costs(options.n_mc);
  parallel_for(options.n_mc, options.threads, [&](std::size_t r) {
    const auto ens = simulate_particle_system(coeffs, spec.grid, constant_init(spec.x0),
                                              options.n_particles, noise, r);
    costs[r] = ensemble_cost(ens, spec, ctrl, options.quadrature);
  });
  return summarize(std::move(costs));
}

ValueComparison compare_values(const LqSpec& spec, const FeedbackControl& ctrl,
                               const NoisePlan& noise, const LqOptions& options) {
  const auto cx = evaluate_cost(spec, ctrl, LqSystem::x, noise, options);
  const auto cy = evaluate_cost(spec, ctrl, LqSystem::y, noise, options);
  std::vector<double> gap(cx.per_replication.size());
  for (std::size_t r = 0; r < gap.size(); ++r) gap[r] = cx.per_replication[r] - cy.per_replication[r];
  const auto g = summarize(std::move(gap));
  ValueComparison out;
  out.cost_x = cx.cost;
  out.cost_y = cy.cost;
  out.gap = g.cost;
  out.std_error = g.std_error;
  out.verdict = out.gap >= -options.z * out.std_error ? Verdict::consistent : Verdict::violated;
  return out;
}

}  // namespace mkv
