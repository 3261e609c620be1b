#include "mkv/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mkv/errors.hpp"

namespace mkv {

const char* to_string(Scheme s) noexcept {
  return s == Scheme::euler ? "euler" : "truncated_euler";
}

InitSampler constant_init(std::vector<double> x0) {
  return [x0 = std::move(x0)](std::size_t, std::span<const double>, std::span<double> out) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = x0.size() == 1 ? x0[0] : x0.at(k);
  };
}

InitSampler constant_init(double x0) { return constant_init(std::vector<double>{x0}); }

InitSampler gaussian_init(double mean, double sd) {
  return [mean, sd](std::size_t, std::span<const double> z, std::span<double> out) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = mean + sd * z[k];
  };
}

DiscretePath ParticleEnsemble::path(std::size_t n) const {
  const auto v = path_values(n);
  return DiscretePath{dim_state, std::vector<double>(v.begin(), v.end())};
}

std::vector<double> ParticleEnsemble::at_node(std::size_t m, std::size_t k) const {
  std::vector<double> out(n_particles);
  for (std::size_t n = 0; n < n_particles; ++n) out[n] = state(n, m, k);
  return out;
}

DiscretePath ParticleEnsemble::mean(std::size_t k) const {
  DiscretePath p{1, std::vector<double>(grid.size())};
  for (std::size_t m = 0; m < grid.size(); ++m) p.values[m] = mean_path[m * dim_state + k];
  return p;
}

namespace {

void require_finite(std::span<const double> v, const char* what, std::size_t step,
                    std::size_t particle) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string(what) + " is not finite at step " + std::to_string(step) +
                             ", particle " + std::to_string(particle),
                         step, particle);
    }
  }
}

}  // namespace

ParticleEnsemble simulate_with_source(const CoefficientSet& coeffs, const TimeGrid& grid,
                                      const InitSampler& init, IncrementSource& source,
                                      const NoisePlan& init_plan, std::uint64_t replication,
                                      const SimulationOptions& options) {
  coeffs.validate();
  if (!init) throw ParameterError("initial-condition sampler is empty");
  const std::size_t n_part = source.n_particles();
  const std::size_t d = coeffs.dim_state;
  const std::size_t q = coeffs.dim_noise;
  const std::size_t n_nodes = grid.size();
  if (n_part == 0) throw ParameterError("particle system needs N >= 1");
  if (source.dim_noise() != q) {
    throw ParameterError("noise dimension " + std::to_string(source.dim_noise()) +
                         " does not match coefficient set '" + coeffs.name + "' (q = " +
                         std::to_string(q) + ")");
  }
  const bool truncated = options.scheme == Scheme::truncated_euler;
  if (truncated) validate_truncated(coeffs, grid);

  ParticleEnsemble ens;
  ens.grid = grid;
  ens.n_particles = n_part;
  ens.dim_state = d;
  ens.dim_noise = q;
  ens.scheme = options.scheme;
  ens.states.assign(n_part * n_nodes * d, 0.0);
  ens.common_path.assign(n_nodes * q, 0.0);
  ens.mean_path.assign(n_nodes * d, 0.0);

  std::vector<double> cur(n_part * d), next(n_part * d);
  std::vector<double> z_init(d);
  for (std::size_t n = 0; n < n_part; ++n) {
    init_plan.gaussian(NoiseDomain::initial, replication, static_cast<std::uint32_t>(n), 0,
                       z_init);
    auto x0 = std::span<double>(cur).subspan(n * d, d);
    init(n, z_init, x0);
    require_finite(x0, "initial state", 0, n);
  }
  const double inv_n = 1.0 / static_cast<double>(n_part);
  std::vector<double> mean(d, 0.0), mean_next(d);
  for (std::size_t n = 0; n < n_part; ++n)
    for (std::size_t k = 0; k < d; ++k) mean[k] += cur[n * d + k];
  for (auto& v : mean) v *= inv_n;

  auto store = [&](std::size_t m) {
    for (std::size_t n = 0; n < n_part; ++n)
      for (std::size_t k = 0; k < d; ++k) ens.states[(n * n_nodes + m) * d + k] = cur[n * d + k];
    for (std::size_t k = 0; k < d; ++k) ens.mean_path[m * d + k] = mean[k];
  };
  store(0);

  const double h = grid.step_size();
  const double sqrt_h = std::sqrt(h);
  const bool scalar = d == 1 && q == 1;
  std::vector<double> idio(n_part * q), common(q);
  std::vector<double> drift(d), sigma(d * q), sigma0(d * q), common_incr(d), noise_sum(d);

  for (std::size_t m = 0; m < grid.steps(); ++m) {
    const double t = grid.node(m);
    const MeasureView view(cur, mean, d);
    source.fill(m, idio, common);
    if (truncated) {
      for (double& z : idio) z = truncate_gaussian(z, h, coeffs.lip_x_diffusion);
    }
    if (options.observer) options.observer(m, idio, common);

    coeffs.common_diffusion(t, view, sigma0);
    if (options.check_coefficients) require_finite(sigma0, "common diffusion", m, 0);
    for (std::size_t k = 0; k < d; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < q; ++j) acc += sigma0[k * q + j] * common[j];
      common_incr[k] = sqrt_h * acc;
    }
    std::fill(noise_sum.begin(), noise_sum.end(), 0.0);

    for (std::size_t n = 0; n < n_part; ++n) {
      const auto x = std::span<const double>(cur).subspan(n * d, d);
      coeffs.drift(t, x, view, drift);
      coeffs.diffusion(t, x, view, sigma);
      if (options.check_coefficients) {
        require_finite(drift, "drift", m, n);
        require_finite(sigma, "diffusion", m, n);
      }
      if (scalar) {
        const double diff = sqrt_h * (sigma[0] * idio[n]);
        next[n] = x[0] + h * drift[0] + diff + common_incr[0];
        noise_sum[0] += diff;
      } else {
        for (std::size_t k = 0; k < d; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < q; ++j) acc += sigma[k * q + j] * idio[n * q + j];
          const double diff = sqrt_h * acc;
          next[n * d + k] = x[k] + h * drift[k] + diff + common_incr[k];
          noise_sum[k] += diff;
        }
      }
      require_finite(std::span<const double>(next).subspan(n * d, d), "state", m + 1, n);
    }

    if (coeffs.drift_conserves_mean) {
      for (std::size_t k = 0; k < d; ++k)
        mean_next[k] = mean[k] + noise_sum[k] * inv_n + common_incr[k];
    } else {
      std::fill(mean_next.begin(), mean_next.end(), 0.0);
      for (std::size_t n = 0; n < n_part; ++n)
        for (std::size_t k = 0; k < d; ++k) mean_next[k] += next[n * d + k];
      for (auto& v : mean_next) v *= inv_n;
    }
    for (std::size_t j = 0; j < q; ++j)
      ens.common_path[(m + 1) * q + j] = ens.common_path[m * q + j] + sqrt_h * common[j];

    cur.swap(next);
    mean.swap(mean_next);
    store(m + 1);
  }
  return ens;
}

ParticleEnsemble simulate_particle_system(const CoefficientSet& coeffs, const TimeGrid& grid,
                                          const InitSampler& init, std::size_t n_particles,
                                          const NoisePlan& noise, std::uint64_t replication,
                                          const SimulationOptions& options) {
  if (n_particles == 0) throw ParameterError("particle system needs N >= 1");
  DirectIncrements source(noise, replication, n_particles);
  return simulate_with_source(coeffs, grid, init, source, noise, replication, options);
}

double truncation_threshold(double h, double lip) {
  if (!(h > 0.0)) throw ParameterError("truncation needs h > 0");
  if (!(lip > 0.0)) {
    throw ParameterError(
        "truncation threshold needs a positive Lipschitz constant of sigma in x; use the "
        "plain Euler scheme for x-independent diffusions");
  }
  return 1.0 / (2.0 * std::sqrt(h) * lip);
}

double truncate_gaussian(double z, double h, double lip) {
  const double c = truncation_threshold(h, lip);
  return std::abs(z) <= c ? z : 0.0;
}

void validate_truncated(const CoefficientSet& coeffs, const TimeGrid& grid) {
  if (coeffs.dim_state != 1 || coeffs.dim_noise != 1) {
    throw ParameterError("truncated Euler scheme is one-dimensional (d = q = 1)");
  }
  if (!(coeffs.lip_x_diffusion > 0.0)) {
    throw ParameterError("truncated Euler scheme needs lip_x_diffusion > 0 for '" +
                         coeffs.name + "'");
  }
  const double h = grid.step_size();
  const double bound = coeffs.lip_x_drift > 0.0
                           ? std::max(1.0 / (2.0 * coeffs.lip_x_drift), 1.0)
                           : std::numeric_limits<double>::infinity();
  if (!(h < bound)) {
    throw ParameterError("step h = " + std::to_string(h) +
                         " too large for the truncated scheme (needs h < " +
                         std::to_string(bound) + ")");
  }
}

ParticleEnsemble simulate_truncated(const CoefficientSet& coeffs, const TimeGrid& grid,
                                    const InitSampler& init, std::size_t n_particles,
                                    const NoisePlan& noise, std::uint64_t replication,
                                    SimulationOptions options) {
  validate_truncated(coeffs, grid);
  options.scheme = Scheme::truncated_euler;
  return simulate_particle_system(coeffs, grid, init, n_particles, noise, replication, options);
}

SoloPath solo_mkv_path(const CoefficientSet& coeffs, const TimeGrid& grid,
                       const InitSampler& init, const NoisePlan& noise,
                       std::uint64_t replication, std::size_t proxy_n,
                       const SimulationOptions& options) {
  if (proxy_n < 2) throw ParameterError("solo_mkv_path needs proxy_N >= 2");
  auto ens = simulate_particle_system(coeffs, grid, init, proxy_n, noise, replication, options);
  return SoloPath{ens.path(0), std::move(ens.common_path)};
}

}  // namespace mkv
