#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mkv/coefficients.hpp"
#include "mkv/interpolate.hpp"
#include "mkv/noise.hpp"
#include "mkv/time_grid.hpp"

namespace mkv {

enum class Scheme { euler, truncated_euler };

const char* to_string(Scheme s) noexcept;

/// Draws X_0 for one particle from d standard normals `z` (read from the
/// particle's initial-condition stream of the noise plan).
using InitSampler =
    std::function<void(std::size_t particle, std::span<const double> z, std::span<double> x0)>;

/// Every particle starts at `x0`.
InitSampler constant_init(std::vector<double> x0);
InitSampler constant_init(double x0);
/// X_0 = mean + sd * z, coordinatewise.
InitSampler gaussian_init(double mean, double sd);

/// Called once per step with the idiosyncratic increments (N x q, after any
/// truncation) and the common increment actually consumed.
using StepObserver = std::function<void(std::size_t step, std::span<const double> idio,
                                        std::span<const double> common)>;

struct SimulationOptions {
  Scheme scheme = Scheme::euler;
  /// Checks that every coefficient evaluation returns finite values.
  bool check_coefficients = false;
  StepObserver observer;
};

/// N particle paths on a grid plus the common Brownian path driving them.
struct ParticleEnsemble {
  TimeGrid grid{1.0, 1};
  std::size_t n_particles = 0;
  std::size_t dim_state = 1;
  std::size_t dim_noise = 1;
  Scheme scheme = Scheme::euler;
  std::vector<double> states;       ///< [N][M+1][d]
  std::vector<double> common_path;  ///< [M+1][q], cumulative B^0 at nodes
  std::vector<double> mean_path;    ///< [M+1][d], empirical mean at nodes

  double state(std::size_t n, std::size_t m, std::size_t k = 0) const noexcept {
    return states[(n * grid.size() + m) * dim_state + k];
  }
  std::span<const double> path_values(std::size_t n) const noexcept {
    return std::span<const double>(states).subspan(n * grid.size() * dim_state,
                                                   grid.size() * dim_state);
  }
  DiscretePath path(std::size_t n) const;
  /// Coordinate k of every particle at node m.
  std::vector<double> at_node(std::size_t m, std::size_t k = 0) const;
  std::vector<double> terminal(std::size_t k = 0) const { return at_node(grid.steps(), k); }
  DiscretePath mean(std::size_t k = 0) const;
};

/// Euler scheme for the N-particle system, driven by an arbitrary increment
/// source. `init_plan` and `replication` address the initial-condition draws.
ParticleEnsemble simulate_with_source(const CoefficientSet& coeffs, const TimeGrid& grid,
                                      const InitSampler& init, IncrementSource& source,
                                      const NoisePlan& init_plan, std::uint64_t replication,
                                      const SimulationOptions& options = {});

/// X <- X + h b + sqrt(h) sigma Z + sqrt(h) sigma^0 Z^0 with mu = empirical
/// measure of the N current states and Z^0 shared by all particles.
ParticleEnsemble simulate_particle_system(const CoefficientSet& coeffs, const TimeGrid& grid,
                                          const InitSampler& init, std::size_t n_particles,
                                          const NoisePlan& noise, std::uint64_t replication,
                                          const SimulationOptions& options = {});

/// c_{h,sigma} = 1 / (2 sqrt(h) lip).
double truncation_threshold(double h, double lip);

/// T^h(z) = z 1{|z| <= c_{h,sigma}}.
double truncate_gaussian(double z, double h, double lip);

/// Checks the truncated scheme's preconditions (d = q = 1, lip > 0, and
/// h < max(1 / (2 [b]_Lip), 1)).
void validate_truncated(const CoefficientSet& coeffs, const TimeGrid& grid);

/// Same as simulate_particle_system with idiosyncratic increments replaced by
/// T^h(Z); the common increment is left untouched.
ParticleEnsemble simulate_truncated(const CoefficientSet& coeffs, const TimeGrid& grid,
                                    const InitSampler& init, std::size_t n_particles,
                                    const NoisePlan& noise, std::uint64_t replication,
                                    SimulationOptions options = {});

struct SoloPath {
  DiscretePath path;
  std::vector<double> common_path;  ///< [M+1][q]
};

/// One path of the McKean-Vlasov Euler scheme. The conditional law at each
/// node is approximated by a cloud of proxy_n particles sharing the common
/// path, which adds an O(proxy_n^{-1/2}) bias. Returns particle 0.
SoloPath solo_mkv_path(const CoefficientSet& coeffs, const TimeGrid& grid,
                       const InitSampler& init, const NoisePlan& noise,
                       std::uint64_t replication, std::size_t proxy_n,
                       const SimulationOptions& options = {});

}  // namespace mkv
