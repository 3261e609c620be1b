#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mkv/coefficients.hpp"
#include "mkv/interpolate.hpp"
#include "mkv/noise.hpp"
#include "mkv/simulate.hpp"
#include "mkv/time_grid.hpp"

namespace mkv {

/// Interbank lending model: N banks with log-reserves attracted to their mean
/// at exchange rate a, driven by idiosyncratic and common Brownian motions.
struct CfsParams {
  enum class Variant { constant, sigmoid };

  double a = 1.0;
  double sigma = 5.0;
  double rho = 0.8;
  std::size_t n_banks = 10;
  double default_level = -0.7;
  TimeGrid grid{1.0, 100};
  Variant variant = Variant::constant;
  /// true: idiosyncratic loading sigma*rho and common loading
  /// sigma*sqrt(1-rho^2) (4 and 3 for sigma = 5, rho = 4/5, as in the
  /// published experiment). false: the generic form, idiosyncratic
  /// sigma*sqrt(1-rho^2) and common sigma*rho.
  bool displayed_loadings = true;
  // sigmoid variant: sigma_i(x) = idio_scale * S(x), common loading sigma0
  double sigma0 = 2.0;
  double idio_scale = 4.0;
  double sigmoid_slope = 0.1;

  double idiosyncratic_loading() const noexcept;
  double common_loading() const noexcept;
  /// Variance rate of the empirical mean in the constant variant.
  double mean_variance_rate() const noexcept;

  void validate() const;
  CoefficientSet coefficients() const;
  std::string describe() const;
};

const char* to_string(CfsParams::Variant v) noexcept;

ParticleEnsemble simulate_cfs(const CfsParams& params, const NoisePlan& noise,
                              std::uint64_t replication);

struct EsdEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_mc = 0;
  std::uint64_t config_hash = 0;
};

/// max over nodes of (D - mean)_+ for one mean path.
double size_of_default(std::span<const double> mean_path, double default_level);

/// Monte Carlo ESD over replications of the empirical-mean path.
EsdEstimate esd(const std::vector<DiscretePath>& mean_paths, double default_level);

/// E[(D - min_{t<=T} W_t)_+] for a Brownian motion with variance rate v,
/// from P(min <= m) = 2 Phi(m / sqrt(vT)), by composite Simpson quadrature
/// with n_quad intervals.
double esd_oracle_variance(double variance_rate, double default_level, double horizon,
                           std::size_t n_quad = 4000);

/// Oracle for the constant variant with v = sigma^2 (rho^2 + (1-rho^2)/N).
double esd_analytic_oracle(double sigma, double rho, std::size_t n_banks, double default_level,
                           double horizon, std::size_t n_quad = 4000);

/// Oracle using the loadings of `params` (constant variant only).
double esd_analytic_oracle(const CfsParams& params, std::size_t n_quad = 4000);

/// Fit of ESD_M = ESD_inf - c sqrt(h_M) for the discretely monitored minimum of
/// a Brownian motion with variance rate v, from coupled simulations over
/// dyadic refinements of the coarsest grid.
struct MonitoringCalibration {
  double c = 0.0;
  double esd_limit = 0.0;
  std::vector<std::size_t> steps;
  std::vector<double> esd_values;
};

MonitoringCalibration calibrate_discrete_monitoring(double variance_rate, double default_level,
                                                    double horizon,
                                                    std::vector<std::size_t> steps,
                                                    std::size_t n_rep, std::uint64_t seed,
                                                    std::size_t threads = 0);

struct SweepConfig {
  std::vector<std::size_t> n_values{10, 50, 100};
  std::vector<double> a_values{1.0, 10.0, 100.0};
  std::size_t n_mc = 10000;
  std::size_t steps = 100;
  double horizon = 1.0;
  std::uint64_t seed = 20240611;
  std::size_t threads = 0;
  CfsParams base;  ///< sigma, rho, D, loadings and sigmoid parameters
};

struct SweepRow {
  std::string variant;
  std::size_t n_banks = 0;
  double a = 0.0;
  std::size_t n_mc = 0;
  std::size_t steps = 0;
  double esd = 0.0;
  double esd_stderr = 0.0;
  double mean_terminal = 0.0;
  double mean_terminal_stderr = 0.0;
  double seconds = 0.0;
};

/// Coupled comparison of both variants in one (N, a) cell.
struct SweepCell {
  std::size_t n_banks = 0;
  double a = 0.0;
  std::uint64_t cell_seed = 0;
  double gap = 0.0;        ///< ESD(constant) - ESD(sigmoid)
  double gap_stderr = 0.0; ///< paired standard error
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepCell> cells;
};

/// Seed of the noise plan shared by both variants of a cell.
std::uint64_t sweep_cell_seed(std::uint64_t seed, std::size_t n_banks, double a);

/// ESD for both variants over the (N, a) grid; rows ordered by variant,
/// then N, then a.
SweepResult figure1_sweep(const SweepConfig& config);

}  // namespace mkv
