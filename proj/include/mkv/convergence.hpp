#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mkv/coefficients.hpp"
#include "mkv/simulate.hpp"

namespace mkv {

struct ConvergenceConfig {
  CoefficientSet coeffs;
  InitSampler init;
  double horizon = 1.0;
  std::vector<std::size_t> steps{16, 32, 64, 128, 256};
  std::size_t reference_steps = 4096;
  std::size_t n_particles = 32;
  std::size_t n_rep = 1000;
  double p = 2.0;
  /// Scheme of the coarse runs; the reference is always plain Euler.
  Scheme scheme = Scheme::euler;
  std::uint64_t seed = 7;
  std::size_t threads = 0;
};

struct ConvergencePoint {
  std::size_t steps = 0;
  double h = 0.0;
  double error = 0.0;  ///< E[max_m |X^M_{t_m} - X^ref_{t_m}|^p]^{1/p}
};

struct ConvergenceResult {
  std::vector<ConvergencePoint> points;
  double slope = 0.0;  ///< least-squares slope of log error against log h
  double intercept = 0.0;
};

/// Strong error of coarse schemes against a fine reference driven by the same
/// Brownian paths (coarse increments aggregate the fine ones).
ConvergenceResult strong_convergence_study(const ConvergenceConfig& config);

/// Least-squares slope and intercept of y against x.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mkv
