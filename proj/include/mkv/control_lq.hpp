#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "mkv/coefficients.hpp"
#include "mkv/noise.hpp"
#include "mkv/order.hpp"
#include "mkv/time_grid.hpp"

namespace mkv {

/// Linear-quadratic mean-field control problem with two candidate diffusions:
/// the X system uses the constant sigma_bar, the Y system uses
/// theta(t, x, mu) with 0 <= theta <= sigma_bar.
struct LqSpec {
  double b0 = 0.0, b = 0.0, b_bar = 0.0, c = 0.0;
  double sigma_bar = 1.0;
  std::function<double(double t, double x, const MeasureView& mu)> theta;
  double sigma0 = 0.0;
  double q2 = 0.0, q2_bar = 0.0, r2 = 1.0, p2 = 0.0, p2_bar = 0.0;
  double x0 = 0.0;
  TimeGrid grid{1.0, 100};

  /// Checks weight signs and samples theta on a (t, x) probe grid.
  void validate() const;
};

/// alpha(t, x, mean) = -2 Gamma(t) (x - (1 + c) mean) - c gamma(t), with Gamma
/// and gamma tabulated on the grid nodes.
struct FeedbackControl {
  std::vector<double> gamma_big;    ///< Gamma_t at nodes
  std::vector<double> gamma_small;  ///< gamma_t at nodes

  static FeedbackControl constant(const TimeGrid& grid, double gamma_big, double gamma_small);
  static FeedbackControl zero(const TimeGrid& grid) { return constant(grid, 0.0, 0.0); }

  double operator()(std::size_t node, double x, double mean, double c) const noexcept {
    return -2.0 * gamma_big[node] * (x - (1.0 + c) * mean) - c * gamma_small[node];
  }
  void validate(const TimeGrid& grid) const;
};

enum class LqSystem { x, y };
enum class Quadrature { left_endpoint, trapezoidal };

struct LqOptions {
  std::size_t n_particles = 100;
  std::size_t n_mc = 100;
  Quadrature quadrature = Quadrature::left_endpoint;
  double z = 3.0;
  std::size_t threads = 0;
};

struct CostEstimate {
  double cost = 0.0;
  double std_error = 0.0;
  std::vector<double> per_replication;
};

/// Controlled coefficients of one system (exposed for tests).
CoefficientSet lq_coefficients(const LqSpec& spec, const FeedbackControl& ctrl, LqSystem system);

/// Cost functional under the supplied feedback, averaged over common-noise
/// replications; E^1 is replaced by the particle average.
CostEstimate evaluate_cost(const LqSpec& spec, const FeedbackControl& ctrl, LqSystem system,
                           const NoisePlan& noise, const LqOptions& options = {});

struct ValueComparison {
  double cost_x = 0.0;
  double cost_y = 0.0;
  double gap = 0.0;  ///< cost_x - cost_y
  double std_error = 0.0;
  Verdict verdict = Verdict::consistent;
};

/// Both systems coupled through `noise`; consistent iff gap >= -z stderr.
ValueComparison compare_values(const LqSpec& spec, const FeedbackControl& ctrl,
                               const NoisePlan& noise, const LqOptions& options = {});

}  // namespace mkv
