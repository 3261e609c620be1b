#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

namespace mkv {

/// Read-only view of the empirical measure of the particle cloud at one node.
///
/// The engine precomputes the coordinate means once per step so that
/// mean-field coefficients cost O(1) per particle.
class MeasureView {
 public:
  MeasureView(std::span<const double> states, std::span<const double> mean, std::size_t dim)
      : states_(states), mean_(mean), dim_(dim) {}

  std::size_t size() const noexcept { return states_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  double mean(std::size_t coord = 0) const noexcept { return mean_[coord]; }
  std::span<const double> mean_vector() const noexcept { return mean_; }
  std::span<const double> particle(std::size_t n) const noexcept {
    return states_.subspan(n * dim_, dim_);
  }
  std::span<const double> states() const noexcept { return states_; }

 private:
  std::span<const double> states_;
  std::span<const double> mean_;
  std::size_t dim_;
};

/// b(t, x, mu) written into out (d).
using DriftFn = std::function<void(double t, std::span<const double> x, const MeasureView& mu,
                                   std::span<double> out)>;
/// sigma(t, x, mu) written into out (d x q, row-major).
using DiffusionFn = std::function<void(double t, std::span<const double> x,
                                       const MeasureView& mu, std::span<double> out)>;
/// sigma^0(t, mu) written into out (d x q, row-major).
using CommonDiffusionFn =
    std::function<void(double t, const MeasureView& mu, std::span<double> out)>;

/// Coefficients (b, sigma, sigma^0) of a conditional McKean-Vlasov SDE.
struct CoefficientSet {
  std::string name = "custom";
  std::size_t dim_state = 1;
  std::size_t dim_noise = 1;
  DriftFn drift;
  DiffusionFn diffusion;
  CommonDiffusionFn common_diffusion;
  /// Lipschitz constant of sigma in x; only the truncated scheme needs it.
  double lip_x_diffusion = 0.0;
  /// Lipschitz constant of b in x; 0 when unknown.
  double lip_x_drift = 0.0;
  /// Declares sum_n b(t, x_n, mu^N) = 0 for every configuration (exchange-type
  /// interaction). The engine then propagates the empirical mean from the
  /// noise terms alone, so the mean path does not depend on the drift.
  bool drift_conserves_mean = false;

  void validate() const;
};

using ScalarDrift = std::function<double(double t, double x, const MeasureView& mu)>;
using ScalarCommon = std::function<double(double t, const MeasureView& mu)>;

/// Builds a d = q = 1 coefficient set from scalar callables.
CoefficientSet scalar_coefficients(std::string name, ScalarDrift drift, ScalarDrift diffusion,
                                   ScalarCommon common_diffusion);

/// b = 0, sigma = s, sigma^0 = s0 (d = q = 1).
CoefficientSet constant_coefficients(double sigma, double sigma0);

/// Interbank exchange model: b = a (mean - x), sigma = idio, sigma^0 = common.
CoefficientSet cfs_coefficients(double a, double idio, double common);

/// S(x) = 1 / (1 + exp(-slope x)).
double scaled_sigmoid(double x, double slope) noexcept;

/// b = a (mean - x), sigma = idio_scale S(x), sigma^0 = sigma0.
CoefficientSet cfs_sigmoid_coefficients(double a, double idio_scale, double slope,
                                        double sigma0);

struct LinearMeanFieldParams {
  double kappa = 1.0;   ///< mean attraction
  double gamma = 0.5;   ///< linear decay
  double b0 = 0.0;      ///< constant drift
  double s = 1.0;       ///< diffusion level
  double amp = 0.5;     ///< sigma = s (1 + amp sin(freq x))
  double freq = 1.0;
  double sigma0 = 0.5;  ///< common loading
};

/// Lipschitz benchmark: b = b0 + kappa (mean - x) - gamma x,
/// sigma = s (1 + amp sin(freq x)), sigma^0 = sigma0.
CoefficientSet linear_meanfield_coefficients(const LinearMeanFieldParams& p);

/// b = r x, sigma = s x, sigma^0 = s0.
CoefficientSet gbm_coefficients(double r, double s, double s0);

struct AffineParams {
  double b0 = 0, b1 = 0, b2 = 0;  ///< b = b0 + b1 x + b2 mean
  double s0 = 0, s1 = 0, s2 = 0;  ///< sigma = s0 + s1 x + s2 mean
  double c0 = 0, c2 = 0;          ///< sigma^0 = c0 + c2 mean
};

CoefficientSet custom_affine_coefficients(const AffineParams& p);

}  // namespace mkv
