#include "mkv/coefficients.hpp"

#include <cmath>
#include <utility>

#include "mkv/errors.hpp"

namespace mkv {

void CoefficientSet::validate() const {
  if (dim_state == 0 || dim_noise == 0) {
    throw ParameterError("coefficient set '" + name + "' has a zero dimension");
  }
  if (!drift || !diffusion || !common_diffusion) {
    throw ParameterError("coefficient set '" + name + "' is missing a callable");
  }
  if (lip_x_diffusion < 0.0 || lip_x_drift < 0.0) {
    throw ParameterError("coefficient set '" + name + "' has a negative Lipschitz constant");
  }
}

CoefficientSet scalar_coefficients(std::string name, ScalarDrift drift, ScalarDrift diffusion,
                                   ScalarCommon common_diffusion) {
  CoefficientSet c;
  c.name = std::move(name);
  c.drift = [f = std::move(drift)](double t, std::span<const double> x, const MeasureView& mu,
                                   std::span<double> out) { out[0] = f(t, x[0], mu); };
  c.diffusion = [f = std::move(diffusion)](double t, std::span<const double> x,
                                           const MeasureView& mu,
                                           std::span<double> out) { out[0] = f(t, x[0], mu); };
  c.common_diffusion = [f = std::move(common_diffusion)](double t, const MeasureView& mu,
                                                         std::span<double> out) {
    out[0] = f(t, mu);
  };
  return c;
}

CoefficientSet constant_coefficients(double sigma, double sigma0) {
  return scalar_coefficients(
      "constant", [](double, double, const MeasureView&) { return 0.0; },
      [sigma](double, double, const MeasureView&) { return sigma; },
      [sigma0](double, const MeasureView&) { return sigma0; });
}

CoefficientSet cfs_coefficients(double a, double idio, double common) {
  auto c = scalar_coefficients(
      "cfs", [a](double, double x, const MeasureView& mu) { return a * (mu.mean() - x); },
      [idio](double, double, const MeasureView&) { return idio; },
      [common](double, const MeasureView&) { return common; });
  c.lip_x_drift = a;
  c.drift_conserves_mean = true;
  return c;
}

double scaled_sigmoid(double x, double slope) noexcept {
  return 1.0 / (1.0 + std::exp(-slope * x));
}

CoefficientSet cfs_sigmoid_coefficients(double a, double idio_scale, double slope,
                                        double sigma0) {
  auto c = scalar_coefficients(
      "cfs_sigmoid",
      [a](double, double x, const MeasureView& mu) { return a * (mu.mean() - x); },
      [idio_scale, slope](double, double x, const MeasureView&) {
        return idio_scale * scaled_sigmoid(x, slope);
      },
      [sigma0](double, const MeasureView&) { return sigma0; });
  c.lip_x_drift = a;
  // S' <= slope / 4
  c.lip_x_diffusion = std::abs(idio_scale * slope) / 4.0;
  c.drift_conserves_mean = true;
  return c;
}

CoefficientSet linear_meanfield_coefficients(const LinearMeanFieldParams& p) {
  auto c = scalar_coefficients(
      "linear_meanfield",
      [p](double, double x, const MeasureView& mu) {
        return p.b0 + p.kappa * (mu.mean() - x) - p.gamma * x;
      },
      [p](double, double x, const MeasureView&) {
        return p.s * (1.0 + p.amp * std::sin(p.freq * x));
      },
      [p](double, const MeasureView&) { return p.sigma0; });
  c.lip_x_drift = std::abs(p.kappa + p.gamma);
  c.lip_x_diffusion = std::abs(p.s * p.amp * p.freq);
  return c;
}

CoefficientSet gbm_coefficients(double r, double s, double s0) {
  auto c = scalar_coefficients(
      "gbm", [r](double, double x, const MeasureView&) { return r * x; },
      [s](double, double x, const MeasureView&) { return s * x; },
      [s0](double, const MeasureView&) { return s0; });
  c.lip_x_drift = std::abs(r);
  c.lip_x_diffusion = std::abs(s);
  return c;
}

CoefficientSet custom_affine_coefficients(const AffineParams& p) {
  auto c = scalar_coefficients(
      "custom_affine",
      [p](double, double x, const MeasureView& mu) { return p.b0 + p.b1 * x + p.b2 * mu.mean(); },
      [p](double, double x, const MeasureView& mu) { return p.s0 + p.s1 * x + p.s2 * mu.mean(); },
      [p](double, const MeasureView& mu) { return p.c0 + p.c2 * mu.mean(); });
  c.lip_x_drift = std::abs(p.b1);
  c.lip_x_diffusion = std::abs(p.s1);
  return c;
}

}  // namespace mkv
