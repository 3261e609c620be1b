#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mkv/time_grid.hpp"

namespace mkv {

/// Equal-weight empirical probability measure on the real line.
///
/// Samples are kept sorted together with suffix sums, so quantiles, TVaR and
/// stop-loss transforms are exact functionals of the order statistics.
class EmpiricalMeasure1D {
 public:
  explicit EmpiricalMeasure1D(std::vector<double> samples);
  explicit EmpiricalMeasure1D(std::span<const double> samples)
      : EmpiricalMeasure1D(std::vector<double>(samples.begin(), samples.end())) {}

  std::size_t size() const noexcept { return sorted_.size(); }
  std::span<const double> sorted() const noexcept { return sorted_; }
  double min() const noexcept { return sorted_.front(); }
  double max() const noexcept { return sorted_.back(); }
  double mean() const noexcept;

  /// Left-continuous inverse CDF: inf{x : F(x) >= p}, p in (0, 1].
  double quantile(double p) const;

  /// (1-p)^{-1} * integral of the quantile function over (p, 1].
  double tvar(double p) const;

  /// (1/n) sum (x_i - K)_+.
  double stop_loss(double strike) const noexcept;

  /// Measure of x_i + c.
  EmpiricalMeasure1D shifted(double c) const;

 private:
  std::vector<double> sorted_;
  std::vector<double> suffix_;  // suffix_[k] = sum of sorted_[k..n-1], suffix_[n] = 0
};

/// Exact 1-D optimal transport cost between equal-size empirical measures.
double wasserstein_p_1d(const EmpiricalMeasure1D& mu, const EmpiricalMeasure1D& nu, double p);

/// W_p(mu, delta_0) = ((1/n) sum |x_i|^p)^{1/p}.
double wp_to_dirac0(const EmpiricalMeasure1D& mu, double p);

double tvar(const EmpiricalMeasure1D& mu, double p);
double stop_loss(const EmpiricalMeasure1D& mu, double strike);

/// Flow of empirical measures on a time grid; all nodes share one sample count.
class MeasurePath {
 public:
  MeasurePath(TimeGrid grid, std::vector<EmpiricalMeasure1D> measures);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t sample_count() const noexcept { return measures_.front().size(); }
  const EmpiricalMeasure1D& at(std::size_t m) const { return measures_.at(m); }
  std::size_t size() const noexcept { return measures_.size(); }

 private:
  TimeGrid grid_;
  std::vector<EmpiricalMeasure1D> measures_;
};

/// d_C: supremum over grid nodes of W_p between the two measure flows.
double sup_wasserstein(const MeasurePath& a, const MeasurePath& b, double p);

/// Samples from a CSV with one column per coordinate (optional header row).
/// Returns column-major data: result[k] holds coordinate k.
std::vector<std::vector<double>> read_sample_csv(const std::string& path);

}  // namespace mkv
