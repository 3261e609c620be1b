#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mkv/time_grid.hpp"

namespace mkv {

/// Node values x_0..x_M in R^d, stored row-major ((M+1) x d).
struct DiscretePath {
  std::size_t dim = 1;
  std::vector<double> values;

  std::size_t size() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const double> node(std::size_t m) const noexcept {
    return std::span<const double>(values).subspan(m * dim, dim);
  }
  double operator[](std::size_t m) const noexcept { return values[m * dim]; }
};

/// A path t -> R^d on [0, T].
using PathFunction = std::function<void(double t, std::span<double> out)>;

/// Piecewise affine path through grid nodes.
class ContinuousPath {
 public:
  ContinuousPath(TimeGrid grid, DiscretePath nodes);

  const TimeGrid& grid() const noexcept { return grid_; }
  const DiscretePath& nodes() const noexcept { return nodes_; }
  std::size_t dim() const noexcept { return nodes_.dim; }

  void at(double t, std::span<double> out) const;
  /// First component at t.
  double operator()(double t) const;

  /// sup_t |path(t)|; attained at a node for a piecewise affine path.
  double sup_norm() const noexcept;

  PathFunction as_function() const;

 private:
  TimeGrid grid_;
  DiscretePath nodes_;
};

/// i_M: piecewise affine interpolation of node values.
ContinuousPath interpolate_affine(const DiscretePath& x, const TimeGrid& grid);

/// I_M: i_M applied to the samples alpha(t_0), ..., alpha(t_M).
ContinuousPath interpolate_functional(const PathFunction& alpha, std::size_t dim,
                                      const TimeGrid& grid);

}  // namespace mkv
