#include "mkv/interpolate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mkv/errors.hpp"

namespace mkv {

ContinuousPath::ContinuousPath(TimeGrid grid, DiscretePath nodes)
    : grid_(grid), nodes_(std::move(nodes)) {
  if (nodes_.dim == 0 || nodes_.values.size() % nodes_.dim != 0) {
    throw ParameterError("discrete path storage does not match its dimension");
  }
  if (nodes_.size() != grid_.size()) {
    throw ParameterError("path has " + std::to_string(nodes_.size()) + " nodes, grid expects " +
                         std::to_string(grid_.size()));
  }
}

void ContinuousPath::at(double t, std::span<double> out) const {
  if (!(t >= 0.0 && t <= grid_.horizon())) {
    throw ParameterError("path queried outside [0, T] at t = " + std::to_string(t));
  }
  const std::size_t m = grid_.segment(t);
  const double left = grid_.node(m);
  const double right = grid_.node(m + 1);
  const double w = (t - left) / (right - left);
  const auto a = nodes_.node(m);
  const auto b = nodes_.node(m + 1);
  for (std::size_t k = 0; k < nodes_.dim; ++k) {
    // (1-w) x_m + w x_{m+1} returns the node value exactly at w = 0 and w = 1.
    out[k] = (1.0 - w) * a[k] + w * b[k];
  }
}

double ContinuousPath::operator()(double t) const {
  std::vector<double> v(nodes_.dim);
  at(t, v);
  return v[0];
}

double ContinuousPath::sup_norm() const noexcept {
  double best = 0.0;
  for (std::size_t m = 0; m < nodes_.size(); ++m) {
    double sq = 0.0;
    for (double v : nodes_.node(m)) sq += v * v;
    best = std::max(best, std::sqrt(sq));
  }
  return best;
}

PathFunction ContinuousPath::as_function() const {
  return [self = *this](double t, std::span<double> out) { self.at(t, out); };
}

ContinuousPath interpolate_affine(const DiscretePath& x, const TimeGrid& grid) {
  return ContinuousPath(grid, x);
}

ContinuousPath interpolate_functional(const PathFunction& alpha, std::size_t dim,
                                      const TimeGrid& grid) {
  if (!alpha) throw ParameterError("interpolate_functional needs a path");
  if (dim == 0) throw ParameterError("path dimension must be positive");
  DiscretePath x{dim, std::vector<double>(grid.size() * dim)};
  for (std::size_t m = 0; m < grid.size(); ++m) {
    alpha(grid.node(m), std::span<double>(x.values).subspan(m * dim, dim));
  }
  return ContinuousPath(grid, std::move(x));
}

}  // namespace mkv
