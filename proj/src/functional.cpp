#include <algorithm>
#include <cmath>

#include "mkv/order.hpp"

namespace mkv {

ProbeEstimate functional_probe(const ParticleEnsemble& ensemble, const PathFunctional& f) {
  if (!f) throw ParameterError("functional_probe needs a functional");
  if (ensemble.n_particles == 0) throw ParameterError("functional_probe on an empty ensemble");
  const std::size_t n = ensemble.n_particles;
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = f(interpolate_affine(ensemble.path(i), ensemble.grid));
    if (!std::isfinite(values[i])) {
      throw NumericError("path functional is not finite for particle " + std::to_string(i), 0, i);
    }
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  return {mean, sd / std::sqrt(static_cast<double>(n))};
}

namespace functionals {

PathFunctional terminal_value() {
  return [](const ContinuousPath& p) { return p.nodes()[p.nodes().size() - 1]; };
}

// Extremes of a piecewise affine path are attained at nodes.
PathFunctional running_max() {
  return [](const ContinuousPath& p) {
    const auto& x = p.nodes();
    double best = x[0];
    for (std::size_t m = 1; m < x.size(); ++m) best = std::max(best, x[m]);
    return best;
  };
}

PathFunctional running_min() {
  return [](const ContinuousPath& p) {
    const auto& x = p.nodes();
    double best = x[0];
    for (std::size_t m = 1; m < x.size(); ++m) best = std::min(best, x[m]);
    return best;
  };
}

PathFunctional sup_norm() {
  return [](const ContinuousPath& p) { return p.sup_norm(); };
}

PathFunctional integral_below(double barrier) {
  return [barrier](const ContinuousPath& p) {
    const auto& x = p.nodes();
    const auto& g = p.grid();
    double total = 0.0;
    for (std::size_t m = 0; m + 1 < x.size(); ++m) {
      const double len = g.node(m + 1) - g.node(m);
      const double a = barrier - x[m];
      const double b = barrier - x[m + 1];
      if (a >= 0.0 && b >= 0.0) {
        total += 0.5 * len * (a + b);
      } else if (a > 0.0) {
        total += 0.5 * len * a * a / (a - b);
      } else if (b > 0.0) {
        total += 0.5 * len * b * b / (b - a);
      }
    }
    return total;
  };
}

}  // namespace functionals
}  // namespace mkv
