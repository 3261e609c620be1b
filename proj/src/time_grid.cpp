#include "mkv/time_grid.hpp"

#include <cmath>
#include <string>

#include "mkv/errors.hpp"

namespace mkv {

TimeGrid::TimeGrid(double horizon, std::size_t steps)
    : horizon_(horizon), steps_(steps), h_(0.0) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ParameterError("time grid horizon must be finite and positive, got " +
                         std::to_string(horizon));
  }
  if (steps == 0) throw ParameterError("time grid needs at least one step");
  h_ = horizon_ / static_cast<double>(steps_);
}

double TimeGrid::node(std::size_t m) const noexcept {
  if (m >= steps_) return horizon_;
  return horizon_ * static_cast<double>(m) / static_cast<double>(steps_);
}

std::vector<double> TimeGrid::nodes() const {
  std::vector<double> out(size());
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = node(m);
  return out;
}

std::size_t TimeGrid::segment(double t) const noexcept {
  if (!(t > 0.0)) return 0;
  if (t >= horizon_) return steps_ - 1;
  auto m = static_cast<std::size_t>(std::floor(t / h_));
  if (m >= steps_) m = steps_ - 1;
  // floor(t/h) may land one off near a node.
  if (node(m) > t && m > 0) --m;
  if (m + 1 < steps_ && node(m + 1) <= t) ++m;
  return m;
}

std::size_t TimeGrid::nearest_node(double t) const noexcept {
  if (!(t > 0.0)) return 0;
  if (t >= horizon_) return steps_;
  auto m = static_cast<std::size_t>(std::llround(t / h_));
  return m > steps_ ? steps_ : m;
}

TimeGrid TimeGrid::refined(std::size_t factor) const {
  if (factor == 0) throw ParameterError("refinement factor must be positive");
  return TimeGrid(horizon_, steps_ * factor);
}

}  // namespace mkv
