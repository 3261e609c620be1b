#pragma once

#include <cstddef>
#include <vector>

namespace mkv {

/// Uniform grid t_m = m T / M, m = 0..M.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps);

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  double step_size() const noexcept { return h_; }
  std::size_t size() const noexcept { return steps_ + 1; }

  /// Node t_m; node(steps()) is exactly the horizon.
  double node(std::size_t m) const noexcept;
  std::vector<double> nodes() const;

  /// Index m of the segment [t_m, t_{m+1}] containing t (clamped to [0, T]).
  std::size_t segment(double t) const noexcept;
  /// Index of the node closest to t.
  std::size_t nearest_node(double t) const noexcept;

  /// Grid with the same horizon and steps * factor steps.
  TimeGrid refined(std::size_t factor) const;

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) noexcept {
    return a.horizon_ == b.horizon_ && a.steps_ == b.steps_;
  }

 private:
  double horizon_;
  std::size_t steps_;
  double h_;
};

}  // namespace mkv
