#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mkv {

/// Invalid argument or configuration value passed to a library routine.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A simulated state or evaluated functional became non-finite.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::size_t step, std::size_t particle)
      : std::runtime_error(what), step_(step), particle_(particle) {}

  std::size_t step() const noexcept { return step_; }
  std::size_t particle() const noexcept { return particle_; }

 private:
  std::size_t step_;
  std::size_t particle_;
};

}  // namespace mkv
