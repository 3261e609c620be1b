#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mkv/coefficients.hpp"
#include "mkv/control_lq.hpp"
#include "mkv/convergence.hpp"
#include "mkv/errors.hpp"
#include "mkv/order.hpp"
#include "mkv/simulate.hpp"
#include "mkv/systemic.hpp"

namespace mkv {

using json = nlohmann::json;

/// Configuration schema violation; `field` is the dotted path of the culprit.
class ConfigError : public ParameterError {
 public:
  ConfigError(std::string field, const std::string& message)
      : ParameterError("config field '" + field + "': " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Typed access to a JSON object; errors name the full dotted path of the
/// offending field.
class FieldReader {
 public:
  explicit FieldReader(const json& node, std::string prefix = "")
      : node_(&node), prefix_(std::move(prefix)) {}

  const json& node() const noexcept { return *node_; }
  std::string full(std::string_view path) const;

  bool has(std::string_view path) const;
  /// Node at a dotted path; throws ConfigError naming the path when absent.
  const json& require(std::string_view path) const;
  FieldReader sub(std::string_view path) const;

  double number(std::string_view path) const;
  double number(std::string_view path, double fallback) const;
  std::size_t count(std::string_view path) const;
  std::size_t count(std::string_view path, std::size_t fallback) const;
  std::uint64_t seed(std::string_view path, std::uint64_t fallback) const;
  std::string string(std::string_view path, const std::string& fallback) const;
  bool boolean(std::string_view path, bool fallback) const;
  std::vector<double> numbers(std::string_view path) const;
  std::vector<std::size_t> counts(std::string_view path) const;

 private:
  const json* find(std::string_view path) const;
  const json* node_;
  std::string prefix_;
};

/// Built-in coefficient sets by name: cfs, cfs_sigmoid, linear_meanfield, gbm,
/// custom_affine. `where` prefixes error field paths.
CoefficientSet make_coefficients(const std::string& name, const FieldReader& params);
/// {"name": ..., "params": {...}}
CoefficientSet parse_model(const FieldReader& model);
/// {"type": "constant", "value": x} or {"type": "gaussian", "mean": m, "sd": s}.
InitSampler parse_init(const FieldReader& init);
Scheme parse_scheme(const std::string& s, const std::string& field);
/// {"T": ..., "M": ...}
TimeGrid parse_grid(const FieldReader& grid);

struct SimulateConfig {
  CoefficientSet coeffs;
  InitSampler init;
  TimeGrid grid{1.0, 1};
  std::size_t n_particles = 1;
  std::size_t replications = 1;
  Scheme scheme = Scheme::euler;
  std::uint64_t seed = 1;
  bool write_csv = true;
  bool write_binary = false;
};
SimulateConfig parse_simulate_config(const json& j);

ConvergenceConfig parse_convergence_config(const json& j);

struct OrderCheckConfig {
  OrderKind kind = OrderKind::cv;
  std::vector<double> mu, nu;          ///< unconditional kinds
  json probes;                         ///< probe family description (may be null)
  OrderTestOptions test;
  // conditional kinds
  SystemSpec system_x, system_y;
  TimeGrid grid{1.0, 1};
  ConditionalOptions conditional;
  std::uint64_t seed = 1;
};
OrderCheckConfig parse_order_check_config(const json& j);
/// Probe family from a description; `mu`/`nu` supply the pooled range for
/// stop_loss_span. Null selects the kind's default.
ProbeFamily parse_probes(const json& j, bool increasing, std::span<const double> mu,
                         std::span<const double> nu);

SweepConfig parse_sweep_config(const json& j);

struct LqConfig {
  LqSpec spec;
  FeedbackControl control;
  LqOptions options;
  std::uint64_t seed = 1;
};
LqConfig parse_lq_config(const json& j);

}  // namespace mkv
