#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mkv/errors.hpp"
#include "mkv/interpolate.hpp"
#include "mkv/measures.hpp"
#include "mkv/noise.hpp"
#include "mkv/simulate.hpp"

namespace mkv {

enum class OrderKind { cv, icv, conditional_cv, conditional_icv };
enum class Verdict { consistent, violated, inconclusive };

const char* to_string(OrderKind k) noexcept;
const char* to_string(Verdict v) noexcept;

/// A named convex test function phi; `growth` documents its tail behaviour
/// (e.g. "linear", "quadratic") and is not interpreted.
struct ConvexProbe {
  std::string name;
  std::function<double(double)> phi;
  std::string growth = "unspecified";
};

/// Test functions used to compare two samples.
struct ProbeFamily {
  enum class Kind { tvar_grid, stop_loss_grid, custom_convex };

  Kind kind = Kind::tvar_grid;
  std::vector<double> levels;  ///< TVaR levels in (0,1) or stop-loss strikes
  std::vector<ConvexProbe> custom;

  /// p in {0.05, 0.10, ..., 0.95, 0.99}.
  static ProbeFamily default_tvar();
  static ProbeFamily tvar(std::vector<double> levels);
  static ProbeFamily stop_loss(std::vector<double> strikes);
  /// `count` equally spaced strikes over the pooled [min, max] of both samples.
  static ProbeFamily stop_loss_span(std::span<const double> mu, std::span<const double> nu,
                                    std::size_t count = 41);
  static ProbeFamily convex(std::vector<ConvexProbe> probes);

  /// Number of probes this family evaluates.
  std::size_t size() const noexcept;
  void validate() const;
};

/// Outcome of one probe: statistic on each side and the bootstrap standard
/// error of their difference. margin = stat_nu - stat_mu.
struct ProbeResult {
  std::string id;
  double stat_mu = 0.0;
  double stat_nu = 0.0;
  double std_error = 0.0;
  double margin = 0.0;
  bool violated = false;
};

struct OrderReport {
  OrderKind kind = OrderKind::cv;
  double z = 3.0;
  double mean_gap = 0.0;         ///< mean(nu) - mean(mu)
  double mean_gap_stderr = 0.0;
  bool mean_equality_confirmed = true;  ///< |mean_gap| <= z stderr (cv kinds)
  std::vector<ProbeResult> probes;
  std::size_t n_violations = 0;
  Verdict verdict = Verdict::consistent;
  /// Conditional reports: one sub-report per common-noise path, and the
  /// number of violating paths tolerated under the null.
  std::vector<OrderReport> per_path;
  std::size_t violation_budget = 0;
};

struct OrderTestOptions {
  double z = 3.0;
  std::size_t bootstrap = 200;
  /// Samples are coupled index by index (same noise); enables paired tests.
  bool paired = false;
  std::uint64_t seed = 0x6d6b762d626f6f74ULL;
  /// Sub-stream of the bootstrap draws; distinct tags give independent draws.
  std::uint64_t stream = 0;
};

/// mu <=_cv nu test: equal means plus TVaR (or given convex) probes ordered.
OrderReport check_cv_1d(std::span<const double> mu, std::span<const double> nu,
                        const ProbeFamily& probes, const OrderTestOptions& options = {});
OrderReport check_cv_1d(const EmpiricalMeasure1D& mu, const EmpiricalMeasure1D& nu,
                        const ProbeFamily& probes, const OrderTestOptions& options = {});

/// mu <=_icv nu test: probes only, no mean equality. An empty family selects
/// the default stop-loss grid over the pooled range.
OrderReport check_icv_1d(std::span<const double> mu, std::span<const double> nu,
                         const ProbeFamily& probes, const OrderTestOptions& options = {});
OrderReport check_icv_1d(const EmpiricalMeasure1D& mu, const EmpiricalMeasure1D& nu,
                         const ProbeFamily& probes, const OrderTestOptions& options = {});

/// One side of a coupled comparison.
struct SystemSpec {
  CoefficientSet coeffs;
  InitSampler init;
  Scheme scheme = Scheme::euler;
};

struct ConditionalOptions {
  std::size_t n_common = 64;
  std::size_t n_particles = 1000;
  bool increasing = false;          ///< icv instead of cv
  std::vector<std::size_t> nodes;   ///< grid nodes to test; empty = terminal only
  OrderTestOptions test{.z = 3.0, .bootstrap = 200, .paired = true};
  std::size_t threads = 0;
};

/// Largest number of violating paths expected under the null: the
/// (1 - tail(z)) quantile of Binomial(n_paths, per_path_rate).
std::size_t binomial_violation_budget(std::size_t n_paths, double per_path_rate, double z);

/// Conditional (per common-noise path) convex-order test between two particle
/// systems coupled through one noise plan; path r uses replication r.
OrderReport check_conditional(const SystemSpec& x, const SystemSpec& y, const TimeGrid& grid,
                              const ProbeFamily& probes, const NoisePlan& noise,
                              const ConditionalOptions& options = {});

/// F evaluated on the piecewise affine reconstruction of a particle path.
using PathFunctional = std::function<double(const ContinuousPath&)>;

struct ProbeEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Particle average of F over coordinate `coord` and its standard error.
ProbeEstimate functional_probe(const ParticleEnsemble& ensemble, const PathFunctional& f);

namespace functionals {
PathFunctional terminal_value();
PathFunctional running_max();
PathFunctional running_min();
PathFunctional sup_norm();
/// integral over [0,T] of (barrier - x_t)_+.
PathFunctional integral_below(double barrier);
}  // namespace functionals

enum class MatrixOrder { ordered, not_ordered };

/// A <= B iff B B^T - A A^T is positive semi-definite. A negative `tol`
/// selects 1e-10 * ||S||_F.
MatrixOrder matrix_partial_order(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                 double tol = -1.0);

/// Thrown when the block-matrix construction's hypotheses do not hold.
class PreconditionViolation : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// Builds the N d x (N+1) d matrices [diag(A_n) | s0 I; ...] and
/// [diag(B_n) | t0 I; ...] and compares them with matrix_partial_order.
MatrixOrder block_matrix_order_check(const std::vector<Eigen::MatrixXd>& a_blocks,
                                     const std::vector<Eigen::MatrixXd>& b_blocks,
                                     double sigma0, double theta0, double tol = -1.0);

/// The assembled block matrix (exposed for tests).
Eigen::MatrixXd assemble_block_matrix(const std::vector<Eigen::MatrixXd>& blocks, double common);

}  // namespace mkv
