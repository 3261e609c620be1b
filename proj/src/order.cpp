#include "mkv/order.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mkv/parallel.hpp"

namespace mkv {

const char* to_string(OrderKind k) noexcept {
  switch (k) {
    case OrderKind::cv: return "cv";
    case OrderKind::icv: return "icv";
    case OrderKind::conditional_cv: return "conditional_cv";
    case OrderKind::conditional_icv: return "conditional_icv";
  }
  return "?";
}

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::consistent: return "consistent";
    case Verdict::violated: return "violated";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

ProbeFamily ProbeFamily::default_tvar() {
  std::vector<double> levels;
  for (int k = 1; k <= 19; ++k) levels.push_back(0.05 * k);
  levels.push_back(0.99);
  return tvar(std::move(levels));
}

ProbeFamily ProbeFamily::tvar(std::vector<double> levels) {
  ProbeFamily f;
  f.kind = Kind::tvar_grid;
  f.levels = std::move(levels);
  return f;
}

ProbeFamily ProbeFamily::stop_loss(std::vector<double> strikes) {
  ProbeFamily f;
  f.kind = Kind::stop_loss_grid;
  f.levels = std::move(strikes);
  return f;
}

ProbeFamily ProbeFamily::stop_loss_span(std::span<const double> mu, std::span<const double> nu,
                                        std::size_t count) {
  if (mu.empty() || nu.empty()) throw ParameterError("stop-loss grid needs nonempty samples");
  if (count < 2) throw ParameterError("stop-loss grid needs at least two strikes");
  const auto [a0, a1] = std::minmax_element(mu.begin(), mu.end());
  const auto [b0, b1] = std::minmax_element(nu.begin(), nu.end());
  const double lo = std::min(*a0, *b0);
  const double hi = std::max(*a1, *b1);
  std::vector<double> strikes(count);
  for (std::size_t k = 0; k < count; ++k) {
    strikes[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  return stop_loss(std::move(strikes));
}

ProbeFamily ProbeFamily::convex(std::vector<ConvexProbe> probes) {
  ProbeFamily f;
  f.kind = Kind::custom_convex;
  f.custom = std::move(probes);
  return f;
}

std::size_t ProbeFamily::size() const noexcept {
  return kind == Kind::custom_convex ? custom.size() : levels.size();
}

void ProbeFamily::validate() const {
  switch (kind) {
    case Kind::tvar_grid:
      for (double p : levels) {
        if (!(p > 0.0 && p < 1.0)) throw ParameterError("TVaR probe level outside (0, 1)");
      }
      break;
    case Kind::stop_loss_grid:
      for (double k : levels) {
        if (!std::isfinite(k)) throw ParameterError("stop-loss strike is not finite");
      }
      break;
    case Kind::custom_convex:
      for (const auto& c : custom) {
        if (!c.phi) throw ParameterError("custom probe '" + c.name + "' has no function");
      }
      break;
  }
}

namespace {

double upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

std::string probe_id(const ProbeFamily& f, std::size_t j) {
  std::ostringstream os;
  switch (f.kind) {
    case ProbeFamily::Kind::tvar_grid: os << "tvar@" << f.levels[j]; break;
    case ProbeFamily::Kind::stop_loss_grid: os << "stop_loss@" << f.levels[j]; break;
    case ProbeFamily::Kind::custom_convex: os << "phi:" << f.custom[j].name; break;
  }
  return os.str();
}

// Point statistics from the exact order-statistic routines.
std::vector<double> point_stats(const EmpiricalMeasure1D& m, const ProbeFamily& f) {
  std::vector<double> out(f.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    switch (f.kind) {
      case ProbeFamily::Kind::tvar_grid: out[j] = m.tvar(f.levels[j]); break;
      case ProbeFamily::Kind::stop_loss_grid: out[j] = m.stop_loss(f.levels[j]); break;
      case ProbeFamily::Kind::custom_convex: {
        double acc = 0.0;
        for (double x : m.sorted()) acc += f.custom[j].phi(x);
        out[j] = acc / static_cast<double>(m.size());
        break;
      }
    }
  }
  return out;
}

// Sample in sorted order with integer multiplicities (bootstrap resample).
struct WeightedSorted {
  std::vector<double> x;
  std::vector<double> w;
  double total = 0.0;
};

std::vector<double> weighted_stats(const WeightedSorted& s, const ProbeFamily& f) {
  const std::size_t n = s.x.size();
  std::vector<double> out(f.size(), 0.0);
  switch (f.kind) {
    case ProbeFamily::Kind::tvar_grid: {
      // cum[k] = total weight of atoms 0..k-1, tail[k] = sum_{j >= k} w_j x_j.
      std::vector<double> cum(n + 1, 0.0), tail(n + 1, 0.0);
      for (std::size_t k = 0; k < n; ++k) cum[k + 1] = cum[k] + s.w[k];
      for (std::size_t k = n; k-- > 0;) tail[k] = tail[k + 1] + s.w[k] * s.x[k];
      for (std::size_t j = 0; j < out.size(); ++j) {
        const double p = f.levels[j];
        const double cut = p * s.total;
        // first atom whose cumulative weight exceeds p * total
        const auto it = std::upper_bound(cum.begin() + 1, cum.end(), cut);
        const std::size_t k0 = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()) - 1,
                                                     n - 1);
        const double integral = s.x[k0] * (cum[k0 + 1] - cut) / s.total + tail[k0 + 1] / s.total;
        out[j] = integral / (1.0 - p);
      }
      break;
    }
    case ProbeFamily::Kind::stop_loss_grid: {
      std::vector<double> tail_w(n + 1, 0.0), tail_wx(n + 1, 0.0);
      for (std::size_t k = n; k-- > 0;) {
        tail_w[k] = tail_w[k + 1] + s.w[k];
        tail_wx[k] = tail_wx[k + 1] + s.w[k] * s.x[k];
      }
      for (std::size_t j = 0; j < out.size(); ++j) {
        const double strike = f.levels[j];
        const auto k = static_cast<std::size_t>(
            std::upper_bound(s.x.begin(), s.x.end(), strike) - s.x.begin());
        out[j] = (tail_wx[k] - strike * tail_w[k]) / s.total;
      }
      break;
    }
    case ProbeFamily::Kind::custom_convex:
      for (std::size_t j = 0; j < out.size(); ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (s.w[k] != 0.0) acc += s.w[k] * f.custom[j].phi(s.x[k]);
        }
        out[j] = acc / s.total;
      }
      break;
  }
  return out;
}

std::vector<std::size_t> argsort(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

void draw_counts(const NoisePlan& rng, std::uint64_t stream, std::uint32_t substream,
                 std::vector<double>& counts) {
  std::fill(counts.begin(), counts.end(), 0.0);
  const std::uint64_t n = counts.size();
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t u = rng.word(NoiseDomain::bootstrap, stream, substream, i);
    counts[(u * n) >> 32] += 1.0;
  }
}

WeightedSorted reweight(std::span<const double> v, const std::vector<std::size_t>& order,
                        const std::vector<double>& counts) {
  WeightedSorted s;
  s.x.resize(v.size());
  s.w.resize(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    s.x[k] = v[order[k]];
    s.w[k] = counts[order[k]];
  }
  s.total = static_cast<double>(v.size());
  return s;
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double tolerance_for(double a, double b) {
  return 1e-12 * (1.0 + std::max(std::abs(a), std::abs(b)));
}

OrderReport run_check(std::span<const double> mu, std::span<const double> nu,
                      const ProbeFamily& probes, const OrderTestOptions& opt, bool convex) {
  if (mu.empty() || nu.empty()) throw ParameterError("order test needs nonempty samples");
  if (!(opt.z > 0.0)) throw ParameterError("confidence multiplier z must be positive");
  if (opt.paired && mu.size() != nu.size()) {
    throw ParameterError("paired order test needs equal sample counts");
  }
  if (mu.size() >= (std::size_t{1} << 32) || nu.size() >= (std::size_t{1} << 32)) {
    throw ParameterError("sample too large for bootstrap addressing");
  }
  probes.validate();

  const EmpiricalMeasure1D m_mu(mu);
  const EmpiricalMeasure1D m_nu(nu);
  OrderReport rep;
  rep.kind = convex ? OrderKind::cv : OrderKind::icv;
  rep.z = opt.z;

  // Mean gap with an analytic standard error (paired when coupled).
  rep.mean_gap = m_nu.mean() - m_mu.mean();
  if (opt.paired) {
    std::vector<double> diff(mu.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = nu[i] - mu[i];
    rep.mean_gap_stderr = sample_sd(diff) / std::sqrt(static_cast<double>(diff.size()));
  } else {
    const std::vector<double> a(mu.begin(), mu.end()), b(nu.begin(), nu.end());
    const double va = std::pow(sample_sd(a), 2) / static_cast<double>(a.size());
    const double vb = std::pow(sample_sd(b), 2) / static_cast<double>(b.size());
    rep.mean_gap_stderr = std::sqrt(va + vb);
  }

  const std::vector<double> s_mu = point_stats(m_mu, probes);
  const std::vector<double> s_nu = point_stats(m_nu, probes);

  // Bootstrap the per-probe difference stat_nu - stat_mu.
  const std::size_t n_probe = probes.size();
  std::vector<std::vector<double>> diffs(n_probe, std::vector<double>(opt.bootstrap));
  if (opt.bootstrap > 0 && n_probe > 0) {
    const NoisePlan rng(opt.seed, 1, 1);
    const auto order_mu = argsort(mu);
    const auto order_nu = argsort(nu);
    std::vector<double> c_mu(mu.size()), c_nu(nu.size());
    for (std::size_t b = 0; b < opt.bootstrap; ++b) {
      const auto sub = static_cast<std::uint32_t>(2 * b);
      draw_counts(rng, opt.stream, sub, c_mu);
      if (opt.paired) {
        c_nu = c_mu;
      } else {
        draw_counts(rng, opt.stream, sub + 1, c_nu);
      }
      const auto bm = weighted_stats(reweight(mu, order_mu, c_mu), probes);
      const auto bn = weighted_stats(reweight(nu, order_nu, c_nu), probes);
      for (std::size_t j = 0; j < n_probe; ++j) diffs[j][b] = bn[j] - bm[j];
    }
  }

  bool reversed = false;
  for (std::size_t j = 0; j < n_probe; ++j) {
    ProbeResult r;
    r.id = probe_id(probes, j);
    r.stat_mu = s_mu[j];
    r.stat_nu = s_nu[j];
    r.std_error = sample_sd(diffs[j]);
    r.margin = s_nu[j] - s_mu[j];
    const double tol = tolerance_for(s_mu[j], s_nu[j]);
    r.violated = r.margin < -(opt.z * r.std_error + tol);
    if (r.violated) ++rep.n_violations;
    if (!r.violated && r.margin < -tol) reversed = true;
    rep.probes.push_back(std::move(r));
  }

  if (convex) {
    const double tol = tolerance_for(m_mu.mean(), m_nu.mean());
    rep.mean_equality_confirmed = std::abs(rep.mean_gap) <= opt.z * rep.mean_gap_stderr + tol;
    ProbeResult r;
    r.id = "mean";
    r.stat_mu = m_mu.mean();
    r.stat_nu = m_nu.mean();
    r.std_error = rep.mean_gap_stderr;
    r.margin = rep.mean_gap;
    r.violated = !rep.mean_equality_confirmed;
    if (r.violated) ++rep.n_violations;
    rep.probes.insert(rep.probes.begin(), std::move(r));
  }

  if (rep.n_violations > 0) {
    rep.verdict = Verdict::violated;
  } else if (reversed) {
    rep.verdict = Verdict::inconclusive;
  } else {
    rep.verdict = Verdict::consistent;
  }
  return rep;
}

}  // namespace

OrderReport check_cv_1d(std::span<const double> mu, std::span<const double> nu,
                        const ProbeFamily& probes, const OrderTestOptions& options) {
  return run_check(mu, nu, probes, options, true);
}

OrderReport check_cv_1d(const EmpiricalMeasure1D& mu, const EmpiricalMeasure1D& nu,
                        const ProbeFamily& probes, const OrderTestOptions& options) {
  OrderTestOptions o = options;
  o.paired = false;
  return run_check(mu.sorted(), nu.sorted(), probes, o, true);
}

OrderReport check_icv_1d(std::span<const double> mu, std::span<const double> nu,
                         const ProbeFamily& probes, const OrderTestOptions& options) {
  if (probes.size() == 0) {
    return run_check(mu, nu, ProbeFamily::stop_loss_span(mu, nu), options, false);
  }
  return run_check(mu, nu, probes, options, false);
}

OrderReport check_icv_1d(const EmpiricalMeasure1D& mu, const EmpiricalMeasure1D& nu,
                         const ProbeFamily& probes, const OrderTestOptions& options) {
  OrderTestOptions o = options;
  o.paired = false;
  return check_icv_1d(mu.sorted(), nu.sorted(), probes, o);
}

std::size_t binomial_violation_budget(std::size_t n_paths, double rate, double z) {
  rate = std::clamp(rate, 0.0, 1.0);
  if (rate == 0.0) return 0;
  if (rate == 1.0) return n_paths;
  const double alpha = upper_tail(z);
  // Walk the binomial pmf until the upper tail drops to alpha.
  const double n = static_cast<double>(n_paths);
  double log_pmf = n * std::log1p(-rate);
  double cdf = 0.0;
  for (std::size_t k = 0; k <= n_paths; ++k) {
    if (k > 0) {
      const double kd = static_cast<double>(k);
      log_pmf += std::log((n - kd + 1.0) / kd) + std::log(rate) - std::log1p(-rate);
    }
    cdf += std::exp(log_pmf);
    if (1.0 - cdf <= alpha) return k;
  }
  return n_paths;
}

OrderReport check_conditional(const SystemSpec& x, const SystemSpec& y, const TimeGrid& grid,
                              const ProbeFamily& probes, const NoisePlan& noise,
                              const ConditionalOptions& options) {
  if (x.coeffs.dim_state != 1 || y.coeffs.dim_state != 1 || x.coeffs.dim_noise != 1 ||
      y.coeffs.dim_noise != 1) {
    throw ParameterError("conditional order test compares one-dimensional systems (d = q = 1)");
  }
  if (options.n_common == 0) throw ParameterError("conditional test needs n_common >= 1");
  std::vector<std::size_t> nodes = options.nodes;
  if (nodes.empty()) nodes.push_back(grid.steps());
  for (auto m : nodes) {
    if (m > grid.steps()) throw ParameterError("conditional test node outside the grid");
  }

  OrderReport agg;
  agg.kind = options.increasing ? OrderKind::conditional_icv : OrderKind::conditional_cv;
  agg.z = options.test.z;
  agg.per_path.resize(options.n_common);

  auto run_side = [&](const SystemSpec& s, std::uint64_t r) {
    SimulationOptions so;
    so.scheme = s.scheme;
    if (s.scheme == Scheme::truncated_euler) {
      return simulate_truncated(s.coeffs, grid, s.init, options.n_particles, noise, r, so);
    }
    return simulate_particle_system(s.coeffs, grid, s.init, options.n_particles, noise, r, so);
  };

  parallel_for(options.n_common, options.threads, [&](std::size_t r) {
    const auto ex = run_side(x, r);
    const auto ey = run_side(y, r);
    OrderReport path;
    path.kind = options.increasing ? OrderKind::icv : OrderKind::cv;
    path.z = options.test.z;
    bool any_inconclusive = false;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const auto xs = ex.at_node(nodes[k]);
      const auto ys = ey.at_node(nodes[k]);
      OrderTestOptions o = options.test;
      o.stream = options.test.stream + r * nodes.size() + k;
      const auto rep = options.increasing ? check_icv_1d(xs, ys, probes, o)
                                          : check_cv_1d(xs, ys, probes, o);
      std::ostringstream prefix;
      prefix << "t=" << grid.node(nodes[k]) << ":";
      for (auto p : rep.probes) {
        p.id = prefix.str() + p.id;
        path.probes.push_back(std::move(p));
      }
      path.n_violations += rep.n_violations;
      if (nodes[k] == nodes.back()) {
        path.mean_gap = rep.mean_gap;
        path.mean_gap_stderr = rep.mean_gap_stderr;
      }
      path.mean_equality_confirmed = path.mean_equality_confirmed && rep.mean_equality_confirmed;
      any_inconclusive = any_inconclusive || rep.verdict == Verdict::inconclusive;
    }
    path.verdict = path.n_violations > 0 ? Verdict::violated
                   : any_inconclusive    ? Verdict::inconclusive
                                         : Verdict::consistent;
    agg.per_path[r] = std::move(path);
  });

  // Per-path false-positive rate: union bound over one-sided probes plus the
  // two-sided mean test.
  const std::size_t n_tests = agg.per_path.front().probes.size();
  const std::size_t two_sided = options.increasing ? 0 : nodes.size();
  const double tail = upper_tail(options.test.z);
  const double rate = std::min(1.0, static_cast<double>(n_tests + two_sided) * tail);
  agg.violation_budget = binomial_violation_budget(options.n_common, rate, options.test.z);

  double gap_sum = 0.0;
  for (const auto& p : agg.per_path) {
    if (p.verdict == Verdict::violated) ++agg.n_violations;
    gap_sum += p.mean_gap;
  }
  agg.mean_gap = gap_sum / static_cast<double>(options.n_common);
  std::vector<double> gaps;
  for (const auto& p : agg.per_path) gaps.push_back(p.mean_gap);
  agg.mean_gap_stderr = sample_sd(gaps) / std::sqrt(static_cast<double>(gaps.size()));
  agg.mean_equality_confirmed = std::all_of(agg.per_path.begin(), agg.per_path.end(),
                                            [](const auto& p) { return p.mean_equality_confirmed; });
  agg.verdict = agg.n_violations > agg.violation_budget ? Verdict::violated : Verdict::consistent;
  return agg;
}

}  // namespace mkv
