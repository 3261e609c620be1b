#include "mkv/measures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "mkv/errors.hpp"

namespace mkv {

EmpiricalMeasure1D::EmpiricalMeasure1D(std::vector<double> samples)
    : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw ParameterError("empirical measure needs at least one sample");
  for (double x : sorted_) {
    if (!std::isfinite(x)) throw ParameterError("empirical measure sample is not finite");
  }
  std::sort(sorted_.begin(), sorted_.end());
  suffix_.assign(sorted_.size() + 1, 0.0);
  for (std::size_t k = sorted_.size(); k-- > 0;) suffix_[k] = suffix_[k + 1] + sorted_[k];
}

double EmpiricalMeasure1D::mean() const noexcept {
  return suffix_[0] / static_cast<double>(sorted_.size());
}

double EmpiricalMeasure1D::quantile(double p) const {
  if (!(p > 0.0 && p <= 1.0)) throw ParameterError("quantile level must lie in (0, 1]");
  const auto n = static_cast<double>(sorted_.size());
  auto k = static_cast<std::size_t>(std::ceil(p * n));
  k = std::clamp<std::size_t>(k, 1, sorted_.size());
  return sorted_[k - 1];
}

double EmpiricalMeasure1D::tvar(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("TVaR level must lie in (0, 1)");
  // Q(u) = x_(k) on ((k-1)/n, k/n]. The atom k0 = ceil(pn) straddles p and
  // contributes weight k0/n - p; higher atoms contribute 1/n each.
  const std::size_t n = sorted_.size();
  const double nd = static_cast<double>(n);
  auto k0 = static_cast<std::size_t>(std::ceil(p * nd));
  k0 = std::clamp<std::size_t>(k0, 1, n);
  const double boundary = std::max(0.0, static_cast<double>(k0) / nd - p);
  const double integral = boundary * sorted_[k0 - 1] + suffix_[k0] / nd;
  return integral / (1.0 - p);
}

double EmpiricalMeasure1D::stop_loss(double strike) const noexcept {
  const auto first = std::upper_bound(sorted_.begin(), sorted_.end(), strike);
  const auto k = static_cast<std::size_t>(first - sorted_.begin());
  const double above = static_cast<double>(sorted_.size() - k);
  return (suffix_[k] - strike * above) / static_cast<double>(sorted_.size());
}

EmpiricalMeasure1D EmpiricalMeasure1D::shifted(double c) const {
  std::vector<double> out(sorted_);
  for (double& x : out) x += c;
  return EmpiricalMeasure1D(std::move(out));
}

double wasserstein_p_1d(const EmpiricalMeasure1D& mu, const EmpiricalMeasure1D& nu, double p) {
  if (mu.size() != nu.size()) {
    throw ParameterError("wasserstein_p_1d requires equal sample counts (" +
                         std::to_string(mu.size()) + " vs " + std::to_string(nu.size()) + ")");
  }
  if (!(p >= 1.0) || !std::isfinite(p)) throw ParameterError("Wasserstein order p must be >= 1");
  const auto x = mu.sorted();
  const auto y = nu.sorted();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x[i] - y[i]), p);
  return std::pow(acc / static_cast<double>(x.size()), 1.0 / p);
}

double wp_to_dirac0(const EmpiricalMeasure1D& mu, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ParameterError("Wasserstein order p must be >= 1");
  double acc = 0.0;
  for (double x : mu.sorted()) acc += std::pow(std::abs(x), p);
  return std::pow(acc / static_cast<double>(mu.size()), 1.0 / p);
}

double tvar(const EmpiricalMeasure1D& mu, double p) { return mu.tvar(p); }

double stop_loss(const EmpiricalMeasure1D& mu, double strike) { return mu.stop_loss(strike); }

MeasurePath::MeasurePath(TimeGrid grid, std::vector<EmpiricalMeasure1D> measures)
    : grid_(grid), measures_(std::move(measures)) {
  if (measures_.size() != grid_.size()) {
    throw ParameterError("measure path has " + std::to_string(measures_.size()) +
                         " nodes, grid has " + std::to_string(grid_.size()));
  }
  for (const auto& m : measures_) {
    if (m.size() != measures_.front().size()) {
      throw ParameterError("measure path entries must share one sample count");
    }
  }
}

double sup_wasserstein(const MeasurePath& a, const MeasurePath& b, double p) {
  if (!(a.grid() == b.grid())) throw ParameterError("sup_wasserstein: grids differ");
  double best = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) {
    best = std::max(best, wasserstein_p_1d(a.at(m), b.at(m), p));
  }
  return best;
}

std::vector<std::vector<double>> read_sample_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open sample file '" + path + "'");
  std::vector<std::vector<double>> columns;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (line_no == 1) continue;  // header
      throw ParameterError(path + ":" + std::to_string(line_no) + ": non-numeric sample");
    }
    if (columns.empty()) columns.resize(row.size());
    if (row.size() != columns.size()) {
      throw ParameterError(path + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(columns.size()) + " columns");
    }
    for (std::size_t k = 0; k < row.size(); ++k) columns[k].push_back(row[k]);
  }
  if (columns.empty()) throw ParameterError("sample file '" + path + "' holds no data");
  return columns;
}

}  // namespace mkv
