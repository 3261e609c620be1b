#include "mkv/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mkv/hash.hpp"

namespace mkv {

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

void write_ensemble_csv_header(std::ostream& os, std::size_t dim) {
  os << "replication,particle,step,time";
  for (std::size_t k = 0; k < dim; ++k) os << ",x" << k;
  os << '\n';
}

void write_ensemble_csv_rows(std::ostream& os, const ParticleEnsemble& e,
                             std::uint64_t replication) {
  std::string line;
  for (std::size_t n = 0; n < e.n_particles; ++n) {
    for (std::size_t m = 0; m < e.grid.size(); ++m) {
      line.clear();
      line += std::to_string(replication);
      line += ',';
      line += std::to_string(n);
      line += ',';
      line += std::to_string(m);
      line += ',';
      line += format_double(e.grid.node(m));
      for (std::size_t k = 0; k < e.dim_state; ++k) {
        line += ',';
        line += format_double(e.state(n, m, k));
      }
      line += '\n';
      os << line;
    }
  }
}

namespace {

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& out, double x) {
  put_u64(out, std::bit_cast<std::uint64_t>(x));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

constexpr char kMagic[8] = {'M', 'K', 'V', 'E', 'N', 'S', '0', '1'};

}  // namespace

BinaryEnsembleWriter::BinaryEnsembleWriter(const std::filesystem::path& path, std::size_t n,
                                           const TimeGrid& grid, std::size_t dim,
                                           std::size_t replications)
    : path_(path), expected_(replications) {
  buffer_.insert(buffer_.end(), kMagic, kMagic + 8);
  put_u64(buffer_, n);
  put_u64(buffer_, grid.steps());
  put_u64(buffer_, dim);
  put_u64(buffer_, replications);
  for (std::size_t m = 0; m < grid.size(); ++m) put_f64(buffer_, grid.node(m));
  std::ofstream os(path_, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path_.string());
  os.write(reinterpret_cast<const char*>(buffer_.data()),
           static_cast<std::streamsize>(buffer_.size()));
  buffer_.clear();
}

void BinaryEnsembleWriter::append(const ParticleEnsemble& e) {
  if (written_ >= expected_) throw std::logic_error("binary ensemble: too many replications");
  buffer_.clear();
  buffer_.reserve(e.states.size() * 8);
  for (double x : e.states) put_f64(buffer_, x);
  std::ofstream os(path_, std::ios::binary | std::ios::app);
  if (!os) throw std::runtime_error("cannot open " + path_.string());
  os.write(reinterpret_cast<const char*>(buffer_.data()),
           static_cast<std::streamsize>(buffer_.size()));
  ++written_;
}

void BinaryEnsembleWriter::close() {
  if (written_ != expected_) {
    throw std::logic_error("binary ensemble: " + std::to_string(written_) + " of " +
                           std::to_string(expected_) + " replications written");
  }
}

BinaryEnsemble read_binary_ensemble(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 40 || std::memcmp(p, kMagic, 8) != 0) {
    throw std::runtime_error(path.string() + ": not an ensemble dump");
  }
  BinaryEnsemble b;
  b.n = get_u64(p + 8);
  b.steps = get_u64(p + 16);
  b.dim = get_u64(p + 24);
  b.replications = get_u64(p + 32);
  const std::size_t n_times = b.steps + 1;
  const std::size_t n_states = b.replications * b.n * n_times * b.dim;
  if (bytes.size() != 40 + 8 * (n_times + n_states)) {
    throw std::runtime_error(path.string() + ": truncated ensemble dump");
  }
  const unsigned char* q = p + 40;
  b.times.resize(n_times);
  for (auto& t : b.times) {
    t = std::bit_cast<double>(get_u64(q));
    q += 8;
  }
  b.states.resize(n_states);
  for (auto& x : b.states) {
    x = std::bit_cast<double>(get_u64(q));
    q += 8;
  }
  return b;
}

nlohmann::json order_report_json(const OrderReport& r) {
  nlohmann::json j;
  j["kind"] = to_string(r.kind);
  j["verdict"] = to_string(r.verdict);
  j["z"] = r.z;
  j["n_violations"] = r.n_violations;
  if (r.kind == OrderKind::cv || r.kind == OrderKind::icv) {
    j["mean_gap"] = r.mean_gap;
    j["mean_gap_stderr"] = r.mean_gap_stderr;
    if (r.kind == OrderKind::cv) j["mean_equality_confirmed"] = r.mean_equality_confirmed;
  }
  auto& probes = j["probes"] = nlohmann::json::array();
  for (const auto& p : r.probes) {
    probes.push_back({{"id", p.id},
                      {"stat_mu", p.stat_mu},
                      {"stat_nu", p.stat_nu},
                      {"stderr", p.std_error},
                      {"margin", p.margin},
                      {"violated", p.violated}});
  }
  if (!r.per_path.empty()) {
    j["violation_budget"] = r.violation_budget;
    auto& paths = j["paths"] = nlohmann::json::array();
    for (const auto& sub : r.per_path) {
      std::size_t bad = 0;
      for (const auto& p : sub.probes) bad += p.violated ? 1 : 0;
      paths.push_back({{"verdict", to_string(sub.verdict)}, {"n_violations", bad}});
    }
  }
  return j;
}

void write_order_report_text(std::ostream& os, const OrderReport& r) {
  os << "order: " << to_string(r.kind) << "  verdict: " << to_string(r.verdict)
     << "  violations: " << r.n_violations;
  if (!r.per_path.empty()) os << " paths (budget " << r.violation_budget << ")";
  os << '\n';
  if (r.kind == OrderKind::cv) {
    os << "mean gap " << format_double(r.mean_gap) << " +- " << format_double(r.mean_gap_stderr)
       << '\n';
  }
  if (r.per_path.empty()) {
    os << std::left << std::setw(28) << "probe" << std::setw(16) << "mu" << std::setw(16) << "nu"
       << std::setw(16) << "margin" << std::setw(14) << "stderr" << "flag\n";
    for (const auto& p : r.probes) {
      os << std::setw(28) << p.id << std::setw(16) << p.stat_mu << std::setw(16) << p.stat_nu
         << std::setw(16) << p.margin << std::setw(14) << p.std_error
         << (p.violated ? "VIOLATED" : "") << '\n';
    }
  }
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "variant,N,a,n_mc,steps,esd,esd_stderr,mean_T,mean_T_stderr,seconds\n";
  for (const auto& r : rows) {
    os << r.variant << ',' << r.n_banks << ',' << format_double(r.a) << ',' << r.n_mc << ','
       << r.steps << ',' << format_double(r.esd) << ',' << format_double(r.esd_stderr) << ','
       << format_double(r.mean_terminal) << ',' << format_double(r.mean_terminal_stderr) << ','
       << format_double(r.seconds) << '\n';
  }
}

std::vector<std::filesystem::path> write_sweep_plotdata(const std::filesystem::path& dir,
                                                        const std::vector<SweepRow>& rows) {
  std::vector<std::string> variants;
  for (const auto& r : rows) {
    if (std::find(variants.begin(), variants.end(), r.variant) == variants.end()) {
      variants.push_back(r.variant);
    }
  }
  std::vector<std::filesystem::path> files;
  for (const auto& v : variants) {
    std::ostringstream os;
    os << "N,a,esd,esd_stderr\n";
    for (const auto& r : rows) {
      if (r.variant != v) continue;
      os << r.n_banks << ',' << format_double(r.a) << ',' << format_double(r.esd) << ','
         << format_double(r.esd_stderr) << '\n';
    }
    auto path = dir / ("esd_" + v + ".csv");
    write_text_file(path, os.str());
    files.push_back(path);
  }
  return files;
}

void write_convergence_csv(std::ostream& os, const ConvergenceResult& r) {
  os << "M,h,strong_error,fitted_slope\n";
  for (const auto& p : r.points) {
    os << p.steps << ',' << format_double(p.h) << ',' << format_double(p.error) << ','
       << format_double(r.slope) << '\n';
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::string file_digest(const std::filesystem::path& path) {
  return hex64(fnv1a64(read_text_file(path)));
}

}  // namespace mkv
