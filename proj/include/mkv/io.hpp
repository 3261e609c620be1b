#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mkv/control_lq.hpp"
#include "mkv/convergence.hpp"
#include "mkv/order.hpp"
#include "mkv/simulate.hpp"
#include "mkv/systemic.hpp"

namespace mkv {

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);

/// replication,particle,step,time,x0[,x1...]
void write_ensemble_csv_header(std::ostream& os, std::size_t dim);
void write_ensemble_csv_rows(std::ostream& os, const ParticleEnsemble& e,
                             std::uint64_t replication);

/// Binary ensemble dump, little-endian throughout:
///   8 bytes  magic "MKVENS01"
///   4 x u64  N, M, d, replications
///   f64      times[M+1]
///   f64      states[replications][N][M+1][d]
class BinaryEnsembleWriter {
 public:
  BinaryEnsembleWriter(const std::filesystem::path& path, std::size_t n, const TimeGrid& grid,
                       std::size_t dim, std::size_t replications);
  void append(const ParticleEnsemble& e);
  void close();

 private:
  std::filesystem::path path_;
  std::vector<unsigned char> buffer_;
  std::size_t expected_ = 0;
  std::size_t written_ = 0;
};

struct BinaryEnsemble {
  std::size_t n = 0, steps = 0, dim = 0, replications = 0;
  std::vector<double> times;
  std::vector<double> states;
};
BinaryEnsemble read_binary_ensemble(const std::filesystem::path& path);

nlohmann::json order_report_json(const OrderReport& r);
void write_order_report_text(std::ostream& os, const OrderReport& r);

/// variant,N,a,n_mc,steps,esd,esd_stderr,mean_T,mean_T_stderr,seconds
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
/// One file per variant: N,a,esd,esd_stderr. Returns the files written.
std::vector<std::filesystem::path> write_sweep_plotdata(const std::filesystem::path& dir,
                                                        const std::vector<SweepRow>& rows);

/// M,h,strong_error,fitted_slope
void write_convergence_csv(std::ostream& os, const ConvergenceResult& r);

/// FNV-1a 64 digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mkv
