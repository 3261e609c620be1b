#include "mkv/noise.hpp"

#include <cmath>
#include <numbers>

#include "mkv/errors.hpp"

namespace mkv {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// Counter layout: c0 = low word of block index, c1 = stream, c2 = low word of
// replication, c3 = domain (4 bits) | high replication bits (12) | high block
// bits (16).
std::array<std::uint32_t, 4> make_counter(NoiseDomain domain, std::uint64_t replication,
                                          std::uint32_t stream, std::uint64_t block) {
  const auto d = static_cast<std::uint32_t>(domain) & 0xFu;
  const auto rep_hi = static_cast<std::uint32_t>(replication >> 32) & 0xFFFu;
  const auto blk_hi = static_cast<std::uint32_t>(block >> 32) & 0xFFFFu;
  return {static_cast<std::uint32_t>(block), stream, static_cast<std::uint32_t>(replication),
          (d << 28) | (rep_hi << 16) | blk_hi};
}

inline double unit_open_closed(std::uint32_t hi, std::uint32_t lo) {
  // 53 random bits mapped to (0, 1].
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

NoisePlan::NoisePlan(std::uint64_t master_seed, std::size_t n_particles, std::size_t n_steps,
                     std::size_t dim_noise)
    : seed_(master_seed), n_particles_(n_particles), n_steps_(n_steps), dim_noise_(dim_noise) {
  if (n_particles == 0) throw ParameterError("noise plan needs at least one particle");
  if (n_steps == 0) throw ParameterError("noise plan needs at least one step");
  if (dim_noise == 0) throw ParameterError("noise dimension must be positive");
  if (n_particles >= common) throw ParameterError("too many particles for stream addressing");
}

void NoisePlan::gaussian(NoiseDomain domain, std::uint64_t replication, std::uint32_t stream,
                         std::uint64_t step, std::span<double> out) const noexcept {
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                         static_cast<std::uint32_t>(seed_ >> 32)};
  const std::uint64_t width = out.size();
  std::size_t k = 0;
  while (k < out.size()) {
    // Each Philox block yields one Box-Muller pair, i.e. two consecutive indices.
    const std::uint64_t index = step * width + k;
    const std::uint64_t block = index >> 1;
    const auto w = philox4x32(make_counter(domain, replication, stream, block), key);
    const double radius = std::sqrt(-2.0 * std::log(unit_open_closed(w[0], w[1])));
    const double angle = 2.0 * std::numbers::pi * unit_open_closed(w[2], w[3]);
    const double pair[2] = {radius * std::cos(angle), radius * std::sin(angle)};
    for (std::uint64_t j = index & 1u; j < 2 && k < out.size(); ++j, ++k) out[k] = pair[j];
  }
}

std::uint32_t NoisePlan::word(NoiseDomain domain, std::uint64_t replication,
                              std::uint32_t stream, std::uint64_t index) const noexcept {
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                         static_cast<std::uint32_t>(seed_ >> 32)};
  const auto w = philox4x32(make_counter(domain, replication, stream, index >> 2), key);
  return w[index & 3u];
}

DirectIncrements::DirectIncrements(const NoisePlan& plan, std::uint64_t replication,
                                   std::size_t n_particles)
    : plan_(&plan), replication_(replication), n_(n_particles) {
  if (n_particles > plan.n_particles()) {
    throw ParameterError("noise plan sized for " + std::to_string(plan.n_particles()) +
                         " particles, " + std::to_string(n_particles) + " requested");
  }
}

void DirectIncrements::fill(std::size_t step, std::span<double> idio, std::span<double> common) {
  const std::size_t q = plan_->dim_noise();
  for (std::size_t n = 0; n < n_; ++n) {
    plan_->particle_increment(replication_, n, step, idio.subspan(n * q, q));
  }
  plan_->common_increment(replication_, step, common);
}

AggregatedIncrements::AggregatedIncrements(const NoisePlan& plan, std::uint64_t replication,
                                           std::size_t n_particles, std::size_t ratio)
    : plan_(&plan), replication_(replication), n_(n_particles), ratio_(ratio),
      scratch_(plan.dim_noise()) {
  if (ratio == 0) throw ParameterError("aggregation ratio must be positive");
  if (n_particles > plan.n_particles()) {
    throw ParameterError("noise plan sized for " + std::to_string(plan.n_particles()) +
                         " particles, " + std::to_string(n_particles) + " requested");
  }
}

void AggregatedIncrements::fill(std::size_t step, std::span<double> idio,
                                std::span<double> common) {
  const std::size_t q = plan_->dim_noise();
  const double scale = 1.0 / std::sqrt(static_cast<double>(ratio_));
  const std::uint64_t first = static_cast<std::uint64_t>(step) * ratio_;
  auto accumulate = [&](std::uint32_t stream, std::span<double> out) {
    for (auto& v : out) v = 0.0;
    for (std::size_t j = 0; j < ratio_; ++j) {
      plan_->gaussian(NoiseDomain::increment, replication_, stream, first + j, scratch_);
      for (std::size_t k = 0; k < q; ++k) out[k] += scratch_[k];
    }
    for (auto& v : out) v *= scale;
  };
  for (std::size_t n = 0; n < n_; ++n) {
    accumulate(static_cast<std::uint32_t>(n), idio.subspan(n * q, q));
  }
  accumulate(NoisePlan::common, common);
}

}  // namespace mkv
