#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mkv {

/// Philox4x32-10 block cipher (Salmon et al., SC'11). Pure function of
/// (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Independent sub-sequences of one master seed.
enum class NoiseDomain : std::uint32_t {
  increment = 0,
  initial = 1,
  bootstrap = 2,
  auxiliary = 3,
};

/// Deterministic, seed-addressable Gaussian noise.
///
/// Every draw is a pure function of (master_seed, domain, replication, stream,
/// index). Particle n reads stream n; the common noise reads stream `common`,
/// which no particle index can reach. Evaluation order and thread count
/// therefore never change a value, and two systems built from the same plan
/// see identical increments.
class NoisePlan {
 public:
  static constexpr std::uint32_t common = 0xFFFFFFFFu;

  NoisePlan(std::uint64_t master_seed, std::size_t n_particles, std::size_t n_steps,
            std::size_t dim_noise = 1);

  std::uint64_t master_seed() const noexcept { return seed_; }
  std::size_t n_particles() const noexcept { return n_particles_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  std::size_t dim_noise() const noexcept { return dim_noise_; }

  /// Fills `out` with standard normals for (replication, stream, step).
  /// out.size() components are read at consecutive indices step*out.size()+k.
  void gaussian(NoiseDomain domain, std::uint64_t replication, std::uint32_t stream,
                std::uint64_t step, std::span<double> out) const noexcept;

  /// Uniform 32-bit word at an address; used for bootstrap index draws.
  std::uint32_t word(NoiseDomain domain, std::uint64_t replication, std::uint32_t stream,
                     std::uint64_t index) const noexcept;

  /// Idiosyncratic increment Z_{step+1} of particle n (q components).
  void particle_increment(std::uint64_t replication, std::size_t particle, std::uint64_t step,
                          std::span<double> out) const noexcept {
    gaussian(NoiseDomain::increment, replication, static_cast<std::uint32_t>(particle), step,
             out);
  }
  /// Common increment Z^0_{step+1} (q components).
  void common_increment(std::uint64_t replication, std::uint64_t step,
                        std::span<double> out) const noexcept {
    gaussian(NoiseDomain::increment, replication, common, step, out);
  }

 private:
  std::uint64_t seed_;
  std::size_t n_particles_;
  std::size_t n_steps_;
  std::size_t dim_noise_;
};

/// Stream of per-step Gaussian increments consumed by a particle scheme.
class IncrementSource {
 public:
  virtual ~IncrementSource() = default;
  virtual std::size_t n_particles() const noexcept = 0;
  virtual std::size_t dim_noise() const noexcept = 0;
  /// idio: n_particles x dim_noise (row-major), common: dim_noise.
  virtual void fill(std::size_t step, std::span<double> idio, std::span<double> common) = 0;
};

/// Reads a NoisePlan directly, one plan step per scheme step.
class DirectIncrements final : public IncrementSource {
 public:
  DirectIncrements(const NoisePlan& plan, std::uint64_t replication, std::size_t n_particles);

  std::size_t n_particles() const noexcept override { return n_; }
  std::size_t dim_noise() const noexcept override { return plan_->dim_noise(); }
  void fill(std::size_t step, std::span<double> idio, std::span<double> common) override;

 private:
  const NoisePlan* plan_;
  std::uint64_t replication_;
  std::size_t n_;
};

/// Coarse increments obtained by aggregating `ratio` consecutive fine plan
/// steps: Z_coarse = (Z_1 + ... + Z_ratio) / sqrt(ratio). A coarse scheme and a
/// fine scheme read from the same plan are then driven by the same Brownian
/// path.
class AggregatedIncrements final : public IncrementSource {
 public:
  AggregatedIncrements(const NoisePlan& plan, std::uint64_t replication,
                       std::size_t n_particles, std::size_t ratio);

  std::size_t n_particles() const noexcept override { return n_; }
  std::size_t dim_noise() const noexcept override { return plan_->dim_noise(); }
  void fill(std::size_t step, std::span<double> idio, std::span<double> common) override;

 private:
  const NoisePlan* plan_;
  std::uint64_t replication_;
  std::size_t n_;
  std::size_t ratio_;
  std::vector<double> scratch_;
};

}  // namespace mkv
