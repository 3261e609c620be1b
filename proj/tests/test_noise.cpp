#include <doctest.h>

#include <cmath>
#include <vector>

#include "mkv/noise.hpp"

using namespace mkv;

TEST_CASE("philox4x32-10 known answers") {
  using W = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == W{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        W{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        W{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("draws are addressable and order independent") {
  const NoisePlan plan(42, 8, 16);
  std::vector<double> a(1), b(1);
  plan.particle_increment(3, 5, 7, a);
  // interleave unrelated draws
  std::vector<double> junk(4);
  plan.common_increment(3, 7, junk);
  plan.particle_increment(1, 5, 7, junk);
  plan.particle_increment(3, 5, 7, b);
  CHECK(a[0] == b[0]);

  const NoisePlan same(42, 100, 1000);
  plan.particle_increment(0, 2, 3, a);
  same.particle_increment(0, 2, 3, b);
  CHECK(a[0] == b[0]);
}

TEST_CASE("streams, replications, domains and seeds are distinct") {
  const NoisePlan plan(1, 4, 4);
  std::vector<double> x(2), y(2);
  plan.particle_increment(0, 0, 0, x);
  plan.particle_increment(0, 1, 0, y);
  CHECK(x != y);
  plan.particle_increment(1, 0, 0, y);
  CHECK(x != y);
  plan.common_increment(0, 0, y);
  CHECK(x != y);
  plan.gaussian(NoiseDomain::initial, 0, 0, 0, y);
  CHECK(x != y);
  NoisePlan(2, 4, 4).particle_increment(0, 0, 0, y);
  CHECK(x != y);
}

TEST_CASE("gaussian moments") {
  const NoisePlan plan(2024, 1, 1);
  std::vector<double> z(200000);
  plan.gaussian(NoiseDomain::auxiliary, 0, 0, 0, z);
  double m = 0, m2 = 0, m4 = 0;
  for (double v : z) {
    m += v;
    m2 += v * v;
    m4 += v * v * v * v;
  }
  const double n = static_cast<double>(z.size());
  CHECK(std::abs(m / n) < 5.0 / std::sqrt(n));
  CHECK(m2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(m4 / n == doctest::Approx(3.0).epsilon(0.03));
}

TEST_CASE("aggregated increments are normalized sums of fine ones") {
  const std::size_t n = 3, ratio = 4;
  const NoisePlan plan(9, n, 32);
  AggregatedIncrements coarse(plan, 5, n, ratio);
  DirectIncrements fine(plan, 5, n);
  std::vector<double> ci(n), cc(1), fi(n), fc(1);
  for (std::size_t step = 0; step < 8; ++step) {
    coarse.fill(step, ci, cc);
    std::vector<double> si(n, 0.0);
    double sc = 0.0;
    for (std::size_t j = 0; j < ratio; ++j) {
      fine.fill(step * ratio + j, fi, fc);
      for (std::size_t k = 0; k < n; ++k) si[k] += fi[k];
      sc += fc[0];
    }
    for (std::size_t k = 0; k < n; ++k) CHECK(ci[k] == doctest::Approx(si[k] / 2.0).epsilon(1e-14));
    CHECK(cc[0] == doctest::Approx(sc / 2.0).epsilon(1e-14));
  }
}
