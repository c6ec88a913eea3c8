#include <doctest.h>

#include <set>

#include "dotmarg/rng.hpp"

using dotmarg::CounterRng;
using dotmarg::Philox4x32;

TEST_CASE("philox4x32-10 known answers") {
  // Reference vectors published with the Random123 library.
  const auto zero = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  CHECK(zero == Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

  const auto ones = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                         {0xffffffffu, 0xffffffffu});
  CHECK(ones == Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});

  const auto pi = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                       {0xa4093822u, 0x299f31d0u});
  CHECK(pi == Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("uniform draws stay inside the open unit interval") {
  CounterRng rng(42, 7, 3);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.005));
}

TEST_CASE("streams are reproducible and distinct") {
  CounterRng a(9, 100, 2), b(9, 100, 2), c(9, 101, 2), d(9, 100, 3), e(10, 100, 2);
  for (int i = 0; i < 16; ++i) {
    const double va = a.uniform();
    CHECK(va == b.uniform());
    CHECK(va != c.uniform());
    CHECK(va != d.uniform());
    CHECK(va != e.uniform());
  }
}

TEST_CASE("normal draws have unit variance") {
  CounterRng rng(5, 0);
  double s = 0.0, s2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.02);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("derived seeds differ per purpose and root") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t root = 0; root < 20; ++root)
    for (std::uint64_t purpose = 1; purpose <= 4; ++purpose) seen.insert(dotmarg::derive_seed(root, purpose));
  CHECK(seen.size() == 80);
  CHECK(dotmarg::derive_seed(3, 1) == dotmarg::derive_seed(3, 1));
}
