#include <doctest.h>

#include <set>
#include <vector>

#include "asgd/rng.hpp"

using namespace asgd;

TEST_CASE("philox known answers") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same seed and stream replay identically") {
  CounterRng a(42, Stream::NodeSampling, 3), b(42, Stream::NodeSampling, 3);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("streams and substreams differ") {
  CounterRng a(7, Stream::Partition), b(7, Stream::Assignment), c(7, Stream::NodeSampling, 1),
      d(7, Stream::NodeSampling, 2);
  std::set<std::uint64_t> firsts{a.next_u64(), b.next_u64(), c.next_u64(), d.next_u64()};
  CHECK(firsts.size() == 4);
}

TEST_CASE("next_double in [0,1) with sane mean") {
  CounterRng r(1, Stream::Synthetic);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.next_double();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("next_below covers range uniformly") {
  CounterRng r(3, Stream::Interleaving);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) counts[r.next_below(7)]++;
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK(r.next_below(1) == 0);
}

TEST_CASE("categorical follows weights") {
  CounterRng r(9, Stream::Assignment);
  const std::vector<double> cum{0.2, 0.5, 1.0};
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 100000; ++i) counts[r.next_categorical(cum)]++;
  CHECK(counts[0] == doctest::Approx(20000).epsilon(0.03));
  CHECK(counts[1] == doctest::Approx(30000).epsilon(0.03));
  CHECK(counts[2] == doctest::Approx(50000).epsilon(0.03));
}

TEST_CASE("zero-mass category never drawn") {
  CounterRng r(9, Stream::Assignment);
  const std::vector<double> cum{1.0, 1.0};
  for (int i = 0; i < 10000; ++i) REQUIRE(r.next_categorical(cum) == 0);
}
