#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "asgd/data.hpp"

using namespace asgd;

namespace {

DataSet parse(const std::string& text) {
  std::istringstream in(text);
  return parse_libsvm(in, "t");
}

DataSet binary(std::size_t M) {
  DataSet ds("b", 2);
  for (std::size_t i = 0; i < M; ++i) ds.add(std::vector<double>{double(i), 1.0}, int(i % 2));
  return ds;
}

}  // namespace

TEST_CASE("parse_libsvm examples") {
  auto ds = parse("+1 1:0.5 3:2\n");
  REQUIRE(ds.size() == 1);
  CHECK(ds.dim() == 3);
  CHECK(ds[0].label == 1);
  CHECK(std::vector<double>(ds[0].x.begin(), ds[0].x.end()) == std::vector<double>{0.5, 0, 2});

  ds = parse("-1 2:1\n");
  CHECK(ds[0].label == 0);
  CHECK(ds[0].x[0] == 0.0);
  CHECK(ds[0].x[1] == 1.0);

  ds = parse("1 3:1\n0 5:2 # comment\n\n");
  CHECK(ds.size() == 2);
  CHECK(ds.dim() == 5);
  CHECK(ds[0].x.size() == 5);
  CHECK(ds[0].x[4] == 0.0);
  CHECK(ds[1].x[4] == 2.0);
}

TEST_CASE("parse_libsvm rejects malformed input") {
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_AS(parse("2 1:1\n"), DataError);
  CHECK_THROWS_AS(parse("1 3:1 2:1\n"), DataError);
  CHECK_THROWS_AS(parse("1 0:1\n"), DataError);
  CHECK_THROWS_AS(parse("1 1:abc\n"), DataError);
  CHECK_THROWS_AS(load_libsvm("/nonexistent/file"), DataError);
}

TEST_CASE("resize_dim pads and refuses to truncate") {
  auto ds = parse("1 1:1\n");
  ds.resize_dim(4);
  CHECK(ds.dim() == 4);
  CHECK(ds[0].x[3] == 0.0);
  CHECK_THROWS(ds.resize_dim(2));
}

TEST_CASE("partition examples") {
  const auto ds = binary(1000);
  for (auto mode : {PartitionMode::Unbiased, PartitionMode::BiasedByLabel}) {
    const auto p = partition(ds, 1, mode, {}, 5);
    REQUIRE(p.nodes() == 1);
    std::vector<std::size_t> all(1000);
    std::iota(all.begin(), all.end(), 0);
    CHECK(p.locals[0] == all);
    CHECK(p.p == std::vector<double>{1.0});
  }

  const auto biased = partition(ds, 2, PartitionMode::BiasedByLabel, {}, 5);
  for (auto idx : biased.locals[0]) CHECK(ds.labels()[idx] == 0);
  for (auto idx : biased.locals[1]) CHECK(ds.labels()[idx] == 1);
  CHECK(biased.locals[0].size() == 500);

  const auto unb = partition(ds, 5, PartitionMode::Unbiased, {}, 5);
  for (const auto& l : unb.locals) CHECK(l.size() == 200);
}

TEST_CASE("unbiased partition is disjoint and covering") {
  const auto ds = binary(997);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = partition(ds, 4, PartitionMode::Unbiased, {0.1, 0.2, 0.3, 0.4}, seed);
    std::vector<int> seen(ds.size(), 0);
    for (const auto& l : p.locals)
      for (auto idx : l) seen[idx]++;
    CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
    CHECK(p.locals[3].size() > p.locals[0].size());
  }
}

TEST_CASE("biased partition with more nodes than labels") {
  const auto ds = binary(1000);
  const auto p = partition(ds, 4, PartitionMode::BiasedByLabel, {}, 1);
  std::vector<int> seen(ds.size(), 0);
  for (int c = 0; c < 4; ++c) {
    std::set<int> labels;
    for (auto idx : p.locals[static_cast<std::size_t>(c)]) {
      labels.insert(ds.labels()[idx]);
      seen[idx]++;
    }
    CHECK(labels.size() == 1);
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
  CHECK(std::accumulate(p.p.begin(), p.p.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("partition is reproducible") {
  const auto ds = binary(500);
  const auto a = partition(ds, 3, PartitionMode::Unbiased, {}, 11);
  const auto b = partition(ds, 3, PartitionMode::Unbiased, {}, 11);
  const auto c = partition(ds, 3, PartitionMode::Unbiased, {}, 12);
  CHECK(a.locals == b.locals);
  CHECK(a.locals != c.locals);
}

TEST_CASE("per_node_sizes examples") {
  AssignmentTable t;
  t.n = 3;
  t.rows = {{1, 2, 1}};
  t.rebuild_index();
  CHECK(per_node_sizes(t, 0, 1) == 2);
  CHECK(per_node_sizes(t, 0, 3) == 0);

  const std::vector<double> p{0.5, 0.5};
  const auto table = build_assignment(SampleSchedule::constant(1000), p, 2, 1, 77);
  const auto s1 = per_node_sizes(table, 0, 1);
  const auto s2 = per_node_sizes(table, 0, 2);
  CHECK(s1 >= 400);
  CHECK(s1 <= 600);
  CHECK(s1 + s2 == 1000);
}

TEST_CASE("build_assignment examples") {
  const std::vector<double> one{1.0};
  auto t = build_assignment(SampleSchedule::power_law(5, 0, 1), one, 1, 6, 3);
  for (const auto& row : t.rows)
    for (int v : row) CHECK(v == 1);
  CHECK(t.row_size(0) == 0);
  CHECK(t.row_size(5) == 25);

  const std::vector<double> skew{1.0, 0.0};
  t = build_assignment(SampleSchedule::constant(50), skew, 2, 4, 3);
  for (const auto& row : t.rows)
    for (int v : row) CHECK(v == 1);

  const std::vector<double> half{0.5, 0.5};
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto big = build_assignment(SampleSchedule::constant(10000), half, 2, 1, seed);
    inside += std::abs(per_node_sizes(big, 0, 1) - 5000) <= 150;
  }
  CHECK(inside >= 99);
}

TEST_CASE("assignment marginals converge") {
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  const auto t = build_assignment(SampleSchedule::constant(10000), p, 4, 100, 8);
  std::vector<double> counts(4, 0);
  for (const auto& row : t.rows)
    for (int v : row) counts[static_cast<std::size_t>(v - 1)] += 1;
  for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(counts[c] / 1e6 - p[c]) < 0.01);
}

TEST_CASE("assignment is reproducible and deterministic split is exact") {
  const std::vector<double> p{0.25, 0.75};
  const auto a = build_assignment(SampleSchedule::power_law(10, 0, 1), p, 2, 8, 4);
  const auto b = build_assignment(SampleSchedule::power_law(10, 0, 1), p, 2, 8, 4);
  CHECK(a.rows == b.rows);
  const auto d = build_assignment(SampleSchedule::constant(100), p, 2, 3, 4, true);
  for (int i = 0; i < 3; ++i) {
    CHECK(per_node_sizes(d, i, 1) == 25);
    CHECK(per_node_sizes(d, i, 2) == 75);
  }
}

TEST_CASE("truncate_to_budget") {
  const std::vector<double> one{1.0};
  auto t = build_assignment(SampleSchedule::constant(10), one, 1, 5, 0);
  truncate_to_budget(t, 25);
  CHECK(t.rounds() == 3);
  CHECK(t.row_size(2) == 5);
  CHECK(t.total() == 25);
  CHECK(t.offset(2) == 20);
}

TEST_CASE("draw_sample examples") {
  const auto ds = binary(10);
  const std::vector<std::size_t> single{7};
  CounterRng r(1, Stream::NodeSampling, 1);
  for (int i = 0; i < 100; ++i) CHECK(draw_sample(ds, single, r).x[0] == 7.0);

  const std::vector<std::size_t> two{2, 5};
  int first = 0;
  for (int i = 0; i < 10000; ++i) first += draw_sample_index(two, r) == 2;
  CHECK(first >= 4500);
  CHECK(first <= 5500);

  CounterRng a(9, Stream::NodeSampling, 2), b(9, Stream::NodeSampling, 2);
  for (int i = 0; i < 100; ++i) CHECK(draw_sample_index(two, a) == draw_sample_index(two, b));
  const std::vector<std::size_t> empty;
  CHECK_THROWS(draw_sample_index(empty, a));
}
