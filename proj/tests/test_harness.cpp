#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "asgd/harness.hpp"

using namespace asgd;

namespace {

Json quadratic_config(int nodes, std::uint64_t seed, std::int64_t budget) {
  return {{"problem", "quadratic_mean"},
          {"synthetic", {{"samples", 300}, {"dim", 4}, {"seed", seed}}},
          {"nodes", nodes},
          {"seed", seed},
          {"budget", budget},
          {"sample_schedule", {{"kind", "strongly_convex"}, {"m", 7747}}}};
}

std::string field_of(const Json& j) {
  try {
    prepare(parse_config(j));
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

std::vector<std::vector<std::string>> csv_rows(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("defaults") {
  const auto cfg = parse_config({{"data", "data/a9a"}});
  CHECK(cfg.nodes == 5);
  CHECK(cfg.d == 1);
  CHECK(cfg.budget == 20000);
  CHECK(cfg.gate == Gate::Lag);
  CHECK(cfg.problem == ProblemKind::LogisticRidge);
  CHECK(cfg.backend == Backend::Event);
}

TEST_CASE("config errors name the field") {
  CHECK(field_of({{"bogus", 1}}) == "bogus");
  auto j = quadratic_config(2, 1, 10);
  CHECK(field_of(j) == "budget");
  j = quadratic_config(2, 1, 1000);
  j["nodes"] = 0;
  CHECK(field_of(j) == "nodes");
  j = quadratic_config(2, 1, 1000);
  j["gate"] = "tau";
  j["sample_schedule"] = {{"kind", "constant"}, {"s", 10}};
  CHECK(field_of(j) == "gate");
  j = quadratic_config(2, 1, 1000);
  j["p"] = {0.7, 0.7};
  CHECK(field_of(j) == "p");
  j = quadratic_config(2, 1, 1000);
  j["step_mode"] = "sideways";
  CHECK(field_of(j) == "step_mode");
  j = quadratic_config(2, 1, 1000);
  j["sample_schedule"] = {{"kind", "power_law"}, {"a", 50}};
  j["delay"] = {{"g", 2}, {"M0", 0}, {"M1", 1}, {"gamma", "one"}};
  j["gate"] = "tau";
  CHECK(field_of(j) == "sample_schedule");
  j["allow_incompatible"] = true;
  CHECK(field_of(j) == "");
}

TEST_CASE("quadratic metrics") {
  const auto cfg = parse_config(quadratic_config(3, 2, 3000));
  const auto out = execute(cfg, false);
  const auto& m = out.metrics;
  REQUIRE(out.optimum);
  const auto& sched = out.prepared.engine.samples;
  CHECK(m["K"] == 3000);
  CHECK(m["last_round"] == rounds_for_budget(sched, 3000));
  CHECK(m["T"] == communication_rounds(sched, 3000));
  CHECK(m["messages"].get<std::int64_t>() == 3 * m["T"].get<std::int64_t>());

  double yw = 0;
  for (std::size_t j = 0; j < out.result.final_w.size(); ++j) {
    const double e = out.result.final_w[j] - out.optimum->w_star[j];
    yw += e * e;
  }
  CHECK(m["final"]["Y_w"].get<double>() == doctest::Approx(yw).epsilon(1e-9));
  for (const auto& cp : m["checkpoints"]) {
    CHECK(cp["Y_w"].get<double>() >= -1e-9);
    CHECK(cp["Y_F"].get<double>() >= -1e-9);
  }
  const auto& first = m["checkpoints"].front();
  const auto& last = m["checkpoints"].back();
  CHECK(first["Y_A"].is_null());
  CHECK(last["Y_A"].is_null());
  CHECK(last["Y_w"].get<double>() < first["Y_w"].get<double>());
}

TEST_CASE("audit passes and the trace has one line per gradient") {
  const auto cfg = parse_config(quadratic_config(2, 5, 2000));
  const auto out = execute(cfg, true);
  REQUIRE(out.audit);
  CHECK(out.audit->ok);
  std::ostringstream trace;
  write_trace_jsonl(out.result.trace, trace);
  const std::string text = trace.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2000);
  const auto first = Json::parse(text.substr(0, text.find('\n')));
  CHECK(first["t"] == 0);
}

TEST_CASE("schedule csv examples") {
  auto rows = csv_rows(schedule_csv(
      {{"sample_schedule", {{"kind", "strongly_convex"}, {"m", 7747}, {"mu", 1}, {"L", 1}}}, {"d", 1}, {"rows", 3}}));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"i", "s_i", "cumulative", "eta_bar", "tau", "compatible"});
  CHECK(rows[1][0] == "0");
  CHECK(rows[1][1] == "16");
  CHECK(rows[1][5] == "n/a");
  CHECK(rows[2][5] == "true");
  CHECK(rows[3][5] == "true");

  rows = csv_rows(schedule_csv({{"sample_schedule", {{"kind", "power_law"}, {"a", 50}, {"b", 0}, {"c", 1}}},
                                {"rows", 4}}));
  REQUIRE(rows.size() == 5);
  CHECK(rows[1][0] == "1");
  CHECK(rows[1][1] == "50");
  CHECK(rows[2][1] == "100");
  CHECK(rows[4][2] == "500");

  rows = csv_rows(schedule_csv({{"sample_schedule", {{"kind", "constant"}, {"s", 100}}},
                                {"step_schedule", {{"kind", "constant"}, {"eta", 0.0025}}},
                                {"rows", 5}}));
  REQUIRE(rows.size() == 6);
  for (std::size_t r = 2; r < rows.size(); ++r) {
    CHECK(rows[r][1] == rows[1][1]);
    CHECK(rows[r][3] == rows[1][3]);
  }
  CHECK_THROWS_AS(schedule_csv({{"sample_schedule", {{"kind", "lemma_log"}, {"m", 1}}}}), std::exception);
}

TEST_CASE("grid search picks the smallest objective") {
  auto j = quadratic_config(2, 3, 2000);
  j["step_schedule"] = {{"kind", "inverse_t"}, {"eta0", 0.1}, {"beta", 0.01}};
  const auto rows = csv_rows(grid_csv(parse_config(j), {1e-4, 0.01, 0.1}));
  REQUIRE(rows.size() == 5);
  CHECK(rows.back()[0] == "selected");
  double best = 1e300;
  std::string eta;
  for (std::size_t r = 1; r + 1 < rows.size(); ++r) {
    const double f = std::stod(rows[r][1]);
    if (f < best) {
      best = f;
      eta = rows[r][0];
    }
  }
  CHECK(rows.back()[1] == eta);
}

TEST_CASE("identical seeds give identical metrics") {
  const auto cfg = parse_config(quadratic_config(4, 9, 3000));
  auto a = execute(cfg, false).metrics;
  auto b = execute(cfg, false).metrics;
  a.erase("wall_time");
  b.erase("wall_time");
  CHECK(a.dump() == b.dump());
}

TEST_CASE("suite csv is deterministic") {
  ExperimentOptions o;
  const auto a = experiment_csv("biased-vs-unbiased", o);
  CHECK(a == experiment_csv("biased-vs-unbiased", o));
  const auto rows = csv_rows(a);
  CHECK(rows.size() == 5);
  CHECK_THROWS_AS(experiment_csv("nope", o), ConfigError);
}

TEST_CASE("quadratic Y_w is stable across node counts") {
  std::vector<double> medians;
  for (int n : {1, 2, 5}) {
    std::vector<double> y;
    for (std::uint64_t seed = 1; seed <= 7; ++seed) {
      const Json j = {{"problem", "quadratic_mean"},
                      {"synthetic", {{"samples", 1000}, {"dim", 10}, {"seed", seed}}},
                      {"nodes", n},
                      {"seed", seed},
                      {"budget", 20000},
                      {"record_trace", false},
                      {"sample_schedule", {{"kind", "strongly_convex"}, {"m", 7747}}}};
      y.push_back(execute(parse_config(j), false).metrics["final"]["Y_w"].get<double>());
    }
    std::nth_element(y.begin(), y.begin() + 3, y.end());
    medians.push_back(y[3]);
  }
  const auto [lo, hi] = std::minmax_element(medians.begin(), medians.end());
  CAPTURE(medians);
  CHECK(*hi <= 2 * *lo);
}
