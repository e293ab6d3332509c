#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <string>

#include <json.hpp>

#include "asgd/asgd.h"

namespace {

const char* kQuadratic =
    R"({"problem":"quadratic_mean","synthetic":{"samples":200,"dim":3,"seed":4},"nodes":2,"seed":4,)"
    R"("budget":1500,"sample_schedule":{"kind":"strongly_convex","m":7747}})";

std::string take(char* s) {
  std::string out = s ? s : "";
  asgd_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("version and errors") {
  CHECK(std::string(asgd_version()) == "1.0.0");
  asgd_config* cfg = nullptr;
  CHECK(asgd_config_from_json("{not json", &cfg) == ASGD_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(std::strlen(asgd_last_error()) > 0);
  CHECK(asgd_config_from_json(R"({"bogus":1})", &cfg) == ASGD_CONFIG);
  CHECK(std::string(asgd_last_error()).find("bogus") != std::string::npos);
  CHECK(asgd_config_from_json(nullptr, &cfg) == ASGD_INVALID_ARGUMENT);
  CHECK(asgd_config_load("/nonexistent/config.json", &cfg) != ASGD_OK);
}

TEST_CASE("run through the C interface") {
  asgd_config* cfg = nullptr;
  REQUIRE(asgd_config_from_json(kQuadratic, &cfg) == ASGD_OK);
  CHECK(asgd_config_set_backend(cfg, "warp") == ASGD_CONFIG);
  REQUIRE(asgd_config_set_seed(cfg, 7) == ASGD_OK);

  asgd_run* run = nullptr;
  REQUIRE(asgd_run_execute(cfg, 1, &run) == ASGD_OK);
  char* text = nullptr;
  REQUIRE(asgd_run_metrics_json(run, &text) == ASGD_OK);
  const auto m = nlohmann::json::parse(take(text));
  CHECK(m["K"] == 1500);
  CHECK(m["seed"] == 7);
  CHECK(m["final"]["Y_w"].get<double>() >= 0);
  REQUIRE(asgd_run_audit_json(run, &text) == ASGD_OK);
  CHECK(nlohmann::json::parse(take(text))["ok"] == true);
  asgd_run_free(run);

  REQUIRE(asgd_optimum_json(cfg, &text) == ASGD_OK);
  CHECK(nlohmann::json::parse(take(text))["exact"] == true);
  const double grid[] = {0.001, 0.01};
  REQUIRE(asgd_grid_csv(cfg, grid, 2, &text) == ASGD_OK);
  CHECK(take(text).find("selected") != std::string::npos);
  asgd_config_free(cfg);
}

TEST_CASE("schedules and suites") {
  char* text = nullptr;
  REQUIRE(asgd_schedule_csv(R"({"sample_schedule":{"kind":"strongly_convex","m":7747,"mu":1,"L":1},"rows":1})",
                            &text) == ASGD_OK);
  CHECK(take(text).find("\n0,16,16,") != std::string::npos);
  CHECK(asgd_schedule_csv(R"({"sample_schedule":{"kind":"lemma_log","m":1}})", &text) != ASGD_OK);
  REQUIRE(asgd_experiment_suites(&text) == ASGD_OK);
  CHECK(take(text).find("scaling-nodes") != std::string::npos);
  CHECK(asgd_experiment_csv("nope", "data/a9a", "data/a9a.t", 1, &text) == ASGD_CONFIG);
}

TEST_CASE("command line exit codes") {
  const std::string cli = ASGD_CLI_PATH;
  const std::string dir = ASGD_TEST_TMP;
  auto write = [&](const std::string& name, const std::string& body) {
    const std::string path = dir + "/" + name;
    FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f);
    std::fputs(body.c_str(), f);
    std::fclose(f);
    return path;
  };
  auto status = [&](const std::string& args) {
    const int rc = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  const auto good = write("good.json", kQuadratic);
  nlohmann::json small = nlohmann::json::parse(kQuadratic);
  small["budget"] = 10;
  const auto bad = write("bad.json", small.dump());
  nlohmann::json stuck = nlohmann::json::parse(kQuadratic);
  stuck["sample_schedule"] = {{"kind", "constant"}, {"s", 40}};
  stuck["delay"] = {{"g", 2}, {"M0", 0}, {"M1", 0}, {"gamma", "one"}};
  stuck["gate"] = "tau";
  stuck["deterministic_split"] = true;
  stuck["allow_incompatible"] = true;
  const auto deadlock = write("deadlock.json", stuck.dump());

  CHECK(status("run --config " + good + " --out " + dir + "/m.json") == 0);
  CHECK(status("run --audit --config " + good + " --out " + dir + "/m.json") == 0);
  CHECK(status("audit --config " + good) == 0);
  CHECK(status("run --config " + bad) == 1);
  CHECK(status("run --config " + deadlock) == 2);
  CHECK(status("schedule --json '{\"sample_schedule\":{\"kind\":\"constant\",\"s\":100},\"rows\":5}'") == 0);
  CHECK(status("frobnicate") == 1);
}
