#include <doctest.h>

#include <string>

#include "config.hpp"
#include "runner.hpp"

using namespace rbmsim;

namespace {

std::string error_of(const std::string& text, std::string* field = nullptr, int* line = nullptr) {
  try {
    parse_config(text, "t");
  } catch (const ConfigError& e) {
    if (field) *field = e.field();
    if (line) *line = e.line();
    return e.message();
  }
  return "";
}

const char* toy_text(const char* method, int p) {
  static std::string s;
  s = std::string("name: toy\nseed: 5\nreplicas: 3\nmodel:\n  kind: toy\n  n: 8\n  kernel: sine\n") +
      "method:\n  kind: " + method + "\n  p: " + std::to_string(p) + "\n  dt: 0.01\n" +
      "run:\n  steps: 50\n  record_every: 10\ndiagnostics: [moments]\n";
  return s.c_str();
}

}  // namespace

TEST_CASE("minimal dyson config resolves with defaults") {
  const auto cfg = parse_config("model:\n  kind: dyson\nmethod:\n  kind: rbmc\n", "dyson_minimal");
  CHECK(cfg.name == "dyson_minimal");
  CHECK(cfg.model.kind == ModelKind::dyson);
  CHECK(cfg.model.n == 500);
  CHECK(cfg.model.split == doctest::Approx(0.01));
  CHECK(cfg.method.p == 2);
  CHECK(cfg.run.steps == 1000);
  CHECK(cfg.seed == 1);
  CHECK(cfg.run_id() == "dyson_minimal-s1");
  REQUIRE(cfg.diagnostics.size() == 3);
  CHECK(cfg.diagnostics[0] == "semicircle_w1");
  const std::string text = resolved_text(cfg);
  CHECK(text.find("# rbmsim 0.3.0") == 0);
  CHECK(text.find("split: 0.01") != std::string::npos);
}

TEST_CASE("semantic errors") {
  std::string field;
  int line = 0;
  CHECK(error_of("model:\n  kind: toy\n  n: 10\nmethod:\n  kind: rbm\n  p: 0\n", &field, &line)
            .find("batch size must be ≥ 2") != std::string::npos);
  CHECK(field == "method.p");
  CHECK(line == 6);

  CHECK(error_of("model:\n  kind: toy\n  n: 10\nmethod:\n  kind: rbm\n  p: 11\n")
            .find("exceeds N = 10") != std::string::npos);

  CHECK(error_of("model:\n  kind: electrolyte\n  n: 2\n  charges: [1, 1]\nmethod:\n  kind: rbe\n  p: 10\n",
                 &field)
            .find("electroneutrality") != std::string::npos);
  CHECK(field == "model.charges");

  CHECK(error_of("model:\n  kind: electrolyte\n  box: 10\n  r_cut: 5\nmethod:\n  kind: rbe\n  p: 10\n", &field)
            .find("L/2") != std::string::npos);
  CHECK(field == "model.r_cut");

  CHECK(error_of("model:\n  kind: dyson\nmethod:\n  kind: rbe\n").find("does not apply to model") != std::string::npos);
}

TEST_CASE("schema errors carry field and line") {
  std::string field;
  int line = 0;
  CHECK(error_of("model:\n  kind: toy\n  nn: 3\nmethod:\n  kind: rbm\n", &field, &line)
            .find("unknown key") != std::string::npos);
  CHECK(field == "model.nn");
  CHECK(line == 3);

  CHECK(!error_of("model:\n  kind: toy\nmethod:\n  kind: rbm\n  dt: fast\n", &field, &line).empty());
  CHECK(field == "method.dt");
  CHECK(line == 5);

  CHECK(!error_of("model: [1, 2\n").empty());
}

TEST_CASE("overrides apply before validation") {
  Overrides ov;
  ov.seed = 42;
  ov.replicas = 4;
  ov.output = "elsewhere";
  const auto cfg = parse_config(toy_text("rbm", 2), "t", ov);
  CHECK(cfg.seed == 42);
  CHECK(cfg.replicas == 4);
  CHECK(cfg.output == "elsewhere");
  CHECK(cfg.run_id() == "toy-s42");
}

TEST_CASE("same config and seed give identical metrics for any thread count") {
  Overrides one, four;
  one.threads = 1;
  four.threads = 4;
  const auto a = execute(parse_config(toy_text("rbm", 2), "t", one));
  const auto b = execute(parse_config(toy_text("rbm", 2), "t", one));
  const auto c = execute(parse_config(toy_text("rbm", 2), "t", four));
  CHECK(a.metrics.dump(2) == b.metrics.dump(2));
  CHECK(a.metrics.dump(2) == c.metrics.dump(2));
  CHECK(a.trajectory_csv == c.trajectory_csv);
  CHECK(a.metrics["metrics"]["variance"]["replicas"].size() == 3);
}

TEST_CASE("direct and rbm with p = N give identical trajectories") {
  const auto direct = execute(parse_config(toy_text("direct", 2), "t"));
  const auto full = execute(parse_config(toy_text("rbm", 8), "t"));
  CHECK(direct.trajectory_csv == full.trajectory_csv);
  CHECK(direct.trajectory_csv.find("replica,step,time,particle,x0\n") == 0);
}

TEST_CASE("error json") {
  const auto j = error_json("config", "bad", "method.p", 4);
  CHECK(j["error"]["kind"] == "config");
  CHECK(j["error"]["field"] == "method.p");
  CHECK(j["error"]["line"] == 4);
}
