// rbmsim: config-driven runner for random-batch particle simulations.
//
//   rbmsim validate <config>   print the resolved config or a structured error
//   rbmsim run <config>        run and write out/<run-id>/
//   rbmsim bench <config>      time direct and random-batch steps over N

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "config.hpp"
#include "runner.hpp"

namespace {

int report(const nlohmann::ordered_json& err, int code) {
  std::cerr << err.dump(2) << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-batch particle simulations"};
  app.set_version_flag("--version", std::string("rbmsim ") + rbmsim::tool_version);
  app.require_subcommand(1);

  std::string config_path;
  rbmsim::Overrides ov;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t replicas = 0, threads = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "YAML experiment config")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", out_dir, "Override the output directory");
    sub->add_option("--replicas", replicas, "Override the replica count");
    sub->add_option("--threads", threads, "Worker threads for replicas");
  };
  auto* validate = app.add_subcommand("validate", "Check a config and print it with defaults applied");
  auto* run = app.add_subcommand("run", "Run an experiment");
  auto* bench = app.add_subcommand("bench", "Per-step timing of direct and RBM methods");
  for (auto* sub : {validate, run, bench}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report(rbmsim::error_json("usage", e.what()), 2);
  }
  auto* active = app.get_subcommands().front();
  if (active->count("--seed")) ov.seed = seed;
  if (active->count("--out")) ov.output = out_dir;
  if (active->count("--replicas")) ov.replicas = replicas;
  if (active->count("--threads")) ov.threads = threads;

  rbmsim::RunConfig cfg;
  try {
    cfg = rbmsim::load_config(config_path, ov);
  } catch (const rbmsim::ConfigError& e) {
    return report(rbmsim::error_json("config", e.message(), e.field(), e.line()), 2);
  } catch (const std::exception& e) {
    return report(rbmsim::error_json("config", e.what()), 2);
  }

  if (active == validate) {
    std::cout << rbmsim::resolved_text(cfg);
    return 0;
  }
  try {
    const auto out = active == run ? rbmsim::execute(cfg) : rbmsim::execute_bench(cfg);
    const auto dir = rbmsim::write_output(cfg, out);
    std::cout << dir.string() << std::endl;
    return 0;
  } catch (const std::exception& e) {
    return report(rbmsim::error_json("runtime", e.what()), 1);
  }
}
