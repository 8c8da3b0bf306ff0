#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace rbmsim {

/// Everything a run produces, before it is written to disk.
struct RunOutput {
  nlohmann::ordered_json metrics;
  std::string trajectory_csv;
  std::map<std::string, std::string> extra_files;  // file name -> contents
  std::vector<std::string> log;
};

/// Executes all replicas (in parallel when cfg.threads > 1). Replica r draws
/// from Streams::for_replica(cfg.seed, r), so the output does not depend on
/// the thread count.
RunOutput execute(const RunConfig& cfg);

/// Scaling table for the bench section.
RunOutput execute_bench(const RunConfig& cfg);

/// Writes out/<run-id>/{config.resolved, trajectory.csv, metrics.json, log.txt}
/// plus any extra files, and returns the directory. Bench output goes to
/// out/<run-id>-bench/.
std::filesystem::path write_output(const RunConfig& cfg, const RunOutput& out);

/// {"error": {"kind": ..., "message": ..., "field": ..., "line": ...}}
nlohmann::ordered_json error_json(const std::string& kind, const std::string& message,
                                  const std::string& field = "", int line = 0);

}  // namespace rbmsim
