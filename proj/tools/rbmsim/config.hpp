#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

namespace rbmsim {

inline constexpr const char* tool_version = "0.3.0";
/// Bumped whenever CSV columns or metric keys change.
inline constexpr int output_format_version = 1;

/// Schema or semantic violation, located by field path and source line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, int line, const std::string& message);
  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }  // 1-based, 0 if unknown
  const std::string& message() const noexcept { return message_; }

 private:
  std::string field_;
  int line_;
  std::string message_;
};

enum class ModelKind { toy, dyson, wealth, cucker_smale, consensus, electrolyte, lj_fluid, gaussian_target };
enum class MethodKind { direct, rbm, rbm_r, rbm_split, rbe, rbmc, rbm_svgd };
enum class ThermostatKind { none, andersen, langevin };

std::string to_string(ModelKind k);
std::string to_string(MethodKind k);
std::string to_string(ThermostatKind k);

struct ModelConfig {
  ModelKind kind = ModelKind::toy;
  std::size_t n = 0;
  std::size_t dim = 1;
  // toy
  std::string kernel = "gaussian";
  double kernel_width = 1.0;
  double kernel_scale = 1.0;
  double sigma = 0.5;
  bool confining = true;
  // dyson
  double split = 0.01;
  // wealth, cucker_smale, consensus
  double kappa = 1.0;
  double diffusion = 0.5;
  double beta = 0.4;
  double nu_scale = 0.0;
  // electrolyte, lj_fluid
  double box = 10.0;
  double diameter = 0.2;
  double temperature = 1.0;
  double lj_cutoff = 0.0;
  double r_cut = 0.0;
  std::vector<double> charges;
  double epsilon = 1.0;
  // gaussian_target
  double mean = 0.0;
  double variance = 1.0;
  double bandwidth = 1.0;
  double init_mean = 2.0;
  double init_scale = 0.5;
};

struct MethodConfig {
  MethodKind kind = MethodKind::rbm;
  std::size_t p = 2;
  double dt = 1e-3;
  std::size_t substeps = 1;          // rbmc proposal steps m
  std::string schedule = "constant";  // constant | log_decay | inverse | adagrad
  double schedule_k0 = 1.0;
};

struct RunSection {
  std::size_t steps = 0;  // resolved from t_end / dt when absent
  double t_end = 0.0;
  std::size_t record_every = 0;  // 0: initial and final states only
  std::size_t burn_in = 0;
  std::size_t thin = 1;
};

struct ThermostatConfig {
  ThermostatKind kind = ThermostatKind::none;
  double nu = 3.0;
  double temperature = 1.0;
  double gamma = 1.0;
};

struct BenchConfig {
  std::vector<std::size_t> sizes{500, 1000, 2000};
  std::vector<std::string> methods{"direct", "rbm"};
  std::size_t p = 2;
  double dt = 1e-3;
  double min_seconds = 0.25;
  std::size_t repeats = 3;
};

struct RunConfig {
  std::string name;
  std::uint64_t seed = 1;
  std::size_t replicas = 1;
  std::size_t threads = 1;
  std::string output = "out";
  ModelConfig model;
  MethodConfig method;
  RunSection run;
  ThermostatConfig thermostat;
  std::vector<std::string> diagnostics;
  BenchConfig bench;

  /// The fully resolved configuration as YAML, defaults included.
  YAML::Node resolved;

  std::string run_id() const;
};

/// Command-line overrides applied before validation.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<std::size_t> replicas;
  std::optional<std::size_t> threads;
};

/// Parses, applies defaults and validates. Throws ConfigError.
RunConfig load_config(const std::string& path, const Overrides& overrides = {});
RunConfig parse_config(const std::string& text, const std::string& default_name,
                       const Overrides& overrides = {});

/// Resolved YAML text with a version header.
std::string resolved_text(const RunConfig& cfg);

}  // namespace rbmsim
