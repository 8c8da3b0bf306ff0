#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace rbmsim {

ConfigError::ConfigError(std::string field, int line, const std::string& message)
    : std::runtime_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                         (field.empty() ? "" : field + ": ") + message),
      field_(std::move(field)),
      line_(line),
      message_(message) {}

namespace {

const std::vector<std::pair<ModelKind, const char*>> model_names{
    {ModelKind::toy, "toy"},
    {ModelKind::dyson, "dyson"},
    {ModelKind::wealth, "wealth"},
    {ModelKind::cucker_smale, "cucker_smale"},
    {ModelKind::consensus, "consensus"},
    {ModelKind::electrolyte, "electrolyte"},
    {ModelKind::lj_fluid, "lj_fluid"},
    {ModelKind::gaussian_target, "gaussian_target"}};

const std::vector<std::pair<MethodKind, const char*>> method_names{
    {MethodKind::direct, "direct"}, {MethodKind::rbm, "rbm"},   {MethodKind::rbm_r, "rbm-r"},
    {MethodKind::rbm_split, "rbm-split"}, {MethodKind::rbe, "rbe"}, {MethodKind::rbmc, "rbmc"},
    {MethodKind::rbm_svgd, "rbm-svgd"}};

const std::vector<std::pair<ThermostatKind, const char*>> thermostat_names{
    {ThermostatKind::none, "none"},
    {ThermostatKind::andersen, "andersen"},
    {ThermostatKind::langevin, "langevin"}};

template <class E>
std::string name_of(const std::vector<std::pair<E, const char*>>& table, E k) {
  for (const auto& [e, s] : table) {
    if (e == k) return s;
  }
  return "?";
}

template <class E>
std::string choices(const std::vector<std::pair<E, const char*>>& table) {
  std::string out;
  for (const auto& [e, s] : table) out += (out.empty() ? "" : ", ") + std::string(s);
  return out;
}

enum class Type { uint, number, string, boolean, numbers, strings, uints };

struct Field {
  const char* key;
  Type type;
  const char* def;  // YAML text; nullptr = optional without default
};

int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

std::string show(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_type(const YAML::Node& v, Type t, const std::string& field) {
  const int line = line_of(v);
  auto fail = [&](const char* what) { throw ConfigError(field, line, std::string("expected ") + what); };
  try {
    switch (t) {
      case Type::uint: {
        if (!v.IsScalar()) fail("a non-negative integer");
        const auto s = v.Scalar();
        if (!s.empty() && s[0] == '-') fail("a non-negative integer");
        (void)v.as<unsigned long long>();
        break;
      }
      case Type::number: {
        if (!v.IsScalar()) fail("a number");
        const double x = v.as<double>();
        if (!std::isfinite(x)) fail("a finite number");
        break;
      }
      case Type::string:
        if (!v.IsScalar()) fail("a string");
        break;
      case Type::boolean:
        if (!v.IsScalar()) fail("true or false");
        (void)v.as<bool>();
        break;
      case Type::numbers:
        if (!v.IsSequence()) fail("a list of numbers");
        for (const auto& e : v) check_type(e, Type::number, field);
        break;
      case Type::uints:
        if (!v.IsSequence()) fail("a list of non-negative integers");
        for (const auto& e : v) check_type(e, Type::uint, field);
        break;
      case Type::strings:
        if (!v.IsSequence()) fail("a list of strings");
        for (const auto& e : v) check_type(e, Type::string, field);
        break;
    }
  } catch (const YAML::BadConversion&) {
    switch (t) {
      case Type::uint: fail("a non-negative integer"); break;
      case Type::number: fail("a number"); break;
      default: fail("true or false"); break;
    }
  }
}

/// Checks keys and types of one mapping and fills in defaults. Records the
/// source line of every given key in `lines`.
YAML::Node resolve_map(const YAML::Node& in, const std::string& path, const std::vector<Field>& fields,
                       std::map<std::string, int>& lines) {
  if (in && !in.IsNull() && !in.IsMap()) {
    throw ConfigError(path, line_of(in), "expected a mapping");
  }
  YAML::Node out(YAML::NodeType::Map);
  if (in && in.IsMap()) {
    for (const auto& kv : in) {
      const auto key = kv.first.as<std::string>();
      const auto it = std::find_if(fields.begin(), fields.end(),
                                   [&](const Field& f) { return key == f.key; });
      if (it == fields.end()) {
        std::string allowed;
        for (const auto& f : fields) allowed += (allowed.empty() ? "" : ", ") + std::string(f.key);
        throw ConfigError(join(path, key), line_of(kv.first),
                          "unknown key '" + key + "' (allowed: " + allowed + ")");
      }
      check_type(kv.second, it->type, join(path, key));
      lines[join(path, key)] = line_of(kv.first);
    }
  }
  for (const auto& f : fields) {
    if (in && in.IsMap() && in[f.key]) {
      out[f.key] = YAML::Clone(in[f.key]);
    } else if (f.def != nullptr) {
      out[f.key] = YAML::Load(f.def);
    }
  }
  return out;
}

const std::vector<Field>& model_fields(ModelKind k) {
  static const std::map<ModelKind, std::vector<Field>> table{
      {ModelKind::toy,
       {{"kind", Type::string, nullptr},
        {"n", Type::uint, "64"},
        {"dim", Type::uint, "1"},
        {"kernel", Type::string, "gaussian"},
        {"kernel_width", Type::number, "1.0"},
        {"kernel_scale", Type::number, "1.0"},
        {"sigma", Type::number, "0.5"},
        {"confining", Type::boolean, "true"}}},
      {ModelKind::dyson,
       {{"kind", Type::string, nullptr}, {"n", Type::uint, "500"}, {"split", Type::number, "0.01"}}},
      {ModelKind::wealth,
       {{"kind", Type::string, nullptr},
        {"n", Type::uint, "10000"},
        {"kappa", Type::number, "1.0"},
        {"diffusion", Type::number, "0.5"}}},
      {ModelKind::cucker_smale,
       {{"kind", Type::string, nullptr},
        {"n", Type::uint, "256"},
        {"dim", Type::uint, "2"},
        {"kappa", Type::number, "1.0"},
        {"beta", Type::number, "0.4"}}},
      {ModelKind::consensus,
       {{"kind", Type::string, nullptr},
        {"n", Type::uint, "100"},
        {"dim", Type::uint, "2"},
        {"kappa", Type::number, "1.0"},
        {"nu_scale", Type::number, "0.0"}}},
      {ModelKind::electrolyte,
       {{"kind", Type::string, nullptr},
        {"n", Type::uint, "300"},
        {"box", Type::number, "10.0"},
        {"diameter", Type::number, "0.2"},
        {"temperature", Type::number, "1.0"},
        {"lj_cutoff", Type::number, "1.122462048309373"},
        {"r_cut", Type::number, "0.0"},
        {"charges", Type::numbers, nullptr}}},
      {ModelKind::lj_fluid,
       {{"kind", Type::string, nullptr},
        {"n", Type::uint, "216"},
        {"box", Type::number, "8.0"},
        {"epsilon", Type::number, "1.0"},
        {"diameter", Type::number, "1.0"},
        {"split", Type::number, "1.5"},
        {"temperature", Type::number, "1.5"}}},
      {ModelKind::gaussian_target,
       {{"kind", Type::string, nullptr},
        {"n", Type::uint, "64"},
        {"dim", Type::uint, "1"},
        {"mean", Type::number, "0.0"},
        {"variance", Type::number, "1.0"},
        {"bandwidth", Type::number, "1.0"},
        {"init_mean", Type::number, "2.0"},
        {"init_scale", Type::number, "0.5"}}},
  };
  return table.at(k);
}

const std::vector<Field> method_fields{{"kind", Type::string, nullptr},
                                       {"p", Type::uint, "2"},
                                       {"dt", Type::number, "0.001"},
                                       {"substeps", Type::uint, "1"},
                                       {"schedule", Type::string, "constant"},
                                       {"schedule_k0", Type::number, "1.0"}};

const std::vector<Field> run_fields{{"steps", Type::uint, nullptr},
                                    {"t_end", Type::number, "1.0"},
                                    {"record_every", Type::uint, "0"},
                                    {"burn_in", Type::uint, "0"},
                                    {"thin", Type::uint, "1"}};

const std::vector<Field> thermostat_fields{{"kind", Type::string, "none"},
                                           {"nu", Type::number, "3.0"},
                                           {"temperature", Type::number, "1.0"},
                                           {"gamma", Type::number, "1.0"}};

const std::vector<Field> bench_fields{{"sizes", Type::uints, "[500, 1000, 2000]"},
                                      {"methods", Type::strings, "[direct, rbm]"},
                                      {"p", Type::uint, "2"},
                                      {"dt", Type::number, "0.001"},
                                      {"min_seconds", Type::number, "0.25"},
                                      {"repeats", Type::uint, "3"}};

const std::vector<Field> top_fields{{"name", Type::string, nullptr},
                                    {"seed", Type::uint, "1"},
                                    {"replicas", Type::uint, "1"},
                                    {"threads", Type::uint, "1"},
                                    {"output", Type::string, "out"},
                                    {"diagnostics", Type::strings, nullptr}};

const std::set<std::string> section_keys{"model", "method", "run", "thermostat", "bench"};

std::vector<MethodKind> allowed_methods(ModelKind k) {
  using M = MethodKind;
  switch (k) {
    case ModelKind::toy:
    case ModelKind::wealth: return {M::direct, M::rbm, M::rbm_r};
    case ModelKind::dyson: return {M::direct, M::rbm, M::rbm_r, M::rbmc};
    case ModelKind::cucker_smale:
    case ModelKind::consensus: return {M::direct, M::rbm};
    case ModelKind::electrolyte: return {M::direct, M::rbe};
    case ModelKind::lj_fluid: return {M::direct, M::rbm, M::rbm_split};
    case ModelKind::gaussian_target: return {M::direct, M::rbm_svgd};
  }
  return {};
}

std::vector<std::string> allowed_diagnostics(ModelKind k, MethodKind m) {
  switch (k) {
    case ModelKind::toy: return {"moments", "strong_error"};
    case ModelKind::dyson:
      if (m == MethodKind::rbmc) return {"semicircle_w1", "density_at_zero", "acceptance_rate", "histogram"};
      return {"semicircle_w1", "density_at_zero", "histogram"};
    case ModelKind::wealth: return {"wealth_w1", "mean", "histogram"};
    case ModelKind::cucker_smale: return {"flocking"};
    case ModelKind::consensus: return {"consensus"};
    case ModelKind::electrolyte: return {"energy", "temperature", "radial_charge", "momentum"};
    case ModelKind::lj_fluid: return {"temperature", "momentum"};
    case ModelKind::gaussian_target: return {"moments"};
  }
  return {};
}

std::vector<std::string> default_diagnostics(ModelKind k, MethodKind m) {
  switch (k) {
    case ModelKind::toy: return {"moments"};
    case ModelKind::dyson:
      if (m == MethodKind::rbmc) return {"semicircle_w1", "density_at_zero", "acceptance_rate"};
      return {"semicircle_w1", "density_at_zero"};
    case ModelKind::wealth: return {"wealth_w1", "mean"};
    case ModelKind::cucker_smale: return {"flocking"};
    case ModelKind::consensus: return {"consensus"};
    case ModelKind::electrolyte: return {"energy", "temperature"};
    case ModelKind::lj_fluid: return {"temperature"};
    case ModelKind::gaussian_target: return {"moments"};
  }
  return {};
}

bool particle_batches(MethodKind m) {
  return m == MethodKind::rbm || m == MethodKind::rbm_r || m == MethodKind::rbm_split ||
         m == MethodKind::rbmc || m == MethodKind::rbm_svgd;
}

template <class E>
E parse_enum(const std::vector<std::pair<E, const char*>>& table, const std::string& s,
             const std::string& field, int line) {
  for (const auto& [e, name] : table) {
    if (s == name) return e;
  }
  throw ConfigError(field, line, "unknown value '" + s + "' (choose one of: " + choices(table) + ")");
}

}  // namespace

std::string to_string(ModelKind k) { return name_of(model_names, k); }
std::string to_string(MethodKind k) { return name_of(method_names, k); }
std::string to_string(ThermostatKind k) { return name_of(thermostat_names, k); }

std::string RunConfig::run_id() const { return name + "-s" + std::to_string(seed); }

RunConfig parse_config(const std::string& text, const std::string& default_name,
                       const Overrides& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.mark.line + 1, "YAML syntax error: " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError("", line_of(root), "the config must be a mapping");

  std::map<std::string, int> lines;
  // top level: scalar fields here, sections below
  YAML::Node top_in(YAML::NodeType::Map);
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (section_keys.count(key)) continue;
    const bool known = std::any_of(top_fields.begin(), top_fields.end(),
                                   [&](const Field& f) { return key == f.key; });
    if (!known) {
      std::string allowed;
      for (const auto& f : top_fields) allowed += std::string(f.key) + ", ";
      for (const auto& sk : section_keys) allowed += sk + (sk == *section_keys.rbegin() ? "" : ", ");
      throw ConfigError(key, line_of(kv.first), "unknown key '" + key + "' (allowed: " + allowed + ")");
    }
    top_in[key] = kv.second;
    lines[key] = line_of(kv.first);
  }
  YAML::Node top = resolve_map(top_in, "", top_fields, lines);

  RunConfig cfg;
  cfg.name = top["name"] ? top["name"].as<std::string>() : default_name;
  cfg.seed = overrides.seed ? *overrides.seed : top["seed"].as<std::uint64_t>();
  cfg.replicas = overrides.replicas ? *overrides.replicas : top["replicas"].as<std::size_t>();
  cfg.threads = overrides.threads ? *overrides.threads : top["threads"].as<std::size_t>();
  cfg.output = overrides.output ? *overrides.output : top["output"].as<std::string>();
  if (cfg.name.empty()) throw ConfigError("name", lines["name"], "must not be empty");
  if (cfg.replicas < 1) throw ConfigError("replicas", lines["replicas"], "must be >= 1");
  if (cfg.threads < 1) throw ConfigError("threads", lines["threads"], "must be >= 1");

  // model
  const YAML::Node model_in = root["model"];
  if (!model_in || !model_in.IsMap()) throw ConfigError("model", line_of(root), "a model section is required");
  if (!model_in["kind"]) throw ConfigError("model.kind", line_of(model_in), "is required (" + choices(model_names) + ")");
  auto& m = cfg.model;
  m.kind = parse_enum(model_names, model_in["kind"].as<std::string>(), "model.kind",
                      line_of(model_in["kind"]));
  YAML::Node model = resolve_map(model_in, "model", model_fields(m.kind), lines);
  auto num = [&](const char* k, double& dst) {
    if (model[k]) dst = model[k].as<double>();
  };
  m.n = model["n"].as<std::size_t>();
  if (model["dim"]) m.dim = model["dim"].as<std::size_t>();
  if (model["kernel"]) m.kernel = model["kernel"].as<std::string>();
  num("kernel_width", m.kernel_width);
  num("kernel_scale", m.kernel_scale);
  num("sigma", m.sigma);
  if (model["confining"]) m.confining = model["confining"].as<bool>();
  num("split", m.split);
  num("kappa", m.kappa);
  num("diffusion", m.diffusion);
  num("beta", m.beta);
  num("nu_scale", m.nu_scale);
  num("box", m.box);
  num("diameter", m.diameter);
  num("temperature", m.temperature);
  num("lj_cutoff", m.lj_cutoff);
  num("r_cut", m.r_cut);
  num("epsilon", m.epsilon);
  num("mean", m.mean);
  num("variance", m.variance);
  num("bandwidth", m.bandwidth);
  num("init_mean", m.init_mean);
  num("init_scale", m.init_scale);
  if (model["charges"]) m.charges = model["charges"].as<std::vector<double>>();
  if (m.kind == ModelKind::electrolyte) m.dim = 3;
  if (m.kind == ModelKind::lj_fluid) m.dim = 3;

  auto positive = [&](const char* key, double v) {
    if (!(v > 0.0)) throw ConfigError(join("model", key), lines[join("model", key)], "must be positive");
  };
  if (m.n < 2) throw ConfigError("model.n", lines["model.n"], "need at least 2 particles");
  if (m.dim < 1) throw ConfigError("model.dim", lines["model.dim"], "must be >= 1");
  switch (m.kind) {
    case ModelKind::toy: {
      const std::set<std::string> ks{"linear", "gaussian", "sine", "zero"};
      if (!ks.count(m.kernel)) {
        throw ConfigError("model.kernel", lines["model.kernel"],
                          "unknown kernel '" + m.kernel + "' (choose one of: gaussian, linear, sine, zero)");
      }
      positive("kernel_width", m.kernel_width);
      if (m.sigma < 0.0) throw ConfigError("model.sigma", lines["model.sigma"], "must be >= 0");
      break;
    }
    case ModelKind::dyson: positive("split", m.split); break;
    case ModelKind::wealth:
      positive("kappa", m.kappa);
      positive("diffusion", m.diffusion);
      break;
    case ModelKind::cucker_smale:
      positive("kappa", m.kappa);
      if (m.beta < 0.0) throw ConfigError("model.beta", lines["model.beta"], "must be >= 0");
      break;
    case ModelKind::consensus:
      positive("kappa", m.kappa);
      if (m.nu_scale < 0.0) throw ConfigError("model.nu_scale", lines["model.nu_scale"], "must be >= 0");
      break;
    case ModelKind::electrolyte: {
      positive("box", m.box);
      positive("diameter", m.diameter);
      positive("temperature", m.temperature);
      positive("lj_cutoff", m.lj_cutoff);
      if (m.r_cut < 0.0 || m.r_cut >= 0.5 * m.box) {
        throw ConfigError("model.r_cut", lines["model.r_cut"],
                          "real-space cutoff r_c = " + show(m.r_cut) +
                              " must satisfy 0 <= r_c < L/2 = " + show(0.5 * m.box));
      }
      if (!m.charges.empty()) {
        if (m.charges.size() != m.n) {
          throw ConfigError("model.charges", lines["model.charges"],
                            "expected " + std::to_string(m.n) + " charges, got " +
                                std::to_string(m.charges.size()));
        }
        double total = 0.0;
        for (double q : m.charges) total += q;
        if (std::abs(total) > 1e-12) {
          std::ostringstream os;
          os << "charges violate electroneutrality: sum q = " << total << " (must be 0)";
          throw ConfigError("model.charges", lines["model.charges"], os.str());
        }
      } else if (m.n % 2 != 0) {
        throw ConfigError("model.n", lines["model.n"],
                          "a symmetric electrolyte needs an even number of ions for electroneutrality");
      }
      break;
    }
    case ModelKind::lj_fluid:
      positive("box", m.box);
      positive("epsilon", m.epsilon);
      positive("diameter", m.diameter);
      positive("temperature", m.temperature);
      positive("split", m.split);
      if (m.split >= 0.5 * m.box) {
        throw ConfigError("model.split", lines["model.split"],
                          "short-range cutoff r_c = " + show(m.split) +
                              " must be < L/2 = " + show(0.5 * m.box));
      }
      break;
    case ModelKind::gaussian_target:
      positive("variance", m.variance);
      positive("bandwidth", m.bandwidth);
      if (m.init_scale < 0.0) throw ConfigError("model.init_scale", lines["model.init_scale"], "must be >= 0");
      break;
  }

  // method
  const YAML::Node method_in = root["method"];
  if (!method_in || !method_in.IsMap()) throw ConfigError("method", line_of(root), "a method section is required");
  if (!method_in["kind"]) throw ConfigError("method.kind", line_of(method_in), "is required (" + choices(method_names) + ")");
  auto& me = cfg.method;
  me.kind = parse_enum(method_names, method_in["kind"].as<std::string>(), "method.kind",
                       line_of(method_in["kind"]));
  YAML::Node method = resolve_map(method_in, "method", method_fields, lines);
  me.p = method["p"].as<std::size_t>();
  me.dt = method["dt"].as<double>();
  me.substeps = method["substeps"].as<std::size_t>();
  me.schedule = method["schedule"].as<std::string>();
  me.schedule_k0 = method["schedule_k0"].as<double>();
  {
    const auto ok = allowed_methods(m.kind);
    if (std::find(ok.begin(), ok.end(), me.kind) == ok.end()) {
      std::string list;
      for (auto k : ok) list += (list.empty() ? "" : ", ") + to_string(k);
      throw ConfigError("method.kind", line_of(method_in["kind"]),
                        "method '" + to_string(me.kind) + "' does not apply to model '" +
                            to_string(m.kind) + "' (choose one of: " + list + ")");
    }
  }
  if (particle_batches(me.kind)) {
    if (me.p < 2) throw ConfigError("method.p", lines["method.p"], "batch size must be ≥ 2");
    if (me.p > m.n) {
      throw ConfigError("method.p", lines["method.p"],
                        "batch size p = " + std::to_string(me.p) + " exceeds N = " + std::to_string(m.n));
    }
  }
  if (me.kind == MethodKind::rbe && me.p < 1) {
    throw ConfigError("method.p", lines["method.p"], "frequency batch size must be ≥ 1");
  }
  if (!(me.dt > 0.0)) throw ConfigError("method.dt", lines["method.dt"], "time step must be positive");
  if (me.substeps < 1) throw ConfigError("method.substeps", lines["method.substeps"], "must be >= 1");
  {
    std::set<std::string> ok{"constant"};
    if (me.kind == MethodKind::rbmc) ok = {"constant", "log_decay", "inverse"};
    if (me.kind == MethodKind::rbm_svgd || (m.kind == ModelKind::gaussian_target))
      ok = {"constant", "inverse", "adagrad"};
    if (!ok.count(me.schedule)) {
      std::string list;
      for (const auto& s : ok) list += (list.empty() ? "" : ", ") + s;
      throw ConfigError("method.schedule", lines["method.schedule"],
                        "schedule '" + me.schedule + "' is not available here (choose one of: " + list + ")");
    }
  }

  // run
  YAML::Node run = resolve_map(root["run"], "run", run_fields, lines);
  auto& r = cfg.run;
  r.t_end = run["t_end"].as<double>();
  r.record_every = run["record_every"].as<std::size_t>();
  r.burn_in = run["burn_in"].as<std::size_t>();
  r.thin = run["thin"].as<std::size_t>();
  if (run["steps"]) {
    r.steps = run["steps"].as<std::size_t>();
    r.t_end = me.schedule == "constant" ? static_cast<double>(r.steps) * me.dt : 0.0;
  } else {
    if (me.schedule != "constant") {
      throw ConfigError("run.steps", line_of(root["run"]), "a decaying schedule needs an explicit step count");
    }
    if (!(r.t_end > 0.0)) throw ConfigError("run.t_end", lines["run.t_end"], "must be positive");
    r.steps = static_cast<std::size_t>(std::llround(r.t_end / me.dt));
  }
  run["steps"] = r.steps;
  run["t_end"] = r.t_end;
  if (r.steps < 1) throw ConfigError("run.steps", lines["run.steps"], "must be >= 1");
  if (r.thin < 1) throw ConfigError("run.thin", lines["run.thin"], "must be >= 1");
  if (r.burn_in >= r.steps) throw ConfigError("run.burn_in", lines["run.burn_in"], "must be smaller than run.steps");

  // thermostat
  YAML::Node thermo = resolve_map(root["thermostat"], "thermostat", thermostat_fields, lines);
  auto& th = cfg.thermostat;
  th.kind = parse_enum(thermostat_names, thermo["kind"].as<std::string>(), "thermostat.kind",
                       lines["thermostat.kind"]);
  th.nu = thermo["nu"].as<double>();
  th.temperature = thermo["temperature"].as<double>();
  th.gamma = thermo["gamma"].as<double>();
  if (th.kind != ThermostatKind::none) {
    if (m.kind != ModelKind::electrolyte && m.kind != ModelKind::lj_fluid) {
      throw ConfigError("thermostat.kind", lines["thermostat.kind"],
                        "thermostats apply to the electrolyte and lj_fluid models only");
    }
    if (!(th.temperature > 0.0)) {
      throw ConfigError("thermostat.temperature", lines["thermostat.temperature"], "must be positive");
    }
    if (th.kind == ThermostatKind::andersen && !(th.nu >= 0.0)) {
      throw ConfigError("thermostat.nu", lines["thermostat.nu"], "collision frequency must be >= 0");
    }
    if (th.kind == ThermostatKind::langevin && !(th.gamma > 0.0)) {
      throw ConfigError("thermostat.gamma", lines["thermostat.gamma"], "friction must be positive");
    }
  }

  // bench
  YAML::Node bench = resolve_map(root["bench"], "bench", bench_fields, lines);
  auto& b = cfg.bench;
  b.sizes = bench["sizes"].as<std::vector<std::size_t>>();
  b.methods = bench["methods"].as<std::vector<std::string>>();
  b.p = bench["p"].as<std::size_t>();
  b.dt = bench["dt"].as<double>();
  b.min_seconds = bench["min_seconds"].as<double>();
  b.repeats = bench["repeats"].as<std::size_t>();
  if (b.sizes.empty()) throw ConfigError("bench.sizes", lines["bench.sizes"], "must not be empty");
  for (std::size_t n : b.sizes) {
    if (n < b.p) throw ConfigError("bench.sizes", lines["bench.sizes"], "every size must be >= bench.p");
  }
  for (const auto& s : b.methods) {
    if (s != "direct" && s != "rbm") {
      throw ConfigError("bench.methods", lines["bench.methods"], "unknown method '" + s + "' (choose direct or rbm)");
    }
  }
  if (b.p < 2) throw ConfigError("bench.p", lines["bench.p"], "batch size must be ≥ 2");
  if (!(b.dt > 0.0)) throw ConfigError("bench.dt", lines["bench.dt"], "time step must be positive");
  if (b.repeats < 1) throw ConfigError("bench.repeats", lines["bench.repeats"], "must be >= 1");

  // diagnostics
  const auto allowed = allowed_diagnostics(m.kind, me.kind);
  if (top["diagnostics"]) {
    cfg.diagnostics = top["diagnostics"].as<std::vector<std::string>>();
    for (const auto& d : cfg.diagnostics) {
      if (std::find(allowed.begin(), allowed.end(), d) == allowed.end()) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        throw ConfigError("diagnostics", lines["diagnostics"],
                          "unknown diagnostic '" + d + "' for this model and method (choose from: " + list + ")");
      }
    }
  } else {
    cfg.diagnostics = default_diagnostics(m.kind, me.kind);
  }

  // resolved record
  YAML::Node res(YAML::NodeType::Map);
  res["name"] = cfg.name;
  res["seed"] = cfg.seed;
  res["replicas"] = cfg.replicas;
  res["threads"] = cfg.threads;
  res["output"] = cfg.output;
  res["model"] = model;
  res["method"] = method;
  res["run"] = run;
  res["thermostat"] = thermo;
  res["diagnostics"] = cfg.diagnostics;
  res["bench"] = bench;
  cfg.resolved = res;
  return cfg;
}

RunConfig load_config(const std::string& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).stem().string(), overrides);
}

std::string resolved_text(const RunConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << cfg.resolved;
  std::string text = "# rbmsim " + std::string(tool_version) + ", output format " +
                     std::to_string(output_format_version) + "\n";
  text += out.c_str();
  text += "\n";
  return text;
}

}  // namespace rbmsim
