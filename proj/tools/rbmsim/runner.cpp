#include "runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <thread>

#include "rbm/diagnostics.hpp"
#include "rbm/ewald.hpp"
#include "rbm/integrators.hpp"
#include "rbm/models.hpp"
#include "rbm/samplers.hpp"
#include "rbm/svgd.hpp"

namespace rbmsim {

using namespace rbm;

namespace {

/// Metrics of one replica, in insertion order.
using Metrics = std::vector<std::pair<std::string, double>>;

struct ReplicaOutput {
  Metrics metrics;
  std::string trajectory;
  Histogram histogram;  // only for the histogram diagnostic
  std::optional<RadialChargeAccumulator> radial;
  double seconds = 0.0;
};

bool wants(const RunConfig& cfg, const std::string& d) {
  return std::find(cfg.diagnostics.begin(), cfg.diagnostics.end(), d) != cfg.diagnostics.end();
}

std::string trajectory_header(std::size_t dim, bool velocities) {
  std::string h = "replica,step,time,particle";
  for (std::size_t k = 0; k < dim; ++k) h += ",x" + std::to_string(k);
  if (velocities) {
    for (std::size_t k = 0; k < dim; ++k) h += ",v" + std::to_string(k);
  }
  return h + "\n";
}

void append_rows(std::string& out, std::size_t replica, std::size_t step, double time,
                 const Points& x, const Points* v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < x.size(); ++i) {
    os << replica << ',' << step << ',' << time << ',' << i;
    for (double c : x[i]) os << ',' << c;
    if (v != nullptr) {
      for (double c : (*v)[i]) os << ',' << c;
    }
    os << '\n';
  }
  out += os.str();
}

/// Decides when to write trajectory rows: step 0, every record_every steps,
/// and the last step.
bool record_now(const RunConfig& cfg, std::size_t step) {
  if (step == 0 || step == cfg.run.steps) return true;
  return cfg.run.record_every > 0 && step % cfg.run.record_every == 0;
}

bool sample_now(const RunConfig& cfg, std::size_t step) {
  return step > cfg.run.burn_in && (step - cfg.run.burn_in) % cfg.run.thin == 0;
}

Points normal_points(std::size_t n, std::size_t d, RngStream& rng, double scale = 1.0,
                     double shift = 0.0) {
  Points x(n, d);
  for (double& v : x.flat()) v = shift + scale * rng.normal();
  return x;
}

void center(Points& x) {
  for (std::size_t c = 0; c < x.dim(); ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mean += x[i][c];
    mean /= static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i][c] -= mean;
  }
}

VectorField minus_x() {
  return [](std::span<const double> x, std::span<double> out) {
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = -x[k];
  };
}

void add_moments(Metrics& m, const Points& x) {
  double mean = 0.0;
  for (double v : x.flat()) mean += v;
  mean /= static_cast<double>(x.flat().size());
  double var = 0.0;
  for (double v : x.flat()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.flat().size());
  m.emplace_back("mean", mean);
  m.emplace_back("variance", var);
}

// --- first-order models -----------------------------------------------------

ParticleState first_order_step(const RunConfig& cfg, const ParticleState& s,
                               const FirstOrderSystem& sys, Streams& rng) {
  switch (cfg.method.kind) {
    case MethodKind::direct: return direct_step(s, sys, cfg.method.dt, rng);
    case MethodKind::rbm: return rbm_step_first_order(s, sys, cfg.method.p, cfg.method.dt, rng);
    case MethodKind::rbm_r: return rbmr_step(s, sys, cfg.method.p, cfg.method.dt, rng);
    default: throw std::logic_error("method not available for a first-order model");
  }
}

FirstOrderSystem toy_system(const ModelConfig& m) {
  FirstOrderSystem sys;
  if (m.confining) sys.drift = minus_x();
  if (m.kernel == "linear") {
    sys.kernel = kernels::linear(m.kernel_scale);
  } else if (m.kernel == "sine") {
    sys.kernel = kernels::sine();
  } else if (m.kernel == "zero") {
    sys.kernel = kernels::zero();
  } else {
    sys.kernel = kernels::gaussian(m.kernel_width);
  }
  sys.alpha_n = 1.0 / static_cast<double>(m.n - 1);
  sys.sigma = m.sigma;
  return sys;
}

ReplicaOutput run_toy(const RunConfig& cfg, std::size_t r) {
  ReplicaOutput out;
  Streams rng = Streams::for_replica(cfg.seed, r);
  const auto sys = toy_system(cfg.model);
  ParticleState s(normal_points(cfg.model.n, cfg.model.dim, rng.init));
  const bool coupled = wants(cfg, "strong_error");
  ParticleState ref = s;
  Streams ref_rng = Streams::for_replica(cfg.seed, r);
  double sup_err = 0.0;
  append_rows(out.trajectory, r, 0, 0.0, s.positions, nullptr);
  for (std::size_t k = 1; k <= cfg.run.steps; ++k) {
    s = first_order_step(cfg, s, sys, rng);
    if (coupled) {
      ref = direct_step(ref, sys, cfg.method.dt, ref_rng);
      double e = 0.0;
      for (std::size_t i = 0; i < s.positions.flat().size(); ++i) {
        const double d = s.positions.flat()[i] - ref.positions.flat()[i];
        e += d * d;
      }
      sup_err = std::max(sup_err, std::sqrt(e / static_cast<double>(cfg.model.n)));
    }
    if (record_now(cfg, k)) append_rows(out.trajectory, r, k, k * cfg.method.dt, s.positions, nullptr);
  }
  if (wants(cfg, "moments")) add_moments(out.metrics, s.positions);
  if (coupled) out.metrics.emplace_back("strong_error_sup", sup_err);
  return out;
}

ReplicaOutput run_dyson(const RunConfig& cfg, std::size_t r) {
  ReplicaOutput out;
  Streams rng = Streams::for_replica(cfg.seed, r);
  DysonModel model{cfg.model.n, cfg.model.split};
  const Points x0 = model.initial(rng.init);
  std::vector<double> pooled;
  auto pool = [&](const Points& x) { pooled.insert(pooled.end(), x.flat().begin(), x.flat().end()); };
  append_rows(out.trajectory, r, 0, 0.0, x0, nullptr);

  std::optional<McStats> stats;
  if (cfg.method.kind == MethodKind::rbmc) {
    StepSchedule schedule = StepSchedule::constant(cfg.method.dt);
    if (cfg.method.schedule == "log_decay") schedule = StepSchedule::log_decay(cfg.method.dt);
    if (cfg.method.schedule == "inverse") schedule = StepSchedule::inverse(cfg.method.schedule_k0, cfg.method.dt);
    RbmcChain chain(model.gibbs_target(), x0, cfg.method.substeps, cfg.method.p, schedule, rng.noise);
    double t = 0.0;
    for (std::size_t k = 1; k <= cfg.run.steps; ++k) {
      chain.sweep();
      t += schedule.at(k);
      if (sample_now(cfg, k)) pool(chain.config());
      if (record_now(cfg, k)) append_rows(out.trajectory, r, k, t, chain.config(), nullptr);
    }
    stats = chain.stats();
  } else {
    const auto sys = model.sde();
    ParticleState s(x0);
    for (std::size_t k = 1; k <= cfg.run.steps; ++k) {
      s = first_order_step(cfg, s, sys, rng);
      if (sample_now(cfg, k)) pool(s.positions);
      if (record_now(cfg, k)) append_rows(out.trajectory, r, k, k * cfg.method.dt, s.positions, nullptr);
    }
  }
  if (wants(cfg, "semicircle_w1")) {
    const auto [lo, hi] = std::minmax_element(pooled.begin(), pooled.end());
    out.metrics.emplace_back("semicircle_w1", wasserstein1_1d(pooled, semicircle_cdf,
                                                              std::min(-2.0, *lo), std::max(2.0, *hi)));
  }
  if (wants(cfg, "density_at_zero")) {
    const auto c = std::count_if(pooled.begin(), pooled.end(), [](double v) { return std::abs(v) < 0.05; });
    out.metrics.emplace_back("density_at_zero", static_cast<double>(c) / (0.1 * pooled.size()));
  }
  if (wants(cfg, "acceptance_rate") && stats) {
    out.metrics.emplace_back("acceptance_rate", stats->acceptance_rate());
  }
  if (wants(cfg, "histogram")) {
    out.histogram = Histogram::uniform(-2.0, 2.0, 80);
    out.histogram.add(pooled);
  }
  out.metrics.emplace_back("samples", static_cast<double>(pooled.size()));
  return out;
}

ReplicaOutput run_wealth(const RunConfig& cfg, std::size_t r) {
  ReplicaOutput out;
  Streams rng = Streams::for_replica(cfg.seed, r);
  WealthModel model{cfg.model.n, cfg.model.kappa, cfg.model.diffusion};
  const auto sys = model.system();
  ParticleState s(model.initial(rng.init));
  std::size_t flips = 0;
  append_rows(out.trajectory, r, 0, 0.0, s.positions, nullptr);
  for (std::size_t k = 1; k <= cfg.run.steps; ++k) {
    s = first_order_step(cfg, s, sys, rng);
    flips += reflect_wealth(s);
    if (record_now(cfg, k)) append_rows(out.trajectory, r, k, k * cfg.method.dt, s.positions, nullptr);
  }
  const auto& y = s.positions.flat();
  if (wants(cfg, "wealth_w1")) {
    const double hi = std::max(100.0, *std::max_element(y.begin(), y.end()) + 1.0);
    out.metrics.emplace_back(
        "wealth_w1",
        wasserstein1_1d(y, [&](double v) { return wealth_equilibrium_cdf(v, model.kappa, model.diffusion); },
                        0.0, hi, 1 << 16));
  }
  if (wants(cfg, "mean")) {
    out.metrics.emplace_back("mean", std::accumulate(y.begin(), y.end(), 0.0) / y.size());
    out.metrics.emplace_back("equilibrium_mean", wealth_eta);
  }
  if (wants(cfg, "histogram")) {
    out.histogram = Histogram::uniform(0.0, 5.0, 100);
    out.histogram.add(y);
  }
  out.metrics.emplace_back("reflections", static_cast<double>(flips));
  return out;
}

ReplicaOutput run_cucker_smale(const RunConfig& cfg, std::size_t r) {
  ReplicaOutput out;
  Streams rng = Streams::for_replica(cfg.seed, r);
  CuckerSmaleModel model{cfg.model.n, cfg.model.kappa, cfg.model.beta};
  ParticleState s = model.initial(cfg.model.dim, rng.init);
  const std::size_t p = cfg.method.kind == MethodKind::direct ? cfg.model.n : cfg.method.p;
  const auto f0 = flocking_functionals(s);
  const std::size_t transient = cfg.run.steps / 20;
  double v_at_transient = f0.v_spread, prev = f0.v_spread, sup_x = f0.x_spread;
  bool monotone = true;
  append_rows(out.trajectory, r, 0, 0.0, s.positions, &*s.velocities);
  for (std::size_t k = 1; k <= cfg.run.steps; ++k) {
    s = cs_rbm_step(model, s, p, cfg.method.dt, rng.division);
    const auto f = flocking_functionals(s);
    if (k == transient) v_at_transient = f.v_spread;
    if (k > transient) monotone = monotone && f.v_spread <= prev;
    prev = f.v_spread;
    sup_x = std::max(sup_x, f.x_spread);
    if (record_now(cfg, k)) append_rows(out.trajectory, r, k, k * cfg.method.dt, s.positions, &*s.velocities);
  }
  const auto f1 = flocking_functionals(s);
  out.metrics.emplace_back("x_spread_initial", f0.x_spread);
  out.metrics.emplace_back("x_spread_final", f1.x_spread);
  out.metrics.emplace_back("x_spread_sup", sup_x);
  out.metrics.emplace_back("v_spread_initial", f0.v_spread);
  out.metrics.emplace_back("v_spread_final", f1.v_spread);
  out.metrics.emplace_back("v_decay_orders", std::log10(v_at_transient / f1.v_spread));
  out.metrics.emplace_back("v_monotone", monotone ? 1.0 : 0.0);
  return out;
}

ReplicaOutput run_consensus(const RunConfig& cfg, std::size_t r) {
  ReplicaOutput out;
  Streams rng = Streams::for_replica(cfg.seed, r);
  const auto& mc = cfg.model;
  Points nu = normal_points(mc.n, mc.dim, rng.init, mc.nu_scale);
  center(nu);
  const auto model = ConsensusModel::with_default_decomposition(nu, mc.kappa);
  Points q = normal_points(mc.n, mc.dim, rng.init);
  center(q);
  const std::size_t p = cfg.method.kind == MethodKind::direct ? mc.n : cfg.method.p;
  const auto f0 = consensus_functionals(q);
  append_rows(out.trajectory, r, 0, 0.0, q, nullptr);
  for (std::size_t k = 1; k <= cfg.run.steps; ++k) {
    q = consensus_rbm_step(model, q, p, cfg.method.dt, rng.division);
    if (record_now(cfg, k)) append_rows(out.trajectory, r, k, k * cfg.method.dt, q, nullptr);
  }
  const auto f1 = consensus_functionals(q);
  out.metrics.emplace_back("m2_initial", f0.m2);
  out.metrics.emplace_back("m2_final", f1.m2);
  out.metrics.emplace_back("diameter_initial", f0.diameter);
  out.metrics.emplace_back("diameter_final", f1.diameter);
  out.metrics.emplace_back("reconstruction_error", model.reconstruction_error());
  return out;
}

// --- second-order models ----------------------------------------------------

Thermostat md_thermostat(const ThermostatConfig& t) {
  switch (t.kind) {
    case ThermostatKind::andersen: return thermostat::Andersen{t.nu, t.temperature};
    case ThermostatKind::langevin: return thermostat::Langevin{t.gamma, 1.0 / t.temperature};
    case ThermostatKind::none: break;
  }
  return std::monostate{};
}

ReplicaOutput run_electrolyte(const RunConfig& cfg, std::size_t r) {
  ReplicaOutput out;
  Streams rng = Streams::for_replica(cfg.seed, r);
  const auto& mc = cfg.model;
  ElectrolyteModel model;
  model.n = mc.n;
  model.box = mc.box;
  model.diameter = mc.diameter;
  model.temperature = mc.temperature;
  model.lj_cutoff = mc.lj_cutoff;
  model.real_cutoff = mc.r_cut;
  MdState md{model.build(rng.init), {}, false, 0};
  if (!mc.charges.empty()) md.system.charges = mc.charges;
  auto opt = model.md_options(std::max<std::size_t>(cfg.method.p, 1), cfg.method.dt,
                              cfg.method.kind == MethodKind::direct ? FourierMode::exact : FourierMode::rbe);
  opt.thermostat = md_thermostat(cfg.thermostat);
  KSampleBank bank(opt.params.alpha, model.box, 100000, rng.init.substream(1));
  if (wants(cfg, "radial_charge")) {
    out.radial.emplace(std::min(4.0, 0.49 * model.box), 0.25, true);
  }
  double u_real = 0.0, u_fourier = 0.0, u_self = 0.0, kin = 0.0, max_dp = 0.0;
  std::size_t samples = 0;
  const bool energy = wants(cfg, "energy");
  append_rows(out.trajectory, r, 0, 0.0, md.system.state.positions, &*md.system.state.velocities);
  for (std::size_t k = 1; k <= cfg.run.steps; ++k) {
    MdStepInfo info;
    rbe_md_step(md, opt, bank, rng, &info);
    const auto& dp = info.momentum_change;
    max_dp = std::max(max_dp, std::sqrt(dp[0] * dp[0] + dp[1] * dp[1] + dp[2] * dp[2]));
    if (sample_now(cfg, k)) {
      if (energy) {
        const auto u = ewald_energy_terms(md.system, opt.params);
        u_real += u.real;
        u_fourier += u.fourier;
        u_self += u.self;
      }
      kin += kinetic_energy(md.system.state);
      if (out.radial) out.radial->accumulate(md.system);
      ++samples;
    }
    if (record_now(cfg, k)) {
      append_rows(out.trajectory, r, k, k * cfg.method.dt, md.system.state.positions,
                  &*md.system.state.velocities);
    }
  }
  const double ns = static_cast<double>(std::max<std::size_t>(samples, 1));
  if (energy) {
    out.metrics.emplace_back("u_real", u_real / ns);
    out.metrics.emplace_back("u_fourier", u_fourier / ns);
    out.metrics.emplace_back("u_self", u_self / ns);
    out.metrics.emplace_back("u1", (u_fourier + u_self) / ns);
  }
  if (wants(cfg, "temperature")) {
    out.metrics.emplace_back("temperature", 2.0 * kin / (3.0 * ns * static_cast<double>(model.n)));
  }
  if (wants(cfg, "momentum")) out.metrics.emplace_back("max_momentum_change", max_dp);
  if (out.radial) {
    const auto fit = out.radial->fit(0.5, 2.5);
    out.metrics.emplace_back("dh_slope", fit.slope);
    out.metrics.emplace_back("dh_intercept", fit.intercept);
  }
  out.metrics.emplace_back("samples", static_cast<double>(samples));
  return out;
}

ParticleState lattice_state(const ModelConfig& m, RngStream& rng) {
  const auto side = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(m.n)) - 1e-9));
  const double a = m.box / static_cast<double>(side);
  Points x(m.n, 3), v(m.n, 3);
  for (std::size_t i = 0; i < m.n; ++i) {
    x[i][0] = (static_cast<double>(i % side) + 0.5) * a;
    x[i][1] = (static_cast<double>((i / side) % side) + 0.5) * a;
    x[i][2] = (static_cast<double>(i / (side * side)) + 0.5) * a;
  }
  const double sd = std::sqrt(m.temperature);
  for (double& c : v.flat()) c = sd * rng.normal();
  center(v);
  return ParticleState(x, v, m.box);
}

ReplicaOutput run_lj_fluid(const RunConfig& cfg, std::size_t r) {
  ReplicaOutput out;
  Streams rng = Streams::for_replica(cfg.seed, r);
  const auto& mc = cfg.model;
  SecondOrderSystem sys;
  sys.kernel = kernels::lennard_jones(mc.epsilon, mc.diameter, mc.split);
  sys.alpha_n = 1.0;
  if (cfg.thermostat.kind == ThermostatKind::langevin) {
    sys.gamma = cfg.thermostat.gamma;
    sys.sigma = SecondOrderSystem::fd_sigma(sys.gamma, 1.0 / cfg.thermostat.temperature);
  }
  ParticleState s = lattice_state(mc, rng.init);
  double kin = 0.0;
  std::size_t samples = 0;
  append_rows(out.trajectory, r, 0, 0.0, s.positions, &*s.velocities);
  for (std::size_t k = 1; k <= cfg.run.steps; ++k) {
    switch (cfg.method.kind) {
      case MethodKind::direct: s = direct_step(s, sys, cfg.method.dt, rng); break;
      case MethodKind::rbm: s = rbm_step_second_order(s, sys, cfg.method.p, cfg.method.dt, rng); break;
      default: s = rbm_split_step(s, sys, cfg.method.p, cfg.method.dt, rng); break;
    }
    if (cfg.thermostat.kind == ThermostatKind::andersen) {
      s = apply_andersen(s, cfg.thermostat.nu, cfg.thermostat.temperature, cfg.method.dt, rng.thermostat);
    }
    if (sample_now(cfg, k)) {
      kin += kinetic_energy(s);
      ++samples;
    }
    if (record_now(cfg, k)) append_rows(out.trajectory, r, k, k * cfg.method.dt, s.positions, &*s.velocities);
  }
  if (wants(cfg, "temperature")) {
    out.metrics.emplace_back("temperature",
                             2.0 * kin / (3.0 * std::max<std::size_t>(samples, 1) * static_cast<double>(mc.n)));
  }
  if (wants(cfg, "momentum")) {
    double p[3] = {0, 0, 0};
    for (std::size_t i = 0; i < mc.n; ++i) {
      for (int c = 0; c < 3; ++c) p[c] += (*s.velocities)[i][c];
    }
    out.metrics.emplace_back("total_momentum", std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
  }
  return out;
}

ReplicaOutput run_gaussian_target(const RunConfig& cfg, std::size_t r) {
  ReplicaOutput out;
  Streams rng = Streams::for_replica(cfg.seed, r);
  const auto& mc = cfg.model;
  const double mean = mc.mean, var = mc.variance;
  SvgdState s{normal_points(mc.n, mc.dim, rng.init, mc.init_scale, mc.init_mean),
              SvgdKernel::gaussian(mc.bandwidth),
              [mean, var](std::span<const double> x, std::span<double> g) {
                for (std::size_t k = 0; k < x.size(); ++k) g[k] = (x[k] - mean) / var;
              }};
  const std::size_t p = cfg.method.kind == MethodKind::direct ? mc.n : cfg.method.p;
  SvgdSchedule schedule = SvgdSchedule::constant(cfg.method.dt);
  if (cfg.method.schedule == "inverse") schedule = SvgdSchedule::inverse(cfg.method.dt, cfg.method.schedule_k0);
  if (cfg.method.schedule == "adagrad") schedule = SvgdSchedule::adagrad(cfg.method.dt);
  append_rows(out.trajectory, r, 0, 0.0, s.particles, nullptr);
  for (std::size_t k = 1; k <= cfg.run.steps; ++k) {
    if (cfg.method.schedule == "constant") {
      rbm_svgd_step(s, p, cfg.method.dt, rng.division);
    } else {
      rbm_svgd_step(s, p, schedule, k, rng.division);
    }
    if (record_now(cfg, k)) append_rows(out.trajectory, r, k, static_cast<double>(k), s.particles, nullptr);
  }
  if (wants(cfg, "moments")) add_moments(out.metrics, s.particles);
  return out;
}

ReplicaOutput run_replica(const RunConfig& cfg, std::size_t r) {
  switch (cfg.model.kind) {
    case ModelKind::toy: return run_toy(cfg, r);
    case ModelKind::dyson: return run_dyson(cfg, r);
    case ModelKind::wealth: return run_wealth(cfg, r);
    case ModelKind::cucker_smale: return run_cucker_smale(cfg, r);
    case ModelKind::consensus: return run_consensus(cfg, r);
    case ModelKind::electrolyte: return run_electrolyte(cfg, r);
    case ModelKind::lj_fluid: return run_lj_fluid(cfg, r);
    case ModelKind::gaussian_target: return run_gaussian_target(cfg, r);
  }
  throw std::logic_error("unknown model");
}

nlohmann::ordered_json header(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["tool"] = "rbmsim";
  j["version"] = tool_version;
  j["format"] = output_format_version;
  j["run_id"] = cfg.run_id();
  j["model"] = to_string(cfg.model.kind);
  j["method"] = to_string(cfg.method.kind);
  j["seed"] = cfg.seed;
  j["replicas"] = cfg.replicas;
  j["rng"] = {{"generator", "mt19937_64"},
              {"streams", {"division", "noise", "thermostat", "init"}},
              {"replica_stream_ids", "8 r + {0, 1, 2, 3}"}};
  return j;
}

}  // namespace

RunOutput execute(const RunConfig& cfg) {
  std::vector<ReplicaOutput> reps(cfg.replicas);
  std::vector<std::exception_ptr> errors(cfg.replicas);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < cfg.replicas; r = next++) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        reps[r] = run_replica(cfg, r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
      reps[r].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const std::size_t nthreads = std::min(cfg.threads, cfg.replicas);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  RunOutput out;
  out.metrics = header(cfg);
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < reps[0].metrics.size(); ++k) {
    const auto& name = reps[0].metrics[k].first;
    std::vector<double> values;
    for (const auto& rep : reps) values.push_back(rep.metrics.at(k).second);
    for (double v : values) {
      if (!std::isfinite(v)) throw std::runtime_error("diagnostic '" + name + "' is not finite");
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    metrics[name] = {{"mean", mean}, {"replicas", values}};
  }
  out.metrics["metrics"] = metrics;
  out.metrics["diagnostics"] = cfg.diagnostics;

  const bool velocities = cfg.model.kind == ModelKind::cucker_smale ||
                          cfg.model.kind == ModelKind::electrolyte || cfg.model.kind == ModelKind::lj_fluid;
  out.trajectory_csv = trajectory_header(cfg.model.dim, velocities);
  for (const auto& rep : reps) out.trajectory_csv += rep.trajectory;

  if (wants(cfg, "histogram")) {
    Histogram h = reps[0].histogram;
    for (std::size_t r = 1; r < reps.size(); ++r) {
      for (std::size_t b = 0; b < h.bins(); ++b) h.counts[b] += reps[r].histogram.counts[b];
      h.outside += reps[r].histogram.outside;
    }
    std::ostringstream os;
    os.precision(17);
    h.write_csv(os);
    out.extra_files["histogram.csv"] = os.str();
  }
  if (reps[0].radial) {
    std::ostringstream os;
    os.precision(17);
    reps[0].radial->write_csv(os);
    out.extra_files["radial.csv"] = os.str();
  }
  out.log.push_back("rbmsim " + std::string(tool_version) + " run " + cfg.run_id());
  out.log.push_back("model " + to_string(cfg.model.kind) + ", method " + to_string(cfg.method.kind) +
                    ", N " + std::to_string(cfg.model.n) + ", steps " + std::to_string(cfg.run.steps));
  for (std::size_t r = 0; r < reps.size(); ++r) {
    std::ostringstream os;
    os << "replica " << r << " finished in " << reps[r].seconds << " s";
    out.log.push_back(os.str());
  }
  return out;
}

RunOutput execute_bench(const RunConfig& cfg) {
  RunOutput out;
  out.metrics = header(cfg);
  BenchOptions opt;
  opt.p = cfg.bench.p;
  opt.dt = cfg.bench.dt;
  opt.min_seconds = cfg.bench.min_seconds;
  opt.repeats = cfg.bench.repeats;
  opt.seed = cfg.seed;
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  std::string csv = "method,n,seconds_per_step,steps\n";
  for (const auto& name : cfg.bench.methods) {
    const auto method = name == "direct" ? BenchMethod::direct : BenchMethod::rbm;
    const auto rows = scaling_benchmark(method, cfg.bench.sizes, opt);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      nlohmann::ordered_json row{{"method", name}, {"n", rows[k].n},
                                 {"seconds_per_step", rows[k].seconds_per_step}, {"steps", rows[k].steps}};
      if (k > 0) row["ratio_to_previous"] = rows[k].seconds_per_step / rows[k - 1].seconds_per_step;
      table.push_back(row);
      std::ostringstream os;
      os.precision(9);
      os << name << ',' << rows[k].n << ',' << rows[k].seconds_per_step << ',' << rows[k].steps << '\n';
      csv += os.str();
    }
  }
  out.metrics["bench"] = table;
  out.extra_files["bench.csv"] = csv;
  out.log.push_back("rbmsim " + std::string(tool_version) + " bench " + cfg.run_id());
  return out;
}

std::filesystem::path write_output(const RunConfig& cfg, const RunOutput& out) {
  const std::string id = out.metrics.contains("bench") ? cfg.run_id() + "-bench" : cfg.run_id();
  const std::filesystem::path dir = std::filesystem::path(cfg.output) / id;
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << text;
  };
  write("config.resolved", resolved_text(cfg));
  if (!out.trajectory_csv.empty()) write("trajectory.csv", out.trajectory_csv);
  write("metrics.json", out.metrics.dump(2) + "\n");
  std::string log;
  for (const auto& line : out.log) log += line + "\n";
  write("log.txt", log);
  for (const auto& [name, text] : out.extra_files) write(name, text);
  return dir;
}

nlohmann::ordered_json error_json(const std::string& kind, const std::string& message,
                                  const std::string& field, int line) {
  nlohmann::ordered_json e{{"kind", kind}, {"message", message}};
  if (!field.empty()) e["field"] = field;
  if (line > 0) e["line"] = line;
  e["version"] = tool_version;
  return {{"error", e}};
}

}  // namespace rbmsim
