#include "rbm/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rbm {

void GibbsTarget::validate() const {
  if (n == 0) throw std::invalid_argument("Gibbs target needs at least one particle");
  if (dim == 0) throw std::invalid_argument("Gibbs target dimension must be >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("Gibbs target needs beta > 0");
  if (!(w > 0.0)) throw std::invalid_argument("Gibbs target needs w > 0");
  if (!(phi2_range > 0.0)) throw std::invalid_argument("phi2 range must be positive");
}

struct ProposalWorkspace {
  std::vector<double> drift, g;
  std::vector<std::size_t> batch;
};

namespace {

// k distinct indices from {0..n-1} \ {skip} (Floyd), unordered.
void sample_others(std::size_t n, std::size_t skip, std::size_t k, RngStream& rng,
                   std::vector<std::size_t>& out) {
  out.clear();
  const std::size_t m = n - 1;
  for (std::size_t j = m - k; j < m; ++j) {
    const std::size_t t = rng.index(j + 1);
    if (std::find(out.begin(), out.end(), t) == out.end()) {
      out.push_back(t);
    } else {
      out.push_back(j);
    }
  }
  for (std::size_t& v : out) {
    if (v >= skip) ++v;
  }
}

double distance(std::span<const double> a, std::span<const double> b) {
  double r2 = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = a[c] - b[c];
    r2 += d * d;
  }
  return std::sqrt(r2);
}

void propose_into(std::size_t i, const Points& config, const GibbsTarget& target, std::size_t m,
                  std::size_t p, double dt, RngStream& rng, const ProposalOptions& opt,
                  ProposalWorkspace& ws, std::vector<double>& r) {
  const std::size_t n = config.size(), d = config.dim();
  if (i >= n) throw std::out_of_range("particle index out of range");
  if (m < 1) throw std::invalid_argument("RBMC needs at least one inner step");
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (n > 1 && !opt.full_batch && (p < 2 || p > n)) {
    throw std::invalid_argument("batch size must satisfy 2 <= p <= N (got " + std::to_string(p) +
                                ")");
  }
  // N - 1 normalises the mean-field scaling; a lone particle uses 1.
  const double nm1 = static_cast<double>(std::max<std::size_t>(n, 2) - 1);
  const double vscale = 1.0 / (target.w * nm1);
  const double noise = opt.noise ? std::sqrt(2.0 * dt / (nm1 * target.w * target.w * target.beta))
                                 : 0.0;
  r.assign(config[i].begin(), config[i].end());
  ws.drift.resize(d);
  ws.g.resize(d);
  auto& drift = ws.drift;
  auto& g = ws.g;
  auto& batch = ws.batch;
  const bool interact = n > 1 && static_cast<bool>(target.phi1_derivative);
  for (std::size_t k = 0; k < m; ++k) {
    if (target.grad_potential) {
      target.grad_potential(r, g);
      for (std::size_t c = 0; c < d; ++c) drift[c] = g[c] * vscale;
    } else {
      std::fill(drift.begin(), drift.end(), 0.0);
    }
    if (interact) {
      double bscale;
      if (opt.full_batch) {
        batch.clear();
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i) batch.push_back(j);
        }
        bscale = 1.0 / nm1;
      } else {
        sample_others(n, i, p - 1, rng, batch);
        bscale = 1.0 / static_cast<double>(p - 1);
      }
      for (std::size_t j : batch) {
        const auto xj = config[j];
        const double dist = distance(r, xj);
        if (dist == 0.0) continue;  // smooth phi1 has zero gradient at the origin
        const double f = target.phi1_derivative(dist) / dist * bscale;
        for (std::size_t c = 0; c < d; ++c) drift[c] += f * (r[c] - xj[c]);
      }
    }
    for (std::size_t c = 0; c < d; ++c) {
      r[c] -= dt * drift[c];
      if (noise != 0.0) r[c] += noise * rng.normal();
    }
  }
}

}  // namespace

std::vector<double> rbmc_propose(std::size_t i, const Points& config, const GibbsTarget& target,
                                 std::size_t m, std::size_t p, double dt, RngStream& rng,
                                 const ProposalOptions& opt) {
  ProposalWorkspace ws;
  std::vector<double> r;
  propose_into(i, config, target, m, p, dt, rng, opt, ws, r);
  return r;
}

double rbmc_phi2_delta(std::size_t i, std::span<const double> old_pos,
                       std::span<const double> candidate, const Points& config,
                       const GibbsTarget& target, const SpatialHash* grid) {
  if (!target.phi2) return 0.0;
  const double range = target.phi2_range;
  double delta = 0.0;
  if (grid) {
    // the hash cell equals the range, so each sum only needs neighbouring cells
    grid->for_each_candidate(candidate, i, [&](std::size_t j) {
      const double r = distance(candidate, config[j]);
      if (r < range) delta += target.phi2(r);
    });
    grid->for_each_candidate(old_pos, i, [&](std::size_t j) {
      const double r = distance(old_pos, config[j]);
      if (r < range) delta -= target.phi2(r);
    });
  } else {
    for (std::size_t j = 0; j < config.size(); ++j) {
      if (j == i) continue;
      const double rn = distance(candidate, config[j]);
      const double ro = distance(old_pos, config[j]);
      if (rn < range) delta += target.phi2(rn);
      if (ro < range) delta -= target.phi2(ro);
    }
  }
  const double out = target.beta * target.w * target.w * delta;
  return std::isnan(out) ? std::numeric_limits<double>::infinity() : out;
}

bool rbmc_accept(std::size_t i, std::span<const double> old_pos,
                 std::span<const double> candidate, const Points& config,
                 const GibbsTarget& target, RngStream& rng, const SpatialHash* grid) {
  const double delta = rbmc_phi2_delta(i, old_pos, candidate, config, target, grid);
  if (delta <= 0.0) return true;
  if (!std::isfinite(delta)) return false;
  return rng.uniform() < std::exp(-delta);
}

void rbmc_step(Points& config, const GibbsTarget& target, std::size_t m, std::size_t p,
               double dt, RngStream& rng, McStats& stats, const ProposalOptions& opt) {
  const std::size_t i = rng.index(config.size());
  const auto cand = rbmc_propose(i, config, target, m, p, dt, rng, opt);
  ++stats.proposals;
  if (!std::all_of(cand.begin(), cand.end(), [](double v) { return std::isfinite(v); })) {
    ++stats.nonfinite;
    return;
  }
  if (rbmc_accept(i, config[i], cand, config, target, rng)) {
    ++stats.accepted;
    std::copy(cand.begin(), cand.end(), config[i].begin());
  }
}

// ---------------------------------------------------------------------------

RbmcChain::RbmcChain(GibbsTarget target, Points initial, std::size_t m, std::size_t p,
                     StepSchedule schedule, RngStream rng, ProposalOptions opt)
    : target_(std::move(target)),
      x_(std::move(initial)),
      m_(m),
      p_(p),
      schedule_(schedule),
      rng_(std::move(rng)),
      opt_(opt),
      ws_(std::make_shared<ProposalWorkspace>()) {
  target_.validate();
  if (x_.size() != target_.n || x_.dim() != target_.dim) {
    throw std::invalid_argument("initial configuration does not match the target's N and d");
  }
  if (!x_.all_finite()) throw std::invalid_argument("initial configuration is not finite");
  if (m_ < 1) throw std::invalid_argument("RBMC needs at least one inner step");
  if (target_.n > 1 && !opt_.full_batch && (p_ < 2 || p_ > target_.n)) {
    throw std::invalid_argument("batch size must satisfy 2 <= p <= N (got " + std::to_string(p_) +
                                ")");
  }
  if (target_.phi2 && std::isfinite(target_.phi2_range) && target_.dim <= 3) {
    grid_ = std::make_unique<SpatialHash>(x_, target_.phi2_range);
  }
}

void RbmcChain::step() {
  ++iter_;
  const std::size_t i = rng_.index(x_.size());
  const double dt = schedule_.at(iter_);
  propose_into(i, x_, target_, m_, p_, dt, rng_, opt_, *ws_, cand_);
  ++stats_.proposals;
  if (!std::all_of(cand_.begin(), cand_.end(), [](double v) { return std::isfinite(v); })) {
    ++stats_.nonfinite;
    return;
  }
  if (rbmc_accept(i, x_[i], cand_, x_, target_, rng_, grid_.get())) {
    ++stats_.accepted;
    if (grid_) grid_->move(i, x_[i], cand_);
    std::copy(cand_.begin(), cand_.end(), x_[i].begin());
  }
}

void RbmcChain::sweep() {
  for (std::size_t k = 0; k < x_.size(); ++k) step();
}

double RbmcChain::energy() const {
  const std::size_t n = x_.size();
  double h = 0.0;
  if (target_.potential) {
    for (std::size_t i = 0; i < n; ++i) h += target_.w * target_.potential(x_[i]);
  }
  const double w2 = target_.w * target_.w;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = distance(x_[i], x_[j]);
      if (target_.phi1) h += w2 * target_.phi1(r);
      if (target_.phi2 && r < target_.phi2_range) h += w2 * target_.phi2(r);
    }
  }
  return h;
}

}  // namespace rbm
