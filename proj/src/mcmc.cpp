#include "amv/mcmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>

namespace amv {

FbmStatePreconditioner::FbmStatePreconditioner(PixelGrid grid, int channels, double hurst)
    : grid_(grid), channels_(channels), hurst_(hurst) {
  if (!(hurst > 0.0)) throw std::invalid_argument("Hurst exponent must be positive");
}

Eigen::VectorXd FbmStatePreconditioner::apply(const Eigen::VectorXd& v,
                                              double exponent) const {
  const int m = grid_.pixels();
  if (v.size() != static_cast<Eigen::Index>(2 + channels_) * m) {
    throw std::invalid_argument("preconditioner: size mismatch");
  }
  Eigen::VectorXd out = v;
  out.segment(0, m) = fractional_apply(v.segment(0, m), exponent, grid_);
  out.segment(m, m) = fractional_apply(v.segment(m, m), exponent, grid_);
  return out;
}

Eigen::VectorXd FbmStatePreconditioner::cov(const Eigen::VectorXd& v) const {
  return apply(v, -(hurst_ + 1.0));
}
Eigen::VectorXd FbmStatePreconditioner::prec(const Eigen::VectorXd& v) const {
  return apply(v, hurst_ + 1.0);
}
Eigen::VectorXd FbmStatePreconditioner::sqrt_fwd(const Eigen::VectorXd& v) const {
  return apply(v, -0.5 * (hurst_ + 1.0));
}
Eigen::VectorXd FbmStatePreconditioner::sqrt_inv(const Eigen::VectorXd& v) const {
  return apply(v, 0.5 * (hurst_ + 1.0));
}

SamplerKind parse_sampler_kind(const std::string& name) {
  if (name == "rw") return SamplerKind::rw;
  if (name == "prw") return SamplerKind::precond_rw;
  if (name == "mala") return SamplerKind::mala;
  if (name == "hmc") return SamplerKind::hmc;
  throw std::invalid_argument("unknown sampler '" + name + "'");
}

std::string sampler_kind_name(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::rw: return "rw";
    case SamplerKind::precond_rw: return "prw";
    case SamplerKind::mala: return "mala";
    case SamplerKind::hmc: return "hmc";
  }
  return "?";
}

void ChainConfig::validate() const {
  if (!(step > 0.0)) throw std::invalid_argument("step size must be positive");
  if (leapfrog < 1) throw std::invalid_argument("leapfrog count must be at least 1");
  if (iterations < 1) throw std::invalid_argument("iteration count must be at least 1");
  if (!(zeta > 0.0) || zeta > 1.0) throw std::invalid_argument("zeta must lie in (0, 1]");
  if (thinning < 1) throw std::invalid_argument("thinning stride must be at least 1");
}

double ChainConfig::effective_step() const {
  return kind == SamplerKind::hmc ? step * std::sqrt(zeta) : step * zeta;
}

long ChainConfig::resolved_burn_in() const {
  return burn_in >= 0 ? burn_in : iterations / 10;
}

bool mh_accept(Rng& rng, double log_ratio) {
  // Always consumes exactly one uniform so decision streams stay aligned
  // across samplers sharing an RNG.
  const double u = rng.uniform();
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  return std::log(u) < log_ratio;
}

Eigen::VectorXd rw_propose(Rng& rng, const Eigen::VectorXd& x, double dt,
                           const Preconditioner& pre, bool preconditioned) {
  Eigen::VectorXd noise = rng.normal_vector(x.size());
  if (preconditioned) noise = pre.sqrt_fwd(noise);
  return x + std::sqrt(dt) * noise;
}

StepOutcome rw_step(Rng& rng, ChainState& state, const Target& target,
                    const Preconditioner& pre, double dt, bool preconditioned) {
  StepOutcome out;
  const Eigen::VectorXd proposal = rw_propose(rng, state.position, dt, pre, preconditioned);
  const double e_new = target.energy(proposal);
  out.log_ratio = state.energy - e_new;
  if (!std::isfinite(e_new)) out.log_ratio = std::numeric_limits<double>::quiet_NaN();
  ++state.proposed;
  if (mh_accept(rng, out.log_ratio)) {
    state.position = proposal;
    state.energy = e_new;
    ++state.accepted;
    out.accepted = true;
  } else if (std::isnan(out.log_ratio)) {
    ++state.numerical_rejections;
  }
  return out;
}

StepOutcome mala_step(Rng& rng, ChainState& state, const Target& target,
                      const Preconditioner& pre, double dt) {
  StepOutcome out;
  const Eigen::Index n = state.position.size();
  const Eigen::VectorXd cov_grad = pre.cov(state.gradient);
  const Eigen::VectorXd proposal = state.position - 0.5 * dt * cov_grad +
                                   std::sqrt(dt) * pre.sqrt_fwd(rng.normal_vector(n));
  const auto [e_new, g_new] = target.energy_and_gradient(proposal);
  ++state.proposed;
  if (!std::isfinite(e_new)) {
    out.log_ratio = std::numeric_limits<double>::quiet_NaN();
    ++state.numerical_rejections;
    mh_accept(rng, out.log_ratio);
    return out;
  }
  // w = theta' - theta + (dt/2) Sigma grad U(theta); w~ subtracts the averaged drift.
  const Eigen::VectorXd w = proposal - state.position + 0.5 * dt * cov_grad;
  const Eigen::VectorXd w_tilde = w - 0.5 * dt * (cov_grad + pre.cov(g_new));
  out.log_ratio = state.energy - e_new +
                  (w.dot(pre.prec(w)) - w_tilde.dot(pre.prec(w_tilde))) / (2.0 * dt);
  if (mh_accept(rng, out.log_ratio)) {
    state.position = proposal;
    state.energy = e_new;
    state.gradient = g_new;
    ++state.accepted;
    out.accepted = true;
  }
  return out;
}

StepOutcome hmc_step(Rng& rng, ChainState& state, const Target& target,
                     const Preconditioner& pre, double dt, int leapfrog) {
  StepOutcome out;
  const Eigen::Index n = state.position.size();
  Eigen::VectorXd momentum = pre.sqrt_inv(rng.normal_vector(n));
  const double kinetic0 = 0.5 * momentum.dot(pre.cov(momentum));

  Eigen::VectorXd position = state.position;
  Eigen::VectorXd grad = state.gradient;
  double energy = state.energy;
  bool divergent = false;
  for (int l = 0; l < leapfrog; ++l) {
    position += -0.5 * dt * dt * pre.cov(grad) + dt * pre.cov(momentum);
    const auto [e_new, g_new] = target.energy_and_gradient(position);
    if (!std::isfinite(e_new)) {
      divergent = true;
      break;
    }
    momentum -= 0.5 * dt * (grad + g_new);
    grad = g_new;
    energy = e_new;
  }

  ++state.proposed;
  if (divergent) {
    out.log_ratio = std::numeric_limits<double>::quiet_NaN();
    ++state.numerical_rejections;
    mh_accept(rng, out.log_ratio);
    return out;
  }
  const double kinetic1 = 0.5 * momentum.dot(pre.cov(momentum));
  out.log_ratio = state.energy - energy + kinetic0 - kinetic1;
  if (std::abs(out.log_ratio) > 1000.0) {  // divergent trajectory
    ++state.numerical_rejections;
    mh_accept(rng, std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  if (mh_accept(rng, out.log_ratio)) {
    state.position = std::move(position);
    state.energy = energy;
    state.gradient = std::move(grad);
    ++state.accepted;
    out.accepted = true;
  }
  return out;
}

PosteriorTarget::PosteriorTarget(const ObservationSet& y, const ModelParams& params)
    : y_(y), params_(params) {
  params_.validate();
}

StateVector PosteriorTarget::to_state(const Eigen::VectorXd& x) const {
  StateVector theta = make_state(y_.grid(), y_.channels());
  theta.values = x;
  return theta;
}

double PosteriorTarget::energy(const Eigen::VectorXd& x) const {
  return gibbs_energy(to_state(x), y_, params_).total / params_.zeta;
}

Eigen::VectorXd PosteriorTarget::gradient(const Eigen::VectorXd& x) const {
  return energy_and_gradient(x).second;
}

std::pair<double, Eigen::VectorXd> PosteriorTarget::energy_and_gradient(
    const Eigen::VectorXd& x) const {
  auto [e, g] = amv::energy_and_gradient(to_state(x), y_, params_);
  g.values /= params_.zeta;
  return {e.total / params_.zeta, std::move(g.values)};
}

namespace {

struct Accumulator {
  PixelGrid grid;
  int channels = 0;
  double zeta = 1.0;
  long count = 0;
  Eigen::VectorXd sum;
  Eigen::VectorXd sum_sq;
  bool storing = false;
  Eigen::MatrixXd stored;  // column per recorded sample

  void init(const PixelGrid& g, int k, double z, long planned, long max_bytes) {
    grid = g;
    channels = k;
    zeta = z;
    const Eigen::Index n = static_cast<Eigen::Index>(2 + k) * g.pixels();
    sum = Eigen::VectorXd::Zero(n);
    sum_sq = Eigen::VectorXd::Zero(n);
    storing = planned * n * static_cast<long>(sizeof(double)) <= max_bytes;
    if (storing) stored.resize(n, planned);
  }

  void record(const Eigen::VectorXd& x) {
    sum += x;
    sum_sq += x.cwiseAbs2();
    if (storing) stored.col(count) = x;
    ++count;
  }
};

ExpectedErrorMap jensen_map_displacement(const Accumulator& acc) {
  const int m = acc.grid.pixels();
  ExpectedErrorMap map;
  map.grid = acc.grid;
  map.ell = 2;
  map.value.resize(m);
  const double n = static_cast<double>(acc.count);
  const double scale = 1.0 / (n * std::sqrt(acc.zeta));
  for (int s = 0; s < m; ++s) {
    const double ssq = acc.sum_sq[s] + acc.sum_sq[m + s];
    const double sq = acc.sum[s] * acc.sum[s] + acc.sum[m + s] * acc.sum[m + s];
    map.value[s] = scale * std::sqrt(std::max(0.0, n * ssq - sq));
  }
  return map;
}

ExpectedErrorMap jensen_map_image(const Accumulator& acc, int channel) {
  const int m = acc.grid.pixels();
  const int off = (2 + channel) * m;
  ExpectedErrorMap map;
  map.grid = acc.grid;
  map.ell = 1;
  map.value.resize(m);
  const double n = static_cast<double>(acc.count);
  const double scale = 1.0 / (n * std::sqrt(acc.zeta));
  for (int s = 0; s < m; ++s) {
    const double ssq = acc.sum_sq[off + s];
    const double sq = acc.sum[off + s] * acc.sum[off + s];
    map.value[s] = scale * std::sqrt(std::max(0.0, n * ssq - sq));
  }
  return map;
}

ExpectedErrorMap two_pass_map_displacement(const Accumulator& acc,
                                           const Eigen::VectorXd& mean) {
  const int m = acc.grid.pixels();
  ExpectedErrorMap map;
  map.grid = acc.grid;
  map.ell = 2;
  map.value = Eigen::VectorXd::Zero(m);
  for (long i = 0; i < acc.count; ++i) {
    for (int s = 0; s < m; ++s) {
      const double e1 = acc.stored(s, i) - mean[s];
      const double e2 = acc.stored(m + s, i) - mean[m + s];
      map.value[s] += std::sqrt(e1 * e1 + e2 * e2);
    }
  }
  map.value /= static_cast<double>(acc.count) * std::sqrt(acc.zeta);
  return map;
}

ExpectedErrorMap two_pass_map_image(const Accumulator& acc, const Eigen::VectorXd& mean,
                                    int channel) {
  const int m = acc.grid.pixels();
  const int off = (2 + channel) * m;
  ExpectedErrorMap map;
  map.grid = acc.grid;
  map.ell = 1;
  map.value = Eigen::VectorXd::Zero(m);
  for (long i = 0; i < acc.count; ++i) {
    for (int s = 0; s < m; ++s) {
      map.value[s] += std::abs(acc.stored(off + s, i) - mean[off + s]);
    }
  }
  map.value /= static_cast<double>(acc.count) * std::sqrt(acc.zeta);
  return map;
}

SampleSummary summarize(const Accumulator& acc) {
  SampleSummary summary;
  summary.zeta = acc.zeta;
  summary.samples = acc.count;
  summary.mean = make_state(acc.grid, acc.channels);
  summary.mean.values = acc.sum / static_cast<double>(acc.count);
  summary.jensen_displacement = jensen_map_displacement(acc);
  for (int c = 0; c < acc.channels; ++c) {
    summary.jensen_image.push_back(jensen_map_image(acc, c));
  }
  summary.two_pass = acc.storing;
  if (acc.storing) {
    summary.err_displacement = two_pass_map_displacement(acc, summary.mean.values);
    for (int c = 0; c < acc.channels; ++c) {
      summary.err_image.push_back(two_pass_map_image(acc, summary.mean.values, c));
    }
  } else {
    summary.err_displacement = summary.jensen_displacement;
    summary.err_image = summary.jensen_image;
  }
  return summary;
}

StepOutcome advance(Rng& rng, ChainState& state, const Target& target,
                    const Preconditioner& pre, const ChainConfig& config) {
  const double dt = config.effective_step();
  switch (config.kind) {
    case SamplerKind::rw:
      return rw_step(rng, state, target, pre, dt, false);
    case SamplerKind::precond_rw:
      return rw_step(rng, state, target, pre, dt, true);
    case SamplerKind::mala:
      return mala_step(rng, state, target, pre, dt);
    case SamplerKind::hmc:
      return hmc_step(rng, state, target, pre, dt, config.leapfrog);
  }
  throw std::logic_error("unreachable sampler kind");
}

std::unique_ptr<Preconditioner> make_preconditioner(const ChainConfig& config,
                                                    const PixelGrid& grid, int channels) {
  if (config.hurst_precond) {
    return std::make_unique<FbmStatePreconditioner>(grid, channels, *config.hurst_precond);
  }
  return std::make_unique<IdentityPreconditioner>();
}

SampleSummary run_one_chain(const Target& target, const ChainConfig& config,
                            const StateVector& init, std::uint64_t chain_stream) {
  config.validate();
  const PixelGrid grid = init.grid;
  const int k = init.channels;
  const auto pre = make_preconditioner(config, grid, k);
  Rng rng = Rng(config.seed).fork(chain_stream);

  ChainState state;
  state.position = init.values;
  std::tie(state.energy, state.gradient) = target.energy_and_gradient(state.position);
  if (!std::isfinite(state.energy)) {
    throw std::invalid_argument("run_chain: initial energy is not finite");
  }

  const long burn = config.resolved_burn_in();
  const long keep = (config.iterations + config.thinning - 1) / config.thinning;
  Accumulator acc;
  acc.init(grid, k, config.zeta, keep, config.max_store_bytes);

  const long check_stride = std::max<long>(1, (burn + config.iterations) / 8);
  for (long it = 0; it < burn + config.iterations; ++it) {
    advance(rng, state, target, *pre, config);
    if (it >= burn && (it - burn) % config.thinning == 0) acc.record(state.position);
    if ((it + 1) % check_stride == 0) {
      const double recomputed = target.energy(state.position);
      if (std::abs(recomputed - state.energy) >
          1e-9 * std::max(1.0, std::abs(recomputed))) {
        throw std::runtime_error("run_chain: cached energy drifted from recomputation");
      }
    }
  }

  SampleSummary summary = summarize(acc);
  summary.acceptance =
      state.proposed > 0 ? static_cast<double>(state.accepted) / state.proposed : 0.0;
  summary.numerical_rejections = state.numerical_rejections;
  return summary;
}

}  // namespace

SampleSummary run_state_chain(const Target& target, const ChainConfig& config,
                              const StateVector& init) {
  return run_one_chain(target, config, init, 0);
}

SampleSummary run_chain(const ObservationSet& y, const ModelParams& params,
                        const ChainConfig& config, const StateVector& init) {
  ChainConfig cfg = config;
  cfg.zeta = params.zeta;
  PosteriorTarget target(y, params);
  return run_state_chain(target, cfg, init);
}

int thread_budget() {
  int budget = static_cast<int>(std::thread::hardware_concurrency());
  if (budget < 1) budget = 1;
  if (const char* cap = std::getenv("AMV_THREADS")) {
    const int parsed = std::atoi(cap);
    if (parsed > 0) budget = std::min(budget, parsed);
  }
  return budget;
}

SampleSummary run_chains(const ObservationSet& y, const ModelParams& params,
                         const ChainConfig& config, const StateVector& init,
                         int chains) {
  if (chains < 1) throw std::invalid_argument("chain count must be at least 1");
  ChainConfig cfg = config;
  cfg.zeta = params.zeta;
  cfg.validate();
  PosteriorTarget target(y, params);
  if (chains == 1) return run_one_chain(target, cfg, init, 0);

  std::vector<SampleSummary> parts(chains);
  const int workers = std::min(chains, thread_budget());
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int c = next.fetch_add(1); c < chains; c = next.fetch_add(1)) {
        parts[c] = run_one_chain(target, cfg, init, static_cast<std::uint64_t>(c));
      }
    });
  }
  for (auto& t : pool) t.join();

  SampleSummary out = parts[0];
  long count = 0;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(init.values.size());
  double acceptance = 0.0;
  long numerical = 0;
  for (const auto& part : parts) {
    sum += part.mean.values * static_cast<double>(part.samples);
    count += part.samples;
    acceptance += part.acceptance * static_cast<double>(part.samples);
    numerical += part.numerical_rejections;
  }
  out.mean.values = sum / static_cast<double>(count);
  out.samples = count;
  out.acceptance = acceptance / static_cast<double>(count);
  out.numerical_rejections = numerical;

  // Error maps merge as weighted averages of per-chain maps (norms around the
  // pooled mean are not recoverable from summaries; chains share the init so
  // per-chain centers agree within MC error).
  auto merge_maps = [&](auto get) {
    ExpectedErrorMap map = get(parts[0]);
    map.value.setZero();
    for (const auto& part : parts) {
      map.value += get(part).value * static_cast<double>(part.samples);
    }
    map.value /= static_cast<double>(count);
    return map;
  };
  out.err_displacement = merge_maps([](const SampleSummary& s) { return s.err_displacement; });
  out.jensen_displacement =
      merge_maps([](const SampleSummary& s) { return s.jensen_displacement; });
  for (int c = 0; c < init.channels; ++c) {
    out.err_image[c] = merge_maps([&](const SampleSummary& s) { return s.err_image[c]; });
    out.jensen_image[c] =
        merge_maps([&](const SampleSummary& s) { return s.jensen_image[c]; });
  }
  return out;
}

double tune_step_size(const ObservationSet& y, const ModelParams& params,
                      ChainConfig config, const StateVector& init) {
  config.zeta = params.zeta;
  config.validate();
  PosteriorTarget target(y, params);

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double best = config.step;
  double best_gap = std::numeric_limits<double>::infinity();
  ChainConfig pilot = config;
  pilot.iterations = std::max<long>(100, std::min<long>(300, config.iterations));
  pilot.burn_in = pilot.iterations / 5;
  pilot.max_store_bytes = 0;

  for (int trial = 0; trial < 20; ++trial) {
    pilot.seed = config.seed + 1000 + trial;
    const SampleSummary s = run_state_chain(target, pilot, init);
    const double gap = std::abs(s.acceptance - 0.9);
    if (gap < best_gap) {
      best_gap = gap;
      best = pilot.step;
    }
    if (s.acceptance >= 0.85 && s.acceptance <= 0.95) return pilot.step;
    if (s.acceptance > 0.95) {
      lo = pilot.step;
      pilot.step = std::isfinite(hi) ? std::sqrt(lo * hi) : pilot.step * 4.0;
    } else {
      hi = pilot.step;
      pilot.step = lo > 0.0 ? std::sqrt(lo * hi) : pilot.step / 4.0;
    }
  }
  return best;
}

}  // namespace amv
