#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <vector>

#include "amv/energy.hpp"
#include "amv/error_map.hpp"
#include "amv/rng.hpp"
#include "amv/state.hpp"

namespace amv {

/// Unnormalized negative log density with gradient, over flat vectors.
class Target {
 public:
  virtual ~Target() = default;
  virtual double energy(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x) const = 0;
  virtual std::pair<double, Eigen::VectorXd> energy_and_gradient(
      const Eigen::VectorXd& x) const {
    return {energy(x), gradient(x)};
  }
};

/// Proposal covariance Sigma_H: applies of the covariance, its inverse and the
/// two square roots. All applies must commute.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual Eigen::VectorXd cov(const Eigen::VectorXd& v) const = 0;
  virtual Eigen::VectorXd prec(const Eigen::VectorXd& v) const = 0;
  virtual Eigen::VectorXd sqrt_fwd(const Eigen::VectorXd& v) const = 0;
  virtual Eigen::VectorXd sqrt_inv(const Eigen::VectorXd& v) const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
 public:
  Eigen::VectorXd cov(const Eigen::VectorXd& v) const override { return v; }
  Eigen::VectorXd prec(const Eigen::VectorXd& v) const override { return v; }
  Eigen::VectorXd sqrt_fwd(const Eigen::VectorXd& v) const override { return v; }
  Eigen::VectorXd sqrt_inv(const Eigen::VectorXd& v) const override { return v; }
};

/// fBm covariance on the two displacement blocks, identity on the image blocks.
class FbmStatePreconditioner final : public Preconditioner {
 public:
  FbmStatePreconditioner(PixelGrid grid, int channels, double hurst);
  Eigen::VectorXd cov(const Eigen::VectorXd& v) const override;
  Eigen::VectorXd prec(const Eigen::VectorXd& v) const override;
  Eigen::VectorXd sqrt_fwd(const Eigen::VectorXd& v) const override;
  Eigen::VectorXd sqrt_inv(const Eigen::VectorXd& v) const override;

 private:
  Eigen::VectorXd apply(const Eigen::VectorXd& v, double exponent) const;
  PixelGrid grid_;
  int channels_;
  double hurst_;
};

enum class SamplerKind { rw, precond_rw, mala, hmc };

SamplerKind parse_sampler_kind(const std::string& name);
std::string sampler_kind_name(SamplerKind kind);

struct ChainConfig {
  SamplerKind kind = SamplerKind::hmc;
  /// Step size in temperature units: the effective time step is step * zeta
  /// for RW/MALA and the effective leapfrog step is step * sqrt(zeta) for HMC,
  /// so a tuned value carries across temperatures.
  double step = 0.1;
  int leapfrog = 10;       // HMC only
  long iterations = 1000;  // post burn-in samples
  double zeta = 1.0;
  std::optional<double> hurst_precond;  // empty: identity preconditioner
  long burn_in = -1;                    // -1: 10% of iterations
  int thinning = 1;
  std::uint64_t seed = 0;
  long max_store_bytes = 512l << 20;  // stored-sample budget for two-pass maps

  void validate() const;
  double effective_step() const;
  long resolved_burn_in() const;
};

struct ChainState {
  Eigen::VectorXd position;
  double energy = 0.0;          // cached tempered energy
  Eigen::VectorXd gradient;     // cached tempered gradient
  long accepted = 0;
  long proposed = 0;
  long numerical_rejections = 0;  // NaN ratios and divergent trajectories
};

/// Accept with probability min(1, exp(log_ratio)); NaN rejects.
bool mh_accept(Rng& rng, double log_ratio);

/// Symmetric Gaussian proposal x + sqrt(dt) xi with xi ~ N(0, I) or N(0, Sigma).
Eigen::VectorXd rw_propose(Rng& rng, const Eigen::VectorXd& x, double dt,
                           const Preconditioner& pre, bool preconditioned);

struct StepOutcome {
  bool accepted = false;
  double log_ratio = 0.0;
};

StepOutcome rw_step(Rng& rng, ChainState& state, const Target& target,
                    const Preconditioner& pre, double dt, bool preconditioned);
StepOutcome mala_step(Rng& rng, ChainState& state, const Target& target,
                      const Preconditioner& pre, double dt);
StepOutcome hmc_step(Rng& rng, ChainState& state, const Target& target,
                     const Preconditioner& pre, double dt, int leapfrog);

/// Chain summary with the rescaled expected-error estimators of the tempered
/// posterior: theta_hat is the sample mean and the maps carry the 1/sqrt(zeta)
/// factor. The Jensen online bounds are always available; the two-pass maps
/// only when samples were stored.
struct SampleSummary {
  StateVector mean;
  ExpectedErrorMap err_displacement;
  std::vector<ExpectedErrorMap> err_image;
  ExpectedErrorMap jensen_displacement;
  std::vector<ExpectedErrorMap> jensen_image;
  bool two_pass = false;
  double acceptance = 0.0;
  long samples = 0;
  long numerical_rejections = 0;
  double zeta = 1.0;
};

/// Runs one chain of the given sampler against an arbitrary target over the
/// state layout (used for the posterior and for Gaussian test instances).
SampleSummary run_state_chain(const Target& target, const ChainConfig& config,
                              const StateVector& init);

/// Tempered-posterior chain; initialization is typically the MAP estimate.
SampleSummary run_chain(const ObservationSet& y, const ModelParams& params,
                        const ChainConfig& config, const StateVector& init);

/// Several independent chains (seeds forked per chain), merged into one summary.
SampleSummary run_chains(const ObservationSet& y, const ModelParams& params,
                         const ChainConfig& config, const StateVector& init,
                         int chains);

/// Bracket search on the relative step until the pilot acceptance rate lands in
/// [0.85, 0.95]; deterministic given config.seed. Returns the best step found.
double tune_step_size(const ObservationSet& y, const ModelParams& params,
                      ChainConfig config, const StateVector& init);

/// Tempered posterior as a Target over flat state vectors.
class PosteriorTarget final : public Target {
 public:
  PosteriorTarget(const ObservationSet& y, const ModelParams& params);
  double energy(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  std::pair<double, Eigen::VectorXd> energy_and_gradient(
      const Eigen::VectorXd& x) const override;

 private:
  StateVector to_state(const Eigen::VectorXd& x) const;
  const ObservationSet& y_;
  ModelParams params_;
};

/// Number of worker threads honoring the AMV_THREADS cap.
int thread_budget();

}  // namespace amv
