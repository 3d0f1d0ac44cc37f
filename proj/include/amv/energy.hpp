#pragma once

#include <Eigen/Dense>

#include "amv/bspline.hpp"
#include "amv/fbm.hpp"
#include "amv/state.hpp"

namespace amv {

/// Posterior knobs in the ratio convention: the noise precision beta is fixed
/// to one and absorbed into alpha (= alpha/beta), gamma (= gamma/beta) and the
/// temperature zeta.
struct ModelParams {
  double alpha = 1.0;        // displacement prior weight
  double gamma = 1.0;        // image prior weight
  double hurst_prior = 1.0;  // Hurst exponent of the displacement prior
  double zeta = 1.0;         // temperature in (0, 1]

  void validate() const;
};

struct EnergyValue {
  double total = 0.0;
  double likelihood = 0.0;
  double prior = 0.0;
};

/// beta * ||delta(theta, y)||^2 with beta = 1.
double likelihood_energy(const StateVector& theta, const ObservationSet& y);

/// alpha (d1' P d1 + d2' P d2) + gamma ||x||^2, P the fBm precision at hurst_prior.
double prior_energy(const StateVector& theta, const ModelParams& params);

EnergyValue gibbs_energy(const StateVector& theta, const ObservationSet& y,
                         const ModelParams& params);

/// Analytic gradient of the Gibbs energy; the warp spatial derivatives use
/// centered finite differences of step kWarpDerivStep.
StateVector gradient(const StateVector& theta, const ObservationSet& y,
                     const ModelParams& params);

/// Energy and gradient sharing one spline analysis and residual evaluation.
std::pair<EnergyValue, StateVector> energy_and_gradient(const StateVector& theta,
                                                        const ObservationSet& y,
                                                        const ModelParams& params);

/// U / zeta and grad U / zeta. Throws unless zeta is in (0, 1].
double tempered_energy(const StateVector& theta, const ObservationSet& y,
                       const ModelParams& params);
StateVector tempered_gradient(const StateVector& theta, const ObservationSet& y,
                              const ModelParams& params);

/// theta = zeta^{-1/2} (theta_tilde - theta_hat) + theta_hat.
StateVector rescale_sample(const StateVector& theta_tilde, const StateVector& theta_hat,
                           double zeta);

}  // namespace amv
