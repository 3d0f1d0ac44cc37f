#include "amv/energy.hpp"

#include <cmath>
#include <stdexcept>

namespace amv {

void ModelParams::validate() const {
  if (!(alpha > 0.0) || !(gamma > 0.0)) {
    throw std::invalid_argument("prior weights must be positive");
  }
  if (!(hurst_prior > 0.0)) throw std::invalid_argument("Hurst exponent must be positive");
  if (!(zeta > 0.0) || zeta > 1.0) throw std::invalid_argument("zeta must lie in (0, 1]");
}

double likelihood_energy(const StateVector& theta, const ObservationSet& y) {
  const SplineCoeffs c = bspline_analysis(theta.image_stack());
  const ImageStack warped = warp(c, theta.displacement());
  return residual(theta, y, warped).squared_norm();
}

double prior_energy(const StateVector& theta, const ModelParams& params) {
  FbmOperator op(theta.grid, params.hurst_prior);
  const Eigen::VectorXd p1 = op.prec_apply(theta.d1());
  const Eigen::VectorXd p2 = op.prec_apply(theta.d2());
  const double disp = theta.d1().dot(p1) + theta.d2().dot(p2);
  return params.alpha * disp + params.gamma * theta.image().squaredNorm();
}

EnergyValue gibbs_energy(const StateVector& theta, const ObservationSet& y,
                         const ModelParams& params) {
  EnergyValue e;
  e.likelihood = likelihood_energy(theta, y);
  e.prior = prior_energy(theta, params);
  e.total = e.likelihood + e.prior;
  return e;
}

std::pair<EnergyValue, StateVector> energy_and_gradient(const StateVector& theta,
                                                        const ObservationSet& y,
                                                        const ModelParams& params) {
  const PixelGrid grid = theta.grid;
  const int m = grid.pixels();
  const int k = theta.channels;

  const SplineCoeffs c = bspline_analysis(theta.image_stack());
  const DisplacementField d = theta.displacement();
  const ImageStack warped = warp(c, d);
  const ResidualVector r = residual(theta, y, warped);

  FbmOperator op(grid, params.hurst_prior);
  const Eigen::VectorXd p1 = op.prec_apply(theta.d1());
  const Eigen::VectorXd p2 = op.prec_apply(theta.d2());

  EnergyValue e;
  e.likelihood = r.squared_norm();
  e.prior = params.alpha * (theta.d1().dot(p1) + theta.d2().dot(p2)) +
            params.gamma * theta.image().squaredNorm();
  e.total = e.likelihood + e.prior;

  StateVector g = make_state(grid, k);
  g.d1() = 2.0 * params.alpha * p1;
  g.d2() = 2.0 * params.alpha * p2;

  // Data term on d: diagonal blocks of grad_d W^T times the t0 residual.
  const auto [dh, dv] = warp_spatial_derivs(c, d, kWarpDerivStep);
  for (int ch = 0; ch < k; ++ch) {
    for (int s = 0; s < m; ++s) {
      const double rs = r.t0[ch * m + s];
      if (rs == 0.0) continue;
      g.d1()[s] += 2.0 * rs * dh.at(ch, s);
      g.d2()[s] += 2.0 * rs * dv.at(ch, s);
    }
  }

  // Data term on x: C grad_I^T(d) delta_t0 + delta_t1, plus the prior.
  ImageStack rt0 = make_image(grid, k);
  rt0.values = r.t0;
  const ImageStack adj = warp_adjoint_image(d, rt0);
  g.image() = 2.0 * params.gamma * theta.image() + 2.0 * adj.values + 2.0 * r.t1;

  return {e, std::move(g)};
}

StateVector gradient(const StateVector& theta, const ObservationSet& y,
                     const ModelParams& params) {
  return energy_and_gradient(theta, y, params).second;
}

double tempered_energy(const StateVector& theta, const ObservationSet& y,
                       const ModelParams& params) {
  params.validate();
  return gibbs_energy(theta, y, params).total / params.zeta;
}

StateVector tempered_gradient(const StateVector& theta, const ObservationSet& y,
                              const ModelParams& params) {
  params.validate();
  StateVector g = gradient(theta, y, params);
  g.values /= params.zeta;
  return g;
}

StateVector rescale_sample(const StateVector& theta_tilde, const StateVector& theta_hat,
                           double zeta) {
  if (!(zeta > 0.0)) throw std::invalid_argument("rescale_sample: zeta must be positive");
  StateVector out = theta_tilde;
  out.values = theta_hat.values +
               (theta_tilde.values - theta_hat.values) / std::sqrt(zeta);
  return out;
}

}  // namespace amv
