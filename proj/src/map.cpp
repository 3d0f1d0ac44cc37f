#include "amv/map.hpp"

#include <cmath>
#include <stdexcept>

namespace amv {
namespace {

// Componentwise forward FWT over the state layout (d1, d2, channels).
void state_fwt_forward(StateVector& theta, const WaveletBasis& basis) {
  fwt2_forward(theta.d1(), theta.grid, basis);
  fwt2_forward(theta.d2(), theta.grid, basis);
  for (int c = 0; c < theta.channels; ++c) {
    fwt2_forward(theta.image_channel(c), theta.grid, basis);
  }
}

void state_fwt_inverse(StateVector& theta, const WaveletBasis& basis) {
  fwt2_inverse(theta.d1(), theta.grid, basis);
  fwt2_inverse(theta.d2(), theta.grid, basis);
  for (int c = 0; c < theta.channels; ++c) {
    fwt2_inverse(theta.image_channel(c), theta.grid, basis);
  }
}

}  // namespace

void OptimConfig::validate() const {
  if (memory < 1) throw std::invalid_argument("optimizer memory must be at least 1");
  if (!(grad_tolerance_factor > 0.0)) throw std::invalid_argument("tolerance must be positive");
}

StateVector default_map_init(const ObservationSet& y) {
  const PixelGrid grid = y.grid();
  const int m = grid.pixels();
  StateVector theta = make_state(grid, y.channels());
  for (int c = 0; c < y.channels(); ++c) {
    double mean = 0.0;
    int count = 0;
    for (int s = 0; s < m; ++s) {
      if (y.mask.observed_t1(s)) {
        mean += y.y_t1.at(c, s);
        ++count;
      }
    }
    mean = count > 0 ? mean / count : 0.0;
    for (int s = 0; s < m; ++s) {
      theta.image_channel(c)[s] = y.mask.observed_t1(s) ? y.y_t1.at(c, s) : mean;
    }
  }
  return theta;
}

std::pair<StateVector, MapDiagnostics> estimate_map(const ObservationSet& y,
                                                    const ModelParams& params,
                                                    const OptimConfig& config,
                                                    const StateVector& init) {
  config.validate();
  params.validate();
  if (!init.values.allFinite()) throw std::invalid_argument("estimate_map: init not finite");

  const PixelGrid grid = init.grid;
  const int k = init.channels;
  const Eigen::Index n = init.values.size();

  StateVector scratch = make_state(grid, k);
  const Objective objective = [&](const Eigen::VectorXd& vars, Eigen::VectorXd& grad) {
    scratch.values = vars;
    if (config.wavelet_domain) state_fwt_inverse(scratch, config.basis);
    auto [e, g] = energy_and_gradient(scratch, y, params);
    if (config.wavelet_domain) state_fwt_forward(g, config.basis);
    grad = g.values;
    return e.total;
  };

  StateVector start = init;
  if (config.wavelet_domain) state_fwt_forward(start, config.basis);

  LbfgsOptions options;
  options.memory = config.memory;
  options.max_iterations = config.max_iterations;
  options.grad_tolerance = config.grad_tolerance_factor * std::sqrt(static_cast<double>(n));
  options.wolfe_c1 = config.wolfe_c1;
  options.wolfe_c2 = config.wolfe_c2;

  LbfgsResult res = lbfgs_minimize(objective, start.values, options);

  StateVector theta = make_state(grid, k);
  theta.values = res.x;
  if (config.wavelet_domain) state_fwt_inverse(theta, config.basis);

  MapDiagnostics diag;
  diag.iterations = res.iterations;
  diag.final_energy = res.value;
  diag.grad_norm = res.grad_norm;
  diag.converged = res.converged;
  diag.line_search_failed = res.line_search_failed;
  diag.energy_trace = std::move(res.value_trace);
  return {std::move(theta), std::move(diag)};
}

}  // namespace amv
