#pragma once

#include <vector>

#include "amv/energy.hpp"
#include "amv/lbfgs.hpp"
#include "amv/wavelet.hpp"

namespace amv {

struct OptimConfig {
  int memory = 8;
  int max_iterations = 500;
  double grad_tolerance_factor = 1e-6;  // tolerance = factor * sqrt(n)
  WaveletBasis basis{};
  bool wavelet_domain = true;  // optimize wavelet coefficients of theta
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;

  void validate() const;
};

struct MapDiagnostics {
  int iterations = 0;
  double final_energy = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  bool line_search_failed = false;
  std::vector<double> energy_trace;
};

/// Default start: zero displacement, image filled with the mean of the observed
/// t1 pixels on unobserved pixels and the observations elsewhere.
StateVector default_map_init(const ObservationSet& y);

/// MAP estimate by limited-memory quasi-Newton over wavelet coefficients of
/// (d, x_t1); gradients are transported by the adjoint FWT.
std::pair<StateVector, MapDiagnostics> estimate_map(const ObservationSet& y,
                                                    const ModelParams& params,
                                                    const OptimConfig& config,
                                                    const StateVector& init);

}  // namespace amv
