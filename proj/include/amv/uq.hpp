#pragma once

#include <Eigen/Dense>
#include <vector>

#include "amv/error_map.hpp"
#include "amv/state.hpp"

namespace amv {

/// Per-pixel linear observables over a sub-domain of the grid: the displacement
/// pair (ell = 2) or one intensity channel (ell = 1).
struct ObservableSet {
  PixelGrid grid;
  std::vector<int> pixels;  // domain Omega as flat indices
  ObservableKind kind = ObservableKind::displacement;
  int channel = 0;

  int count() const { return static_cast<int>(pixels.size()); }
  int ell() const { return kind == ObservableKind::displacement ? 2 : 1; }
};

ObservableSet displacement_observables(const PixelGrid& grid);
ObservableSet displacement_observables(const PixelGrid& grid, const std::vector<int>& pixels);
/// Pixels observed at both times.
std::vector<int> joint_observed_pixels(const ObservationMask& mask);

enum class WeightFamily { uniform, power1, power2, sparse };

struct WeightMap {
  WeightFamily family = WeightFamily::uniform;
  std::vector<double> w;  // aligned with the ObservableSet pixel order
  double c_p = 1.0;       // normalization constant of the family
  double d0 = 0.0;        // sparse threshold (tau-th order statistic)
  int tau = 0;

  /// Residual of the family constraint h_p(w).
  double constraint_residual() const;
};

WeightMap uniform_weights(int count);

/// Optimal inverse-power weights of the expected error; p = 1 uses the
/// geometric-mean normalization (sum of -log w vanishes), p = 2 normalizes the
/// square-root sum to the observable count. Throws on nonpositive or NaN input.
WeightMap weights_power(const std::vector<double>& expected_error, int p);

/// Binary weights selecting the tau observables with smallest expected error.
WeightMap weights_sparse(const std::vector<double>& expected_error, int tau);

/// Chebyshev tail bound: expected_error / a clipped to [0, 1].
double chebyshev_bound(double expected_error, double a);

/// Weighted average endpoint error over the observable set.
double epe(const ObservableSet& set, const WeightMap& weights,
           const DisplacementField& error_field);

/// Expected-error values restricted to an observable set.
std::vector<double> gather_expected_error(const ExpectedErrorMap& map,
                                          const ObservableSet& set);

/// The five-criteria report of the evaluation suite. standard is the uniform
/// EPE on the full grid; sparse uses tau = #P(Omega_obs), sparse-masked
/// tau = #P(Omega_obs)/2 on the jointly observed sub-domain.
struct EpeReport {
  double standard = 0.0;
  double weighted1 = 0.0;
  double weighted2 = 0.0;
  double masked = 0.0;
  double sparse = 0.0;
  double sparse_masked = 0.0;
};

EpeReport criteria_suite(const DisplacementField& d_true, const DisplacementField& d_hat,
                         const ExpectedErrorMap& err_d, const ObservationMask& mask);

}  // namespace amv
