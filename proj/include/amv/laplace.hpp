#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "amv/energy.hpp"
#include "amv/error_map.hpp"
#include "amv/state.hpp"

namespace amv {

/// Sparse symmetric Hessian of the Gibbs energy over the state layout:
/// banded fBm precision plus per-pixel data curvature on d-d, warp-footprint
/// couplings on d-x, and filtered footprint products on x-x.
struct SparseHessian {
  PixelGrid grid;
  int channels = 1;
  Eigen::SparseMatrix<double> matrix;  // n x n, exactly symmetric
  double assembly_asymmetry = 0.0;     // max |H - H^T| before symmetrization
};

/// band_radius truncates the fBm precision band (Chebyshev pixel distance,
/// periodic); entries below 1e-8 of the kernel diagonal are dropped as well.
SparseHessian assemble_hessian(const StateVector& theta_hat, const ObservationSet& y,
                               const ModelParams& params, int band_radius);

/// Eigendecomposition of the Hessian restricted to the neighborhood of a pixel.
struct LocalEvd {
  std::vector<int> indices;      // global state indices of the restriction
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns
  bool positive_definite = false;
};

LocalEvd local_evd(const SparseHessian& hessian, int pixel, int radius);

/// Expected-error bound map F = sqrt(2/pi) sum_j ||Lambda^{-1/2} V^T psi_j||_2
/// from per-pixel reduced EVDs. Indefinite restrictions yield NaN entries.
ExpectedErrorMap laplace_error_map(const SparseHessian& hessian,
                                   const std::vector<int>& pixels, ObservableKind kind,
                                   int radius, int channel = 0);

/// Convenience overload over the full grid.
ExpectedErrorMap laplace_error_map(const SparseHessian& hessian, ObservableKind kind,
                                   int radius, int channel = 0);

}  // namespace amv
