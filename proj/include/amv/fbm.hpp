#pragma once

#include <Eigen/Dense>

#include "amv/grid.hpp"
#include "amv/rng.hpp"
#include "amv/state.hpp"
#include "amv/wavelet.hpp"

namespace amv {

/// Fourier-domain fractional differentiation: FFT, multiply by |omega|^{2s}
/// (frequency convention omega_j = 2 pi k_j / N, k in [-N/2, N/2)), inverse FFT.
/// The zero mode is projected out, so the output is zero-mean.
Eigen::VectorXd fractional_apply(const Eigen::Ref<const Eigen::VectorXd>& field, double s,
                                 const PixelGrid& grid);

/// Spectral machinery of an isotropic 2-D fractional Brownian motion on a grid:
/// covariance and precision applies, square roots, and sampling. Hurst exponent
/// H > 0; the point-variance constant is fixed to one.
class FbmOperator {
 public:
  FbmOperator(PixelGrid grid, double hurst);

  const PixelGrid& grid() const { return grid_; }
  double hurst() const { return hurst_; }

  /// Multiplier |omega|^{-2(H+1)} realized on a scalar field (covariance).
  Eigen::VectorXd cov_apply(const Eigen::Ref<const Eigen::VectorXd>& field) const;
  /// Multiplier |omega|^{+2(H+1)} (precision).
  Eigen::VectorXd prec_apply(const Eigen::Ref<const Eigen::VectorXd>& field) const;
  /// sign=+1: covariance square root (|omega|^{-(H+1)}); sign=-1: its inverse.
  Eigen::VectorXd sqrt_apply(const Eigen::Ref<const Eigen::VectorXd>& field, int sign) const;

  /// Zero-mean fBm draw: white wavelet coefficients, inverse FWT, then
  /// fractional integration of order (H+1)/2 in the Fourier domain.
  Eigen::VectorXd sample(Rng& rng, const WaveletBasis& basis = WaveletBasis{}) const;

 private:
  PixelGrid grid_;
  double hurst_;
};

/// Precision apply on both displacement components (prior gradient term).
DisplacementField fbm_prec_apply(const DisplacementField& d, double hurst);
/// Covariance apply on both displacement components.
DisplacementField fbm_cov_apply(const DisplacementField& d, double hurst);
/// Square roots on both displacement components.
DisplacementField fbm_sqrt_apply(const DisplacementField& d, double hurst, int sign);
/// One scalar fBm realization.
Eigen::VectorXd fbm_sample(Rng& rng, double hurst, const PixelGrid& grid,
                           const WaveletBasis& basis = WaveletBasis{});

}  // namespace amv
