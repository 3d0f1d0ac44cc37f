#pragma once

#include <Eigen/Dense>
#include <utility>

#include "amv/state.hpp"

namespace amv {

/// Cubic B-spline coefficients of an image stack (periodic boundary handling).
struct SplineCoeffs {
  PixelGrid grid;
  int channels = 1;
  Eigen::VectorXd values;  // channel-major like ImageStack

  Eigen::Ref<Eigen::VectorXd> channel(int c) {
    return values.segment(c * grid.pixels(), grid.pixels());
  }
  Eigen::Ref<const Eigen::VectorXd> channel(int c) const {
    return values.segment(c * grid.pixels(), grid.pixels());
  }
};

/// Centered cubic B-spline and its derivative (support (-2, 2)).
double cubic_bspline(double t);
double cubic_bspline_deriv(double t);

/// Direct B-spline transform: coefficients whose spline expansion interpolates
/// the image at grid points. Recursive filtering with exact periodic
/// initialization; O(k m).
SplineCoeffs bspline_analysis(const ImageStack& x);

/// Applies the (symmetric, periodic) prefilter matrix C to a scalar field in place.
void bspline_prefilter_2d(Eigen::Ref<Eigen::VectorXd> field, const PixelGrid& grid);

/// Spline evaluation at grid points displaced by d. Periodic wrap out of domain.
ImageStack warp(const SplineCoeffs& c, const DisplacementField& d);

/// Evaluates one output component; weights gather at the 4x4 cell around the point.
double warp_at(const SplineCoeffs& c, int channel, double row, double col);

/// Adjoint of the warp in the image argument: C * grad_I^T(d) * z.
ImageStack warp_adjoint_image(const DisplacementField& d, const ImageStack& z);

/// Centered finite differences of the warp with respect to the two displacement
/// components; first = horizontal (d1), second = vertical (d2).
std::pair<ImageStack, ImageStack> warp_spatial_derivs(const SplineCoeffs& c,
                                                      const DisplacementField& d,
                                                      double step = 1e-3);

/// Finite-difference step used for the warp derivatives throughout the library.
inline constexpr double kWarpDerivStep = 1e-3;

}  // namespace amv
