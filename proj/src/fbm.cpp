#include "amv/fbm.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "amv/fft.hpp"

namespace amv {
namespace {

// Squared frequency magnitude per mode, row-major over DFT bins.
Eigen::VectorXd omega_squared(const PixelGrid& grid) {
  Eigen::VectorXd w2(grid.pixels());
  const double two_pi = 2.0 * M_PI;
  for (int r = 0; r < grid.rows; ++r) {
    const int kr = r < grid.rows / 2 ? r : r - grid.rows;
    const double wr = two_pi * kr / grid.rows;
    for (int c = 0; c < grid.cols; ++c) {
      const int kc = c < grid.cols / 2 ? c : c - grid.cols;
      const double wc = two_pi * kc / grid.cols;
      w2[r * grid.cols + c] = wr * wr + wc * wc;
    }
  }
  return w2;
}

Eigen::VectorXd multiplier_table(const PixelGrid& grid, double exponent_2s) {
  Eigen::VectorXd table = omega_squared(grid);
  const double p = 0.5 * exponent_2s;
  for (int i = 0; i < table.size(); ++i) {
    table[i] = table[i] > 0.0 ? std::pow(table[i], p) : 0.0;
  }
  return table;
}

Eigen::VectorXd apply_multiplier(const Eigen::Ref<const Eigen::VectorXd>& field,
                                 const Eigen::VectorXd& table, const PixelGrid& grid) {
  if (field.size() != grid.pixels()) throw std::invalid_argument("fbm apply: size mismatch");
  std::vector<std::complex<double>> buf(grid.pixels());
  for (int i = 0; i < grid.pixels(); ++i) buf[i] = field[i];
  fft2_inplace(buf, grid, false);
  for (int i = 0; i < grid.pixels(); ++i) buf[i] *= table[i];
  fft2_inplace(buf, grid, true);
  Eigen::VectorXd out(grid.pixels());
  const double scale = 1.0 / grid.pixels();
  for (int i = 0; i < grid.pixels(); ++i) out[i] = buf[i].real() * scale;
  return out;
}

}  // namespace

Eigen::VectorXd fractional_apply(const Eigen::Ref<const Eigen::VectorXd>& field, double s,
                                 const PixelGrid& grid) {
  return apply_multiplier(field, multiplier_table(grid, 2.0 * s), grid);
}

FbmOperator::FbmOperator(PixelGrid grid, double hurst) : grid_(grid), hurst_(hurst) {
  if (!(hurst > 0.0)) throw std::invalid_argument("Hurst exponent must be positive");
}

Eigen::VectorXd FbmOperator::cov_apply(const Eigen::Ref<const Eigen::VectorXd>& field) const {
  return fractional_apply(field, -(hurst_ + 1.0), grid_);
}

Eigen::VectorXd FbmOperator::prec_apply(const Eigen::Ref<const Eigen::VectorXd>& field) const {
  return fractional_apply(field, hurst_ + 1.0, grid_);
}

Eigen::VectorXd FbmOperator::sqrt_apply(const Eigen::Ref<const Eigen::VectorXd>& field,
                                        int sign) const {
  if (sign != 1 && sign != -1) throw std::invalid_argument("sqrt_apply: sign must be +-1");
  return fractional_apply(field, -0.5 * sign * (hurst_ + 1.0), grid_);
}

Eigen::VectorXd FbmOperator::sample(Rng& rng, const WaveletBasis& basis) const {
  Eigen::VectorXd coeffs = rng.normal_vector(grid_.pixels());
  fwt2_inverse(coeffs, grid_, basis);
  return fractional_apply(coeffs, -0.5 * (hurst_ + 1.0), grid_);
}

DisplacementField fbm_prec_apply(const DisplacementField& d, double hurst) {
  FbmOperator op(d.grid, hurst);
  DisplacementField out = make_displacement(d.grid);
  out.d1() = op.prec_apply(d.d1());
  out.d2() = op.prec_apply(d.d2());
  return out;
}

DisplacementField fbm_cov_apply(const DisplacementField& d, double hurst) {
  FbmOperator op(d.grid, hurst);
  DisplacementField out = make_displacement(d.grid);
  out.d1() = op.cov_apply(d.d1());
  out.d2() = op.cov_apply(d.d2());
  return out;
}

DisplacementField fbm_sqrt_apply(const DisplacementField& d, double hurst, int sign) {
  FbmOperator op(d.grid, hurst);
  DisplacementField out = make_displacement(d.grid);
  out.d1() = op.sqrt_apply(d.d1(), sign);
  out.d2() = op.sqrt_apply(d.d2(), sign);
  return out;
}

Eigen::VectorXd fbm_sample(Rng& rng, double hurst, const PixelGrid& grid,
                           const WaveletBasis& basis) {
  return FbmOperator(grid, hurst).sample(rng, basis);
}

}  // namespace amv
