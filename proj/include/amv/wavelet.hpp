#pragma once

#include <Eigen/Dense>
#include <vector>

#include "amv/grid.hpp"

namespace amv {

enum class WaveletFamily { haar, db2, coif5 };

/// Orthonormal separable 2-D wavelet basis with periodic boundary handling.
/// levels == 0 picks the default depth log2(min(rows, cols)) - 2 (at least 1).
struct WaveletBasis {
  WaveletFamily family = WaveletFamily::coif5;
  int levels = 0;
  bool periodic = true;
};

const std::vector<double>& lowpass_filter(WaveletFamily family);
int default_levels(const PixelGrid& grid);
int resolved_levels(const PixelGrid& grid, const WaveletBasis& basis);

/// Forward fast wavelet transform (analysis), in place over a row-major field.
void fwt2_forward(Eigen::Ref<Eigen::VectorXd> field, const PixelGrid& grid,
                  const WaveletBasis& basis);

/// Inverse fast wavelet transform (synthesis), in place.
void fwt2_inverse(Eigen::Ref<Eigen::VectorXd> field, const PixelGrid& grid,
                  const WaveletBasis& basis);

}  // namespace amv
