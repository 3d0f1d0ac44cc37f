#include "amv/bspline.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace amv {
namespace {

// Pole of the cubic B-spline prefilter.
constexpr double kPole = -0.26794919243112270647;  // sqrt(3) - 2

// Exact periodic solve of the collocation system c * (z + 4 + 1/z)/6 = x along a
// strided line: causal and anticausal first-order recursions whose initial values
// are the closed-form periodic steady states, then the gain -6 z1.
void prefilter_line(double* data, int n, int stride) {
  const double z1 = kPole;
  const double zn = std::pow(z1, n);
  const double inv = 1.0 / (1.0 - zn);

  // Causal init: sum_{j=0}^{n-1} z1^j x(-j mod n) / (1 - z1^n).
  double acc = data[0];
  double zj = 1.0;
  for (int j = 1; j < n; ++j) {
    zj *= z1;
    acc += zj * data[(n - j) * stride];
  }
  double prev = acc * inv;
  data[0] = prev;
  for (int i = 1; i < n; ++i) {
    prev = data[i * stride] + z1 * prev;
    data[i * stride] = prev;
  }

  // Anticausal init: sum_{j=0}^{n-1} z1^j c((n-1+j) mod n) / (1 - z1^n).
  acc = data[(n - 1) * stride];
  zj = 1.0;
  for (int j = 1; j < n; ++j) {
    zj *= z1;
    acc += zj * data[((j - 1) % n) * stride];
  }
  double next = acc * inv;
  data[(n - 1) * stride] = next;
  for (int i = n - 2; i >= 0; --i) {
    next = data[i * stride] + z1 * next;
    data[i * stride] = next;
  }

  const double gain = -6.0 * z1;
  for (int i = 0; i < n; ++i) data[i * stride] *= gain;
}

struct CellWeights {
  int base_row;
  int base_col;
  double wr[4];
  double wc[4];
};

// Weights of the 4x4 coefficient cell supporting the point (row, col).
CellWeights cell_weights(double row, double col) {
  CellWeights w;
  const double fr = std::floor(row);
  const double fc = std::floor(col);
  w.base_row = static_cast<int>(fr) - 1;
  w.base_col = static_cast<int>(fc) - 1;
  for (int t = 0; t < 4; ++t) {
    w.wr[t] = cubic_bspline(row - (fr - 1.0 + t));
    w.wc[t] = cubic_bspline(col - (fc - 1.0 + t));
  }
  return w;
}

}  // namespace

double cubic_bspline(double t) {
  const double a = std::abs(t);
  if (a < 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
  if (a < 2.0) {
    const double b = 2.0 - a;
    return b * b * b / 6.0;
  }
  return 0.0;
}

double cubic_bspline_deriv(double t) {
  const double a = std::abs(t);
  const double sign = t < 0.0 ? -1.0 : 1.0;
  if (a < 1.0) return sign * (1.5 * a * a - 2.0 * a);
  if (a < 2.0) {
    const double b = 2.0 - a;
    return sign * (-0.5 * b * b);
  }
  return 0.0;
}

void bspline_prefilter_2d(Eigen::Ref<Eigen::VectorXd> field, const PixelGrid& grid) {
  if (field.size() != grid.pixels()) throw std::invalid_argument("prefilter: size mismatch");
  for (int r = 0; r < grid.rows; ++r) prefilter_line(field.data() + r * grid.cols, grid.cols, 1);
  for (int c = 0; c < grid.cols; ++c) prefilter_line(field.data() + c, grid.rows, grid.cols);
}

SplineCoeffs bspline_analysis(const ImageStack& x) {
  SplineCoeffs c;
  c.grid = x.grid;
  c.channels = x.channels;
  c.values = x.values;
  for (int ch = 0; ch < x.channels; ++ch) bspline_prefilter_2d(c.channel(ch), c.grid);
  return c;
}

double warp_at(const SplineCoeffs& c, int channel, double row, double col) {
  const CellWeights w = cell_weights(row, col);
  const auto coeffs = c.channel(channel);
  double out = 0.0;
  for (int t = 0; t < 4; ++t) {
    const double wr = w.wr[t];
    if (wr == 0.0) continue;
    double line = 0.0;
    for (int u = 0; u < 4; ++u) {
      line += w.wc[u] * coeffs[c.grid.wrapped_index(w.base_row + t, w.base_col + u)];
    }
    out += wr * line;
  }
  return out;
}

ImageStack warp(const SplineCoeffs& c, const DisplacementField& d) {
  if (!(c.grid == d.grid)) throw std::invalid_argument("warp: grid mismatch");
  ImageStack out = make_image(c.grid, c.channels);
  const int m = c.grid.pixels();
  for (int s = 0; s < m; ++s) {
    const auto [row, col] = c.grid.position(s);
    const double pr = row + d.values[m + s];  // d2: vertical
    const double pc = col + d.values[s];      // d1: horizontal
    const CellWeights w = cell_weights(pr, pc);
    int idx[4][4];
    for (int t = 0; t < 4; ++t) {
      for (int u = 0; u < 4; ++u) {
        idx[t][u] = c.grid.wrapped_index(w.base_row + t, w.base_col + u);
      }
    }
    for (int ch = 0; ch < c.channels; ++ch) {
      const auto coeffs = c.channel(ch);
      double v = 0.0;
      for (int t = 0; t < 4; ++t) {
        double line = 0.0;
        for (int u = 0; u < 4; ++u) line += w.wc[u] * coeffs[idx[t][u]];
        v += w.wr[t] * line;
      }
      out.at(ch, s) = v;
    }
  }
  return out;
}

ImageStack warp_adjoint_image(const DisplacementField& d, const ImageStack& z) {
  if (!(d.grid == z.grid)) throw std::invalid_argument("warp_adjoint_image: grid mismatch");
  ImageStack out = make_image(z.grid, z.channels);
  const int m = z.grid.pixels();
  for (int s = 0; s < m; ++s) {
    const auto [row, col] = z.grid.position(s);
    const double pr = row + d.values[m + s];
    const double pc = col + d.values[s];
    const CellWeights w = cell_weights(pr, pc);
    int idx[4][4];
    for (int t = 0; t < 4; ++t) {
      for (int u = 0; u < 4; ++u) {
        idx[t][u] = z.grid.wrapped_index(w.base_row + t, w.base_col + u);
      }
    }
    for (int ch = 0; ch < z.channels; ++ch) {
      const double zv = z.at(ch, s);
      if (zv == 0.0) continue;
      auto buf = out.channel(ch);
      for (int t = 0; t < 4; ++t) {
        const double wt = zv * w.wr[t];
        for (int u = 0; u < 4; ++u) buf[idx[t][u]] += wt * w.wc[u];
      }
    }
  }
  for (int ch = 0; ch < z.channels; ++ch) bspline_prefilter_2d(out.channel(ch), out.grid);
  return out;
}

std::pair<ImageStack, ImageStack> warp_spatial_derivs(const SplineCoeffs& c,
                                                      const DisplacementField& d,
                                                      double step) {
  if (!(c.grid == d.grid)) throw std::invalid_argument("warp_spatial_derivs: grid mismatch");
  ImageStack dh = make_image(c.grid, c.channels);
  ImageStack dv = make_image(c.grid, c.channels);
  const int m = c.grid.pixels();
  const double inv2h = 0.5 / step;
  for (int s = 0; s < m; ++s) {
    const auto [row, col] = c.grid.position(s);
    const double pr = row + d.values[m + s];
    const double pc = col + d.values[s];
    for (int ch = 0; ch < c.channels; ++ch) {
      dh.at(ch, s) = (warp_at(c, ch, pr, pc + step) - warp_at(c, ch, pr, pc - step)) * inv2h;
      dv.at(ch, s) = (warp_at(c, ch, pr + step, pc) - warp_at(c, ch, pr - step, pc)) * inv2h;
    }
  }
  return {std::move(dh), std::move(dv)};
}

}  // namespace amv
