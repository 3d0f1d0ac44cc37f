#include "amv/laplace.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "amv/bspline.hpp"

namespace amv {
namespace {

constexpr double kBandDropTolerance = 1e-8;    // relative to the kernel diagonal
constexpr double kColumnDropTolerance = 1e-9;  // relative to the column maximum

struct KernelBand {
  std::vector<int> drow;
  std::vector<int> dcol;
  std::vector<double> value;
};

int wrapped_distance(int delta, int n) {
  delta = ((delta % n) + n) % n;
  return std::min(delta, n - delta);
}

// Circulant kernel of a linear operator from its response to a delta at pixel 0,
// evenized so the band is exactly symmetric.
KernelBand truncated_band(const Eigen::VectorXd& kernel, const PixelGrid& grid,
                          int max_radius, double rel_tol) {
  const double diag = std::abs(kernel[0]);
  KernelBand band;
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      if (wrapped_distance(r, grid.rows) > max_radius ||
          wrapped_distance(c, grid.cols) > max_radius) {
        continue;
      }
      const double v = 0.5 * (kernel[grid.index(r, c)] +
                              kernel[grid.wrapped_index(-r, -c)]);
      if (std::abs(v) < rel_tol * diag) continue;
      band.drow.push_back(r);
      band.dcol.push_back(c);
      band.value.push_back(v);
    }
  }
  return band;
}

struct Footprint {
  int idx[16];
  double w[16];
};

Footprint footprint_at(const PixelGrid& grid, double row, double col) {
  Footprint f;
  const double fr = std::floor(row);
  const double fc = std::floor(col);
  const int br = static_cast<int>(fr) - 1;
  const int bc = static_cast<int>(fc) - 1;
  double wr[4], wc[4];
  for (int t = 0; t < 4; ++t) {
    wr[t] = cubic_bspline(row - (fr - 1.0 + t));
    wc[t] = cubic_bspline(col - (fc - 1.0 + t));
  }
  for (int t = 0; t < 4; ++t) {
    for (int u = 0; u < 4; ++u) {
      f.idx[4 * t + u] = grid.wrapped_index(br + t, bc + u);
      f.w[4 * t + u] = wr[t] * wc[u];
    }
  }
  return f;
}

}  // namespace

SparseHessian assemble_hessian(const StateVector& theta_hat, const ObservationSet& y,
                               const ModelParams& params, int band_radius) {
  params.validate();
  const PixelGrid grid = theta_hat.grid;
  const int m = grid.pixels();
  const int k = theta_hat.channels;
  const Eigen::Index n = theta_hat.values.size();
  const double h = kWarpDerivStep;

  const SplineCoeffs coeffs = bspline_analysis(theta_hat.image_stack());
  const DisplacementField d = theta_hat.displacement();
  const ImageStack warped = warp(coeffs, d);
  const ResidualVector res = residual(theta_hat, y, warped);

  // fBm precision band (prior curvature on the displacement blocks).
  FbmOperator prior_op(grid, params.hurst_prior);
  Eigen::VectorXd delta_field = Eigen::VectorXd::Zero(m);
  delta_field[0] = 1.0;
  const KernelBand prior_band = truncated_band(prior_op.prec_apply(delta_field), grid,
                                               band_radius, kBandDropTolerance);

  // Prefilter kernel band (matrix C) for the x-x data block.
  delta_field.setZero();
  delta_field[0] = 1.0;
  bspline_prefilter_2d(delta_field, grid);
  const KernelBand c_band =
      truncated_band(delta_field, grid, std::max(grid.rows, grid.cols) / 2,
                     kColumnDropTolerance);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(prior_band.value.size()) * 2 * m + 64 * m);

  // d-d prior band, one copy per displacement component.
  for (int s = 0; s < m; ++s) {
    const auto [r0, c0] = grid.position(s);
    for (std::size_t b = 0; b < prior_band.value.size(); ++b) {
      const int t = grid.wrapped_index(r0 + prior_band.drow[b], c0 + prior_band.dcol[b]);
      const double v = 2.0 * params.alpha * prior_band.value[b];
      triplets.emplace_back(s, t, v);
      triplets.emplace_back(m + s, m + t, v);
    }
  }

  // d-d data curvature: per-pixel 2x2 blocks from finite differences of the warp.
  for (int s = 0; s < m; ++s) {
    if (!y.mask.observed_t0(s)) continue;
    const auto [row, col] = grid.position(s);
    const double pr = row + d.values[m + s];
    const double pc = col + d.values[s];
    double h11 = 0.0, h22 = 0.0, h12 = 0.0;
    for (int ch = 0; ch < k; ++ch) {
      const double w0 = warped.at(ch, s);
      const double wcp = warp_at(coeffs, ch, pr, pc + h);
      const double wcm = warp_at(coeffs, ch, pr, pc - h);
      const double wrp = warp_at(coeffs, ch, pr + h, pc);
      const double wrm = warp_at(coeffs, ch, pr - h, pc);
      const double dc = (wcp - wcm) / (2.0 * h);
      const double dr = (wrp - wrm) / (2.0 * h);
      const double dcc = (wcp - 2.0 * w0 + wcm) / (h * h);
      const double drr = (wrp - 2.0 * w0 + wrm) / (h * h);
      const double drc = (warp_at(coeffs, ch, pr + h, pc + h) -
                          warp_at(coeffs, ch, pr + h, pc - h) -
                          warp_at(coeffs, ch, pr - h, pc + h) +
                          warp_at(coeffs, ch, pr - h, pc - h)) /
                         (4.0 * h * h);
      const double rs = res.t0[ch * m + s];
      h11 += 2.0 * (dcc * rs + dc * dc);
      h22 += 2.0 * (drr * rs + dr * dr);
      h12 += 2.0 * (drc * rs + dc * dr);
    }
    triplets.emplace_back(s, s, h11);
    triplets.emplace_back(m + s, m + s, h22);
    triplets.emplace_back(s, m + s, h12);
    triplets.emplace_back(m + s, s, h12);
  }

  // d-x coupling: centered differences of the adjoint contribution of each
  // pixel, treating the displacement as locally constant, then the C filter.
  {
    Eigen::VectorXd column(m);
    for (int s = 0; s < m; ++s) {
      if (!y.mask.observed_t0(s)) continue;
      const auto [row, col] = grid.position(s);
      const double pr = row + d.values[m + s];
      const double pc = col + d.values[s];
      for (int comp = 0; comp < 2; ++comp) {
        const double rp = comp == 1 ? pr + h : pr;
        const double rm = comp == 1 ? pr - h : pr;
        const double cp = comp == 0 ? pc + h : pc;
        const double cm = comp == 0 ? pc - h : pc;
        const Footprint fp = footprint_at(grid, rp, cp);
        const Footprint fm = footprint_at(grid, rm, cm);
        const int di = comp * m + s;
        for (int ch = 0; ch < k; ++ch) {
          const double y0 = y.y_t0.at(ch, s);
          double wp = 0.0, wm = 0.0;
          for (int t = 0; t < 16; ++t) {
            wp += fp.w[t] * coeffs.channel(ch)[fp.idx[t]];
            wm += fm.w[t] * coeffs.channel(ch)[fm.idx[t]];
          }
          column.setZero();
          const double inv2h = 0.5 / h;
          for (int t = 0; t < 16; ++t) {
            column[fp.idx[t]] += (wp - y0) * fp.w[t] * inv2h;
            column[fm.idx[t]] -= (wm - y0) * fm.w[t] * inv2h;
          }
          bspline_prefilter_2d(column, grid);
          const double drop = kColumnDropTolerance * column.cwiseAbs().maxCoeff();
          for (int r = 0; r < m; ++r) {
            const double v = 2.0 * column[r];
            if (std::abs(column[r]) <= drop) continue;
            triplets.emplace_back(di, (2 + ch) * m + r, v);
            triplets.emplace_back((2 + ch) * m + r, di, v);
          }
        }
      }
    }
  }

  // x-x data block: C S C^T with S the masked footprint Gram, same for every
  // channel, plus the t1 mask diagonal and the image prior.
  {
    std::vector<Eigen::Triplet<double>> s_triplets;
    for (int s = 0; s < m; ++s) {
      if (!y.mask.observed_t0(s)) continue;
      const auto [row, col] = grid.position(s);
      const Footprint fp = footprint_at(grid, row + d.values[m + s], col + d.values[s]);
      for (int a = 0; a < 16; ++a) {
        for (int b = 0; b < 16; ++b) {
          s_triplets.emplace_back(fp.idx[a], fp.idx[b], fp.w[a] * fp.w[b]);
        }
      }
    }
    Eigen::SparseMatrix<double> gram(m, m);
    gram.setFromTriplets(s_triplets.begin(), s_triplets.end());

    std::vector<Eigen::Triplet<double>> c_triplets;
    for (int s = 0; s < m; ++s) {
      const auto [r0, c0] = grid.position(s);
      for (std::size_t b = 0; b < c_band.value.size(); ++b) {
        c_triplets.emplace_back(s, grid.wrapped_index(r0 + c_band.drow[b], c0 + c_band.dcol[b]),
                                c_band.value[b]);
      }
    }
    Eigen::SparseMatrix<double> filter(m, m);
    filter.setFromTriplets(c_triplets.begin(), c_triplets.end());

    Eigen::SparseMatrix<double> data_block = filter * gram * filter.transpose();
    for (int col_idx = 0; col_idx < data_block.outerSize(); ++col_idx) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(data_block, col_idx); it; ++it) {
        const double v = 2.0 * it.value();
        for (int ch = 0; ch < k; ++ch) {
          triplets.emplace_back((2 + ch) * m + it.row(), (2 + ch) * m + it.col(), v);
        }
      }
    }
    for (int ch = 0; ch < k; ++ch) {
      for (int s = 0; s < m; ++s) {
        const double diag = 2.0 * params.gamma + (y.mask.observed_t1(s) ? 2.0 : 0.0);
        triplets.emplace_back((2 + ch) * m + s, (2 + ch) * m + s, diag);
      }
    }
  }

  SparseHessian out;
  out.grid = grid;
  out.channels = k;
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::SparseMatrix<double> diff = Eigen::SparseMatrix<double>(out.matrix.transpose()) -
                                     out.matrix;
  out.assembly_asymmetry = diff.coeffs().size() > 0 ? diff.coeffs().cwiseAbs().maxCoeff() : 0.0;
  const double scale = out.matrix.coeffs().cwiseAbs().maxCoeff();
  if (out.assembly_asymmetry > 1e-10 * std::max(1.0, scale)) {
    throw std::runtime_error("assemble_hessian: assembly is not symmetric");
  }
  out.matrix = 0.5 * (Eigen::SparseMatrix<double>(out.matrix.transpose()) + out.matrix);
  return out;
}

namespace {

// State indices within the (periodic Chebyshev) pixel neighborhood, and the
// Hessian restricted to them.
std::vector<int> neighborhood_indices(const SparseHessian& hessian, int pixel,
                                      int radius) {
  const PixelGrid grid = hessian.grid;
  const int m = grid.pixels();
  const auto [qr, qc] = grid.position(pixel);
  std::vector<int> local_pixels;
  for (int r = 0; r < grid.rows; ++r) {
    if (wrapped_distance(r - qr, grid.rows) > radius) continue;
    for (int c = 0; c < grid.cols; ++c) {
      if (wrapped_distance(c - qc, grid.cols) > radius) continue;
      local_pixels.push_back(grid.index(r, c));
    }
  }
  std::vector<int> indices;
  indices.reserve(local_pixels.size() * (2 + hessian.channels));
  for (int comp = 0; comp < 2 + hessian.channels; ++comp) {
    for (int p : local_pixels) indices.push_back(comp * m + p);
  }
  return indices;
}

Eigen::MatrixXd restrict_matrix(const SparseHessian& hessian,
                                const std::vector<int>& indices) {
  std::vector<int> local_of(hessian.matrix.rows(), -1);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    local_of[indices[i]] = static_cast<int>(i);
  }
  const int dim = static_cast<int>(indices.size());
  Eigen::MatrixXd restricted = Eigen::MatrixXd::Zero(dim, dim);
  for (int j = 0; j < dim; ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(hessian.matrix, indices[j]); it;
         ++it) {
      const int i = local_of[it.row()];
      if (i >= 0) restricted(i, j) = it.value();
    }
  }
  return restricted;
}

}  // namespace

LocalEvd local_evd(const SparseHessian& hessian, int pixel, int radius) {
  LocalEvd evd;
  evd.indices = neighborhood_indices(hessian, pixel, radius);
  const Eigen::MatrixXd restricted = restrict_matrix(hessian, evd.indices);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(restricted);
  evd.eigenvalues = solver.eigenvalues();
  evd.eigenvectors = solver.eigenvectors();
  evd.positive_definite = evd.eigenvalues.minCoeff() > 0.0;
  return evd;
}

ExpectedErrorMap laplace_error_map(const SparseHessian& hessian,
                                   const std::vector<int>& pixels, ObservableKind kind,
                                   int radius, int channel) {
  const PixelGrid grid = hessian.grid;
  const int m = grid.pixels();
  if (kind == ObservableKind::image &&
      (channel < 0 || channel >= hessian.channels)) {
    throw std::invalid_argument("laplace_error_map: bad channel");
  }

  ExpectedErrorMap map;
  map.grid = grid;
  map.ell = kind == ObservableKind::displacement ? 2 : 1;
  map.value = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN());

  const double factor = std::sqrt(2.0 / M_PI);
  for (int pixel : pixels) {
    const std::vector<int> indices = neighborhood_indices(hessian, pixel, radius);
    const Eigen::MatrixXd restricted = restrict_matrix(hessian, indices);
    // The norms ||Lambda^{-1/2} V^T psi_j|| are the quadratic forms
    // psi_j^T H'^{-1} psi_j; a Cholesky factorization evaluates them without
    // forming the eigenbasis and fails exactly when the restriction is
    // indefinite (the flagged case).
    const Eigen::LLT<Eigen::MatrixXd> llt(restricted);
    if (llt.info() != Eigen::Success) continue;  // flagged: entry stays NaN

    std::vector<int> rows;
    if (kind == ObservableKind::displacement) {
      rows = {pixel, m + pixel};
    } else {
      rows = {(2 + channel) * m + pixel};
    }
    double f = 0.0;
    for (int global : rows) {
      int local = -1;
      for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] == global) { local = static_cast<int>(i); break; }
      }
      Eigen::VectorXd e = Eigen::VectorXd::Zero(indices.size());
      e[local] = 1.0;
      llt.matrixL().solveInPlace(e);
      f += e.norm();
    }
    map.value[pixel] = factor * f;
  }
  return map;
}

ExpectedErrorMap laplace_error_map(const SparseHessian& hessian, ObservableKind kind,
                                   int radius, int channel) {
  std::vector<int> pixels(hessian.grid.pixels());
  for (int s = 0; s < hessian.grid.pixels(); ++s) pixels[s] = s;
  return laplace_error_map(hessian, pixels, kind, radius, channel);
}

}  // namespace amv
