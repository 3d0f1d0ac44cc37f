// Linear-Gaussian optical-flow instance: the warp is linearized at d = 0
// around a fixed texture, so the posterior is exactly Gaussian and the
// Hessian is known in closed form. Used to validate Laplace error maps
// against MCMC oracles.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "amv/bspline.hpp"
#include "amv/fbm.hpp"
#include "amv/laplace.hpp"
#include "amv/mcmc.hpp"
#include "amv/rng.hpp"

namespace amv::testing {

class LinearFlowTarget final : public Target {
 public:
  LinearFlowTarget(PixelGrid grid, double alpha, double gamma, double hurst, Rng& rng,
                   double mask_fraction, double noise)
      : grid_(grid), alpha_(alpha), gamma_(gamma), hurst_(hurst) {
    const int m = grid.pixels();

    // gradient fields of a smooth texture at d = 0
    ImageStack texture = make_image(grid, 1);
    Eigen::VectorXd tex = fbm_sample(rng, 0.5, grid);
    tex /= std::sqrt(tex.squaredNorm() / m);
    texture.channel(0) = tex;
    const SplineCoeffs coeffs = bspline_analysis(texture);
    const auto [dh, dv] = warp_spatial_derivs(coeffs, make_displacement(grid));
    g1_ = dh.values;
    g2_ = dv.values;

    mask0_.resize(m);
    mask1_.resize(m);
    for (int s = 0; s < m; ++s) {
      mask0_[s] = rng.uniform() < mask_fraction ? 1.0 : 0.0;
      mask1_[s] = rng.uniform() < mask_fraction ? 1.0 : 0.0;
    }
    mask0_[0] = mask1_[0] = 1.0;

    // observations from a prior draw of the linear model
    FbmOperator prior(grid, hurst);
    truth_ = Eigen::VectorXd::Zero(3 * m);
    truth_.segment(0, m) = prior.sample(rng) / std::sqrt(2.0 * alpha);
    truth_.segment(m, m) = prior.sample(rng) / std::sqrt(2.0 * alpha);
    truth_.segment(2 * m, m) = rng.normal_vector(m) / std::sqrt(2.0 * gamma);
    y0_ = forward_t0(truth_) + noise * rng.normal_vector(m);
    y1_ = truth_.segment(2 * m, m) + noise * rng.normal_vector(m);
  }

  Eigen::VectorXd forward_t0(const Eigen::VectorXd& x) const {
    const int m = grid_.pixels();
    return x.segment(2 * m, m) + g1_.cwiseProduct(x.segment(0, m)) +
           g2_.cwiseProduct(x.segment(m, m));
  }

  double energy(const Eigen::VectorXd& x) const override {
    const int m = grid_.pixels();
    const Eigen::VectorXd r0 = mask0_.cwiseProduct(forward_t0(x) - y0_);
    const Eigen::VectorXd r1 = mask1_.cwiseProduct(x.segment(2 * m, m) - y1_);
    FbmOperator prior(grid_, hurst_);
    const Eigen::VectorXd d1 = x.segment(0, m);
    const Eigen::VectorXd d2 = x.segment(m, m);
    return r0.squaredNorm() + r1.squaredNorm() +
           alpha_ * (d1.dot(prior.prec_apply(d1)) + d2.dot(prior.prec_apply(d2))) +
           gamma_ * x.segment(2 * m, m).squaredNorm();
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
    const int m = grid_.pixels();
    const Eigen::VectorXd r0 = mask0_.cwiseProduct(forward_t0(x) - y0_);
    const Eigen::VectorXd r1 = mask1_.cwiseProduct(x.segment(2 * m, m) - y1_);
    FbmOperator prior(grid_, hurst_);
    Eigen::VectorXd g(3 * m);
    g.segment(0, m) =
        2.0 * alpha_ * prior.prec_apply(x.segment(0, m)) + 2.0 * g1_.cwiseProduct(r0);
    g.segment(m, m) =
        2.0 * alpha_ * prior.prec_apply(x.segment(m, m)) + 2.0 * g2_.cwiseProduct(r0);
    g.segment(2 * m, m) =
        2.0 * gamma_ * x.segment(2 * m, m) + 2.0 * r0 + 2.0 * r1;
    return g;
  }

  /// Exact sparse Hessian: banded fBm precision plus diagonal data couplings.
  SparseHessian hessian(int band_radius) const {
    const int m = grid_.pixels();
    FbmOperator prior(grid_, hurst_);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(m);
    delta[0] = 1.0;
    const Eigen::VectorXd kernel = prior.prec_apply(delta);

    std::vector<Eigen::Triplet<double>> triplets;
    auto wrapped = [&](int d, int n) {
      d = ((d % n) + n) % n;
      return std::min(d, n - d);
    };
    for (int s = 0; s < m; ++s) {
      const auto [r0, c0] = grid_.position(s);
      for (int r = 0; r < grid_.rows; ++r) {
        if (wrapped(r, grid_.rows) > band_radius) continue;
        for (int c = 0; c < grid_.cols; ++c) {
          if (wrapped(c, grid_.cols) > band_radius) continue;
          const double v = kernel[grid_.index(r, c)];
          if (std::abs(v) < 1e-8 * std::abs(kernel[0])) continue;
          const int t = grid_.wrapped_index(r0 + r, c0 + c);
          triplets.emplace_back(s, t, 2.0 * alpha_ * v);
          triplets.emplace_back(m + s, m + t, 2.0 * alpha_ * v);
        }
      }
    }
    for (int s = 0; s < m; ++s) {
      const double m0 = mask0_[s];
      const double m1 = mask1_[s];
      triplets.emplace_back(s, s, 2.0 * m0 * g1_[s] * g1_[s]);
      triplets.emplace_back(m + s, m + s, 2.0 * m0 * g2_[s] * g2_[s]);
      triplets.emplace_back(s, m + s, 2.0 * m0 * g1_[s] * g2_[s]);
      triplets.emplace_back(m + s, s, 2.0 * m0 * g1_[s] * g2_[s]);
      triplets.emplace_back(s, 2 * m + s, 2.0 * m0 * g1_[s]);
      triplets.emplace_back(2 * m + s, s, 2.0 * m0 * g1_[s]);
      triplets.emplace_back(m + s, 2 * m + s, 2.0 * m0 * g2_[s]);
      triplets.emplace_back(2 * m + s, m + s, 2.0 * m0 * g2_[s]);
      triplets.emplace_back(2 * m + s, 2 * m + s, 2.0 * (gamma_ + m0 + m1));
    }
    SparseHessian h;
    h.grid = grid_;
    h.channels = 1;
    h.matrix.resize(3 * m, 3 * m);
    h.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return h;
  }

  /// Dense Hessian without band truncation (exact covariance oracle).
  Eigen::MatrixXd dense_hessian() const {
    const int m = grid_.pixels();
    FbmOperator prior(grid_, hurst_);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3 * m, 3 * m);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < m; ++j) {
      e[j] = 1.0;
      const Eigen::VectorXd col = prior.prec_apply(e);
      h.block(0, j, m, 1) = 2.0 * alpha_ * col;
      h.block(m, m + j, m, 1) = 2.0 * alpha_ * col;
      e[j] = 0.0;
    }
    for (int s = 0; s < m; ++s) {
      const double m0 = mask0_[s];
      const double m1 = mask1_[s];
      h(s, s) += 2.0 * m0 * g1_[s] * g1_[s];
      h(m + s, m + s) += 2.0 * m0 * g2_[s] * g2_[s];
      h(s, m + s) += 2.0 * m0 * g1_[s] * g2_[s];
      h(m + s, s) += 2.0 * m0 * g1_[s] * g2_[s];
      h(s, 2 * m + s) += 2.0 * m0 * g1_[s];
      h(2 * m + s, s) += 2.0 * m0 * g1_[s];
      h(m + s, 2 * m + s) += 2.0 * m0 * g2_[s];
      h(2 * m + s, m + s) += 2.0 * m0 * g2_[s];
      h(2 * m + s, 2 * m + s) += 2.0 * (gamma_ + m0 + m1);
    }
    return h;
  }

  const PixelGrid& grid() const { return grid_; }
  const Eigen::VectorXd& truth() const { return truth_; }

 private:
  PixelGrid grid_;
  double alpha_, gamma_, hurst_;
  Eigen::VectorXd g1_, g2_;      // texture gradients (diagonal couplings)
  Eigen::VectorXd mask0_, mask1_;
  Eigen::VectorXd y0_, y1_;
  Eigen::VectorXd truth_;
};

}  // namespace amv::testing
