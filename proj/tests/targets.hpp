// Analytic sampling targets used by the MCMC and acceptance suites.
#pragma once

#include <Eigen/Dense>

#include "amv/mcmc.hpp"

namespace amv::testing {

/// N(mu, A^{-1}) written as the energy 0.5 (x-mu)^T A (x-mu).
class GaussianTarget final : public Target {
 public:
  GaussianTarget(Eigen::MatrixXd precision, Eigen::VectorXd mean)
      : precision_(std::move(precision)), mean_(std::move(mean)) {}

  double energy(const Eigen::VectorXd& x) const override {
    const Eigen::VectorXd r = x - mean_;
    return 0.5 * r.dot(precision_ * r);
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
    return precision_ * (x - mean_);
  }

  Eigen::MatrixXd covariance() const { return precision_.inverse(); }
  const Eigen::VectorXd& mean() const { return mean_; }

 private:
  Eigen::MatrixXd precision_;
  Eigen::VectorXd mean_;
};

/// Quadratic bowl with a bounded-third-derivative perturbation:
/// U(x) = 0.5 x^T A x + eps sum_i s(x_i), s(t) = t^3 / (1 + t^2).
class QuadraticCubicTarget final : public Target {
 public:
  QuadraticCubicTarget(Eigen::MatrixXd a, double eps) : a_(std::move(a)), eps_(eps) {}

  double energy(const Eigen::VectorXd& x) const override {
    double u = 0.5 * x.dot(a_ * x);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double t = x[i];
      u += eps_ * t * t * t / (1.0 + t * t);
    }
    return u;
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
    Eigen::VectorXd g = a_ * x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double t = x[i];
      const double q = 1.0 + t * t;
      g[i] += eps_ * (t * t * (t * t + 3.0)) / (q * q);
    }
    return g;
  }

  /// Newton solve for the stationary point.
  Eigen::VectorXd map_estimate() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(a_.rows());
    for (int it = 0; it < 100; ++it) {
      const Eigen::VectorXd g = gradient(x);
      if (g.norm() < 1e-14) break;
      x -= hessian(x).ldlt().solve(g);
    }
    return x;
  }
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd h = a_;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double t = x[i];
      const double q = 1.0 + t * t;
      h(i, i) += eps_ * (2.0 * t * (t * t + 3.0) / (q * q) +
                         t * t * (2.0 * t) / (q * q) -
                         t * t * (t * t + 3.0) * 4.0 * t / (q * q * q));
    }
    return h;
  }

 private:
  Eigen::MatrixXd a_;
  double eps_;
};

/// Dense covariance preconditioner for small analytic targets.
class DensePreconditioner final : public Preconditioner {
 public:
  explicit DensePreconditioner(const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> evd(cov);
    const Eigen::VectorXd lam = evd.eigenvalues();
    const Eigen::MatrixXd v = evd.eigenvectors();
    cov_ = cov;
    prec_ = v * lam.cwiseInverse().asDiagonal() * v.transpose();
    sqrt_ = v * lam.cwiseSqrt().asDiagonal() * v.transpose();
    isqrt_ = v * lam.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  }
  Eigen::VectorXd cov(const Eigen::VectorXd& v) const override { return cov_ * v; }
  Eigen::VectorXd prec(const Eigen::VectorXd& v) const override { return prec_ * v; }
  Eigen::VectorXd sqrt_fwd(const Eigen::VectorXd& v) const override { return sqrt_ * v; }
  Eigen::VectorXd sqrt_inv(const Eigen::VectorXd& v) const override { return isqrt_ * v; }

 private:
  Eigen::MatrixXd cov_, prec_, sqrt_, isqrt_;
};

/// Batch-means standard error of the mean of a correlated scalar series.
inline double batch_means_se(const Eigen::VectorXd& series, int batches = 50) {
  const Eigen::Index n = series.size();
  const Eigen::Index len = n / batches;
  Eigen::VectorXd means(batches);
  for (int b = 0; b < batches; ++b) {
    means[b] = series.segment(b * len, len).mean();
  }
  const double grand = means.mean();
  const double var = (means.array() - grand).square().sum() / (batches - 1);
  return std::sqrt(var / batches);
}

}  // namespace amv::testing
