#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "amv/bspline.hpp"
#include "amv/rng.hpp"
#include "oracles.hpp"

using namespace amv;

namespace {

ImageStack random_image(const PixelGrid& g, int k, Rng& rng) {
  ImageStack x = make_image(g, k);
  x.values = rng.normal_vector(x.values.size());
  return x;
}

// Dense periodic collocation matrix of the separable cubic B-spline basis.
Eigen::MatrixXd collocation_matrix(const PixelGrid& g) {
  const int m = g.pixels();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, m);
  for (int s = 0; s < m; ++s) {
    const auto [r, c] = g.position(s);
    for (int dr = -2; dr <= 2; ++dr) {
      for (int dc = -2; dc <= 2; ++dc) {
        b(s, g.wrapped_index(r + dr, c + dc)) += cubic_bspline(dr) * cubic_bspline(dc);
      }
    }
  }
  return b;
}

// Analytic spline derivative at the warped points (differentiated basis).
double analytic_deriv(const SplineCoeffs& c, int ch, double row, double col, bool horizontal) {
  double out = 0.0;
  const int br = static_cast<int>(std::floor(row)) - 1;
  const int bc = static_cast<int>(std::floor(col)) - 1;
  for (int t = 0; t < 4; ++t) {
    for (int u = 0; u < 4; ++u) {
      const double wr = horizontal ? cubic_bspline(row - (br + t))
                                   : cubic_bspline_deriv(row - (br + t));
      const double wc = horizontal ? cubic_bspline_deriv(col - (bc + u))
                                   : cubic_bspline(col - (bc + u));
      out += wr * wc * c.channel(ch)[c.grid.wrapped_index(br + t, bc + u)];
    }
  }
  return out;
}

}  // namespace

TEST_CASE("analysis of a constant image gives constant coefficients") {
  const PixelGrid g = make_grid(8, 8);
  ImageStack x = make_image(g, 1);
  x.values.setConstant(3.25);
  const SplineCoeffs c = bspline_analysis(x);
  CHECK((c.values.array() - 3.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("analysis then evaluation at grid points reproduces the image") {
  const PixelGrid g = make_grid(8, 16);
  Rng rng(2);
  const ImageStack x = random_image(g, 2, rng);
  const SplineCoeffs c = bspline_analysis(x);
  const ImageStack back = warp(c, make_displacement(g));
  const double rel = (back.values - x.values).norm() / x.values.norm();
  CHECK(rel < 1e-10);
}

TEST_CASE("coefficients match a dense collocation solve") {
  const PixelGrid g = make_grid(8, 8);
  Rng rng(4);
  const ImageStack x = random_image(g, 1, rng);
  const SplineCoeffs c = bspline_analysis(x);
  const Eigen::MatrixXd b = collocation_matrix(g);
  const Eigen::VectorXd dense = b.partialPivLu().solve(x.values);
  CHECK((c.values - dense).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("warping a constant image gives a constant for any displacement") {
  const PixelGrid g = make_grid(8, 8);
  Rng rng(6);
  ImageStack x = make_image(g, 1);
  x.values.setConstant(-1.5);
  DisplacementField d = make_displacement(g);
  d.values = 3.0 * rng.normal_vector(d.values.size());
  const ImageStack out = warp(bspline_analysis(x), d);
  CHECK((out.values.array() + 1.5).abs().maxCoeff() < 1e-11);
}

TEST_CASE("integer shift of a column ramp is exact away from the wrap seam") {
  const PixelGrid g = make_grid(8, 32);
  ImageStack x = make_image(g, 1);
  for (int s = 0; s < g.pixels(); ++s) x.values[s] = g.position(s).second;
  DisplacementField d = make_displacement(g);
  d.d1().setConstant(1.0);  // horizontal shift by one pixel
  const ImageStack out = warp(bspline_analysis(x), d);
  for (int s = 0; s < g.pixels(); ++s) {
    const int c = g.position(s).second;
    if (c <= g.cols - 2) {
      CHECK(out.values[s] == doctest::Approx(c + 1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("warp is linear in the coefficients") {
  const PixelGrid g = make_grid(8, 8);
  Rng rng(8);
  SplineCoeffs c1{g, 1, rng.normal_vector(g.pixels())};
  SplineCoeffs c2{g, 1, rng.normal_vector(g.pixels())};
  DisplacementField d = make_displacement(g);
  d.values = rng.normal_vector(d.values.size());
  SplineCoeffs mix{g, 1, 2.0 * c1.values - 0.5 * c2.values};
  const Eigen::VectorXd lhs = warp(mix, d).values;
  const Eigen::VectorXd rhs = 2.0 * warp(c1, d).values - 0.5 * warp(c2, d).values;
  CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("adjoint at zero displacement is the identity pairing") {
  const PixelGrid g = make_grid(8, 8);
  Rng rng(10);
  const ImageStack x = random_image(g, 1, rng);
  const ImageStack z = random_image(g, 1, rng);
  const SplineCoeffs c = bspline_analysis(x);
  const double lhs = warp(c, make_displacement(g)).values.dot(z.values);
  const double rhs = x.values.dot(warp_adjoint_image(make_displacement(g), z).values);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  const ImageStack zero = warp_adjoint_image(make_displacement(g), make_image(g, 1));
  CHECK(zero.values.isZero(0.0));
}

TEST_CASE("adjoint matches the dense Jacobian transpose") {
  const PixelGrid g = make_grid(8, 8);
  const int m = g.pixels();
  Rng rng(12);
  DisplacementField d = make_displacement(g);
  d.values = 1.5 * rng.normal_vector(2 * m);
  // The warp is linear in the image: materialize it column by column.
  const Eigen::MatrixXd jac = testing::dense_operator(
      [&](const Eigen::VectorXd& v) {
        ImageStack e = make_image(g, 1);
        e.values = v;
        return warp(bspline_analysis(e), d).values;
      },
      m);
  const ImageStack z = random_image(g, 1, rng);
  const Eigen::VectorXd expected = jac.transpose() * z.values;
  const Eigen::VectorXd got = warp_adjoint_image(d, z).values;
  CHECK((got - expected).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("adjoint consistency holds for arbitrary displacements") {
  const PixelGrid g = make_grid(8, 8);
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    DisplacementField d = make_displacement(g);
    d.values = 2.0 * rng.normal_vector(d.values.size());
    const ImageStack x = random_image(g, 2, rng);
    const ImageStack z = random_image(g, 2, rng);
    const double lhs = warp(bspline_analysis(x), d).values.dot(z.values);
    const double rhs = x.values.dot(warp_adjoint_image(d, z).values);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("an evaluation touches only the 4x4 coefficient cell") {
  const PixelGrid g = make_grid(16, 16);
  Rng rng(16);
  SplineCoeffs c{g, 1, rng.normal_vector(g.pixels())};
  DisplacementField d = make_displacement(g);
  d.d1()[0] = 0.37;
  d.d2()[0] = -0.61;
  const double before = warp(c, d).values[0];
  // perturb a coefficient three cells away from pixel 0
  c.values[g.index(5, 5)] += 100.0;
  const double after = warp(c, d).values[0];
  CHECK(before == after);
}

TEST_CASE("spatial derivatives of a constant image vanish") {
  const PixelGrid g = make_grid(8, 8);
  Rng rng(18);
  ImageStack x = make_image(g, 1);
  x.values.setConstant(2.0);
  DisplacementField d = make_displacement(g);
  d.values = rng.normal_vector(d.values.size());
  const auto [dh, dv] = warp_spatial_derivs(bspline_analysis(x), d);
  CHECK(dh.values.lpNorm<Eigen::Infinity>() < 1e-9);
  CHECK(dv.values.lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("ramp image has unit horizontal and zero vertical derivative") {
  // the seam discontinuity of the periodic ramp decays like |z1|^distance, so
  // only the middle third of a wide grid sits below the tolerance
  const PixelGrid g = make_grid(8, 64);
  ImageStack x = make_image(g, 1);
  for (int s = 0; s < g.pixels(); ++s) x.values[s] = g.position(s).second;
  const auto [dh, dv] = warp_spatial_derivs(bspline_analysis(x), make_displacement(g));
  for (int s = 0; s < g.pixels(); ++s) {
    const int c = g.position(s).second;
    if (c >= 21 && c <= 42) {
      CHECK(dh.values[s] == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(std::abs(dv.values[s]) < 1e-6);
    }
  }
}

TEST_CASE("finite-difference derivative converges to the analytic one at O(h^2)") {
  const PixelGrid g = make_grid(16, 16);
  Rng rng(20);
  ImageStack x = make_image(g, 1);
  x.values = rng.normal_vector(g.pixels());
  const SplineCoeffs c = bspline_analysis(x);
  // keep evaluation points clear of the spline knots so the centered stencil
  // stays inside one polynomial piece while h is halved
  DisplacementField d = make_displacement(g);
  for (Eigen::Index i = 0; i < d.values.size(); ++i) {
    d.values[i] = 0.25 + 0.2 * rng.uniform();
  }

  auto max_error = [&](double h) {
    const auto [dh, dv] = warp_spatial_derivs(c, d, h);
    double err = 0.0;
    for (int s = 0; s < g.pixels(); ++s) {
      const auto [r0, c0] = g.position(s);
      const double pr = r0 + d.d2()[s];
      const double pc = c0 + d.d1()[s];
      err = std::max(err, std::abs(dh.values[s] - analytic_deriv(c, 0, pr, pc, true)));
      err = std::max(err, std::abs(dv.values[s] - analytic_deriv(c, 0, pr, pc, false)));
    }
    return err;
  };

  const double e1 = max_error(0.02);
  const double e2 = max_error(0.01);
  CHECK(e1 / e2 >= 3.5);
  CHECK(max_error(1e-3) < 1e-5);
}
