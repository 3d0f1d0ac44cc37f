#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "amv/energy.hpp"
#include "amv/rng.hpp"
#include "oracles.hpp"

using namespace amv;

namespace {

// Synthetic instance with smooth fields: truth drawn from the prior, partial
// random mask, observations warped from the truth plus optional noise.
struct Instance {
  StateVector truth;
  ObservationSet y;
};

Instance make_instance(const PixelGrid& g, int k, Rng& rng, double p_obs,
                       double noise, double d_scale = 1.0) {
  DisplacementField d = make_displacement(g);
  d.d1() = d_scale * fbm_sample(rng, 1.0, g);
  d.d2() = d_scale * fbm_sample(rng, 1.0, g);
  ImageStack x = make_image(g, k);
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd tex = fbm_sample(rng, 0.5, g);
    tex /= std::sqrt(tex.squaredNorm() / g.pixels());
    x.channel(c) = tex;
  }
  ImageStack y0 = warp(bspline_analysis(x), d);
  ImageStack y1 = x;
  ObservationMask mask = make_empty_mask(g);
  for (int s = 0; s < g.pixels(); ++s) {
    mask.t0[s] = rng.uniform() < p_obs ? 1 : 0;
    mask.t1[s] = rng.uniform() < p_obs ? 1 : 0;
  }
  mask.t0[0] = mask.t1[0] = 1;
  if (noise > 0.0) {
    for (Eigen::Index i = 0; i < y0.values.size(); ++i) {
      y0.values[i] += noise * rng.normal();
      y1.values[i] += noise * rng.normal();
    }
  }
  Instance inst{pack_state(d, x), make_observations(y0, y1, mask)};
  return inst;
}

}  // namespace

TEST_CASE("likelihood vanishes for exact-fit states and empty masks") {
  const PixelGrid g = make_grid(8, 8);
  Rng rng(1);
  const Instance inst = make_instance(g, 1, rng, 0.7, 0.0);
  CHECK(likelihood_energy(inst.truth, inst.y) < 1e-18);

  ObservationSet empty = inst.y;
  empty.mask = make_empty_mask(g);
  StateVector random_theta = make_state(g, 1);
  random_theta.values = rng.normal_vector(random_theta.size());
  CHECK(likelihood_energy(random_theta, empty) == 0.0);
}

TEST_CASE("single observed pixel with residual 0.5 contributes 0.25") {
  const PixelGrid g = make_grid(4, 4);
  StateVector theta = make_state(g, 1);  // zero state: warp of zero image is zero
  ImageStack y0 = make_image(g, 1);
  y0.at(0, 5) = -0.5;  // residual = 0 - (-0.5) = 0.5
  ObservationMask mask = make_empty_mask(g);
  mask.t0[5] = 1;
  const ObservationSet y = make_observations(y0, make_image(g, 1), mask);
  CHECK(likelihood_energy(theta, y) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("prior energy: zero state, constant displacement, dense oracle") {
  const PixelGrid g = make_grid(8, 8);
  const int m = g.pixels();
  ModelParams params;
  params.alpha = 0.7;
  params.gamma = 1.3;
  params.hurst_prior = 1.0;

  CHECK(prior_energy(make_state(g, 1), params) == 0.0);

  StateVector constant = make_state(g, 1);
  constant.d1().setConstant(5.0);
  constant.d2().setConstant(-3.0);
  CHECK(std::abs(prior_energy(constant, params)) < 1e-10);

  Rng rng(3);
  StateVector theta = make_state(g, 1);
  theta.values = rng.normal_vector(theta.size());
  const FbmOperator op(g, params.hurst_prior);
  const Eigen::MatrixXd prec = testing::dense_operator(
      [&](const Eigen::VectorXd& v) { return op.prec_apply(v); }, m);
  const double expected =
      params.alpha * (theta.d1().dot(prec * theta.d1()) + theta.d2().dot(prec * theta.d2())) +
      params.gamma * theta.image().squaredNorm();
  CHECK(prior_energy(theta, params) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("gibbs energy is the sum of its parts") {
  const PixelGrid g = make_grid(8, 8);
  Rng rng(5);
  const Instance inst = make_instance(g, 2, rng, 0.5, 0.05);
  ModelParams params;
  StateVector theta = make_state(g, 2);
  theta.values = inst.truth.values + 0.1 * rng.normal_vector(theta.size());
  const EnergyValue e = gibbs_energy(theta, inst.y, params);
  CHECK(e.total == doctest::Approx(e.likelihood + e.prior).epsilon(1e-14));
  CHECK(e.likelihood == doctest::Approx(likelihood_energy(theta, inst.y)).epsilon(1e-12));
  CHECK(e.prior == doctest::Approx(prior_energy(theta, params)).epsilon(1e-12));
}

TEST_CASE("gradient vanishes at the prior-only minimum and at zero residual") {
  const PixelGrid g = make_grid(8, 8);
  ModelParams params;
  ImageStack y0 = make_image(g, 1);
  ImageStack y1 = make_image(g, 1);
  const ObservationSet y = make_observations(y0, y1, make_empty_mask(g));
  const StateVector zero = make_state(g, 1);
  CHECK(gradient(zero, y, params).values.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("analytic gradient matches central finite differences of the energy") {
  const PixelGrid g = make_grid(16, 16);
  Rng rng(7);
  const Instance inst = make_instance(g, 1, rng, 0.6, 0.0);
  ModelParams params;
  params.alpha = 0.5;
  params.gamma = 1.0;

  // evaluate away from the exact fit so all energy terms are active
  StateVector theta = make_state(g, 1);
  theta.values = inst.truth.values;
  theta.d1() += 0.3 * fbm_sample(rng, 1.0, g);
  theta.d2() += 0.3 * fbm_sample(rng, 1.0, g);
  theta.image() += 0.2 * rng.normal_vector(g.pixels());

  const StateVector analytic = gradient(theta, inst.y, params);
  const double scale = analytic.values.lpNorm<Eigen::Infinity>();
  const double step = 1e-5;

  double max_rel = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int i = static_cast<int>(rng.uniform() * theta.size());
    StateVector probe = theta;
    probe.values[i] += step;
    const double up = gibbs_energy(probe, inst.y, params).total;
    probe.values[i] = theta.values[i] - step;
    const double down = gibbs_energy(probe, inst.y, params).total;
    const double fd = (up - down) / (2.0 * step);
    // floor guards coordinates where the gradient nearly cancels
    const double rel = std::abs(analytic.values[i] - fd) / std::max(std::abs(fd), 1e-3 * scale);
    max_rel = std::max(max_rel, rel);
  }
  CHECK(max_rel < 1e-5);
}

TEST_CASE("tempering scales energy and gradient by 1/zeta") {
  const PixelGrid g = make_grid(8, 8);
  Rng rng(9);
  const Instance inst = make_instance(g, 1, rng, 0.5, 0.02);
  StateVector theta = make_state(g, 1);
  theta.values = inst.truth.values + 0.05 * rng.normal_vector(theta.size());

  ModelParams params;
  params.zeta = 1.0;
  const double u1 = tempered_energy(theta, inst.y, params);
  CHECK(u1 == doctest::Approx(gibbs_energy(theta, inst.y, params).total).epsilon(1e-14));

  params.zeta = 0.5;
  CHECK(tempered_energy(theta, inst.y, params) == doctest::Approx(2.0 * u1).epsilon(1e-12));
  const StateVector g1 = gradient(theta, inst.y, params);
  const StateVector gt = tempered_gradient(theta, inst.y, params);
  CHECK((gt.values - 2.0 * g1.values).lpNorm<Eigen::Infinity>() <
        1e-12 * g1.values.lpNorm<Eigen::Infinity>());

  params.zeta = 0.0;
  CHECK_THROWS_AS(tempered_energy(theta, inst.y, params), std::invalid_argument);
  params.zeta = 1.5;
  CHECK_THROWS_AS(tempered_gradient(theta, inst.y, params), std::invalid_argument);
}

TEST_CASE("tempered gradient agrees with finite differences of the tempered energy") {
  const PixelGrid g = make_grid(8, 8);
  Rng rng(11);
  const Instance inst = make_instance(g, 1, rng, 0.5, 0.0);
  ModelParams params;
  params.zeta = 0.37;
  StateVector theta = make_state(g, 1);
  theta.values = inst.truth.values + 0.1 * rng.normal_vector(theta.size());
  const StateVector gt = tempered_gradient(theta, inst.y, params);
  const double scale = gt.values.lpNorm<Eigen::Infinity>();
  const double step = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    const int i = static_cast<int>(rng.uniform() * theta.size());
    StateVector probe = theta;
    probe.values[i] += step;
    const double up = tempered_energy(probe, inst.y, params);
    probe.values[i] = theta.values[i] - step;
    const double down = tempered_energy(probe, inst.y, params);
    const double fd = (up - down) / (2.0 * step);
    CHECK(std::abs(gt.values[i] - fd) / std::max(std::abs(fd), 1e-3 * scale) < 1e-5);
  }
}

TEST_CASE("rescale_sample matches its closed form") {
  const PixelGrid g = make_grid(4, 4);
  Rng rng(13);
  StateVector hat = make_state(g, 1);
  hat.values = rng.normal_vector(hat.size());
  StateVector tilde = make_state(g, 1);
  tilde.values = rng.normal_vector(tilde.size());

  const StateVector same = rescale_sample(tilde, hat, 1.0);
  CHECK((same.values - tilde.values).lpNorm<Eigen::Infinity>() < 1e-15);

  const StateVector center = rescale_sample(hat, hat, 0.01);
  CHECK((center.values - hat.values).lpNorm<Eigen::Infinity>() < 1e-15);

  const Eigen::VectorXd v = tilde.values - hat.values;
  const StateVector quarter = rescale_sample(tilde, hat, 0.25);
  CHECK((quarter.values - (hat.values + 2.0 * v)).lpNorm<Eigen::Infinity>() < 1e-12);

  CHECK_THROWS_AS(rescale_sample(tilde, hat, 0.0), std::invalid_argument);
}
