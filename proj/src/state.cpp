#include "amv/state.hpp"

#include <numeric>

namespace amv {

ImageStack make_image(PixelGrid grid, int channels) {
  if (channels < 1) throw std::invalid_argument("channel count must be positive");
  ImageStack x;
  x.grid = grid;
  x.channels = channels;
  x.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(channels) * grid.pixels());
  return x;
}

DisplacementField make_displacement(PixelGrid grid) {
  DisplacementField d;
  d.grid = grid;
  d.values = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(grid.pixels()));
  return d;
}

StateVector make_state(PixelGrid grid, int channels) {
  if (channels < 1) throw std::invalid_argument("channel count must be positive");
  StateVector theta;
  theta.grid = grid;
  theta.channels = channels;
  theta.values =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 + channels) * grid.pixels());
  return theta;
}

DisplacementField StateVector::displacement() const {
  DisplacementField d;
  d.grid = grid;
  d.values = values.segment(0, 2 * grid.pixels());
  return d;
}

ImageStack StateVector::image_stack() const {
  ImageStack x;
  x.grid = grid;
  x.channels = channels;
  x.values = values.segment(2 * grid.pixels(), channels * grid.pixels());
  return x;
}

StateVector pack_state(const DisplacementField& d, const ImageStack& x) {
  if (!(d.grid == x.grid)) throw std::invalid_argument("pack_state: grid mismatch");
  StateVector theta = make_state(d.grid, x.channels);
  theta.values.segment(0, 2 * d.grid.pixels()) = d.values;
  theta.image() = x.values;
  return theta;
}

std::pair<DisplacementField, ImageStack> unpack_state(const StateVector& theta) {
  return {theta.displacement(), theta.image_stack()};
}

int ObservationMask::count_t0() const {
  return static_cast<int>(std::accumulate(t0.begin(), t0.end(), 0));
}

int ObservationMask::count_t1() const {
  return static_cast<int>(std::accumulate(t1.begin(), t1.end(), 0));
}

int ObservationMask::count_joint() const {
  int n = 0;
  for (std::size_t s = 0; s < t0.size(); ++s) n += (t0[s] && t1[s]) ? 1 : 0;
  return n;
}

ObservationMask make_full_mask(PixelGrid grid) {
  ObservationMask m;
  m.grid = grid;
  m.t0.assign(grid.pixels(), 1);
  m.t1.assign(grid.pixels(), 1);
  return m;
}

ObservationMask make_empty_mask(PixelGrid grid) {
  ObservationMask m;
  m.grid = grid;
  m.t0.assign(grid.pixels(), 0);
  m.t1.assign(grid.pixels(), 0);
  return m;
}

void validate_mask(const ObservationMask& mask) {
  if (static_cast<int>(mask.t0.size()) != mask.grid.pixels() ||
      static_cast<int>(mask.t1.size()) != mask.grid.pixels()) {
    throw std::invalid_argument("mask size does not match grid");
  }
  if (mask.count_t0() == 0 || mask.count_t1() == 0) {
    throw std::invalid_argument("each time must have at least one observed pixel");
  }
}

ObservationSet make_observations(ImageStack y_t0, ImageStack y_t1, ObservationMask mask) {
  if (!(y_t0.grid == y_t1.grid) || !(y_t0.grid == mask.grid)) {
    throw std::invalid_argument("observations: grid mismatch");
  }
  if (y_t0.channels != y_t1.channels) {
    throw std::invalid_argument("observations: channel mismatch");
  }
  return ObservationSet{std::move(y_t0), std::move(y_t1), std::move(mask)};
}

ResidualVector residual(const StateVector& theta, const ObservationSet& y,
                        const ImageStack& warped_x_t0) {
  const PixelGrid grid = theta.grid;
  if (!(grid == y.grid()) || !(grid == warped_x_t0.grid) ||
      theta.channels != y.channels() || theta.channels != warped_x_t0.channels) {
    throw std::invalid_argument("residual: dimension mismatch");
  }
  const int m = grid.pixels();
  const int k = theta.channels;
  ResidualVector r;
  r.grid = grid;
  r.channels = k;
  r.t0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k) * m);
  r.t1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k) * m);
  for (int c = 0; c < k; ++c) {
    for (int s = 0; s < m; ++s) {
      if (y.mask.observed_t0(s)) {
        r.t0[c * m + s] = warped_x_t0.at(c, s) - y.y_t0.at(c, s);
      }
      if (y.mask.observed_t1(s)) {
        r.t1[c * m + s] = theta.image_channel(c)[s] - y.y_t1.at(c, s);
      }
    }
  }
  return r;
}

}  // namespace amv
