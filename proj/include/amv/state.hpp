#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "amv/grid.hpp"

namespace amv {

/// Stack of k scalar fields on a common grid. Values are stored channel-major:
/// channel 0 pixels, then channel 1 pixels, and so on (row-major inside a channel).
struct ImageStack {
  PixelGrid grid;
  int channels = 1;
  Eigen::VectorXd values;  // size channels * grid.pixels()

  double& at(int channel, int s) { return values[channel * grid.pixels() + s]; }
  double at(int channel, int s) const { return values[channel * grid.pixels() + s]; }
  Eigen::Ref<Eigen::VectorXd> channel(int c) {
    return values.segment(c * grid.pixels(), grid.pixels());
  }
  Eigen::Ref<const Eigen::VectorXd> channel(int c) const {
    return values.segment(c * grid.pixels(), grid.pixels());
  }
};

ImageStack make_image(PixelGrid grid, int channels);

/// Dense 2-D displacement field in pixels. Component 1 is horizontal (columns),
/// component 2 vertical (rows); stored as the d1 block followed by the d2 block.
struct DisplacementField {
  PixelGrid grid;
  Eigen::VectorXd values;  // size 2 * grid.pixels()

  Eigen::Ref<Eigen::VectorXd> d1() { return values.segment(0, grid.pixels()); }
  Eigen::Ref<const Eigen::VectorXd> d1() const { return values.segment(0, grid.pixels()); }
  Eigen::Ref<Eigen::VectorXd> d2() { return values.segment(grid.pixels(), grid.pixels()); }
  Eigen::Ref<const Eigen::VectorXd> d2() const {
    return values.segment(grid.pixels(), grid.pixels());
  }
};

DisplacementField make_displacement(PixelGrid grid);

/// Joint variable (d, x_t1) in one flat vector with the fixed layout
/// [d1 | d2 | x channel 0 | ... | x channel k-1].
struct StateVector {
  PixelGrid grid;
  int channels = 1;
  Eigen::VectorXd values;  // size (2 + channels) * grid.pixels()

  int size() const { return static_cast<int>(values.size()); }

  Eigen::Ref<Eigen::VectorXd> d1() { return values.segment(0, grid.pixels()); }
  Eigen::Ref<const Eigen::VectorXd> d1() const { return values.segment(0, grid.pixels()); }
  Eigen::Ref<Eigen::VectorXd> d2() { return values.segment(grid.pixels(), grid.pixels()); }
  Eigen::Ref<const Eigen::VectorXd> d2() const {
    return values.segment(grid.pixels(), grid.pixels());
  }
  Eigen::Ref<Eigen::VectorXd> image() {
    return values.segment(2 * grid.pixels(), channels * grid.pixels());
  }
  Eigen::Ref<const Eigen::VectorXd> image() const {
    return values.segment(2 * grid.pixels(), channels * grid.pixels());
  }
  Eigen::Ref<Eigen::VectorXd> image_channel(int c) {
    return values.segment((2 + c) * grid.pixels(), grid.pixels());
  }
  Eigen::Ref<const Eigen::VectorXd> image_channel(int c) const {
    return values.segment((2 + c) * grid.pixels(), grid.pixels());
  }

  DisplacementField displacement() const;
  ImageStack image_stack() const;
};

StateVector make_state(PixelGrid grid, int channels);
StateVector pack_state(const DisplacementField& d, const ImageStack& x);
std::pair<DisplacementField, ImageStack> unpack_state(const StateVector& theta);

/// Per-time observation masks. An entry is true where the pixel was observed.
struct ObservationMask {
  PixelGrid grid;
  std::vector<std::uint8_t> t0;
  std::vector<std::uint8_t> t1;

  bool observed_t0(int s) const { return t0[s] != 0; }
  bool observed_t1(int s) const { return t1[s] != 0; }
  /// Joint mask: pixels observed at both times.
  bool observed_joint(int s) const { return t0[s] && t1[s]; }
  int count_t0() const;
  int count_t1() const;
  int count_joint() const;
};

ObservationMask make_full_mask(PixelGrid grid);
ObservationMask make_empty_mask(PixelGrid grid);
/// Throws unless each time has at least one observed pixel.
void validate_mask(const ObservationMask& mask);

struct ObservationSet {
  ImageStack y_t0;
  ImageStack y_t1;
  ObservationMask mask;

  PixelGrid grid() const { return y_t0.grid; }
  int channels() const { return y_t0.channels; }
};

ObservationSet make_observations(ImageStack y_t0, ImageStack y_t1, ObservationMask mask);

/// Residuals x_t - y_t on observed pixels, zero elsewhere; one block per time.
struct ResidualVector {
  PixelGrid grid;
  int channels = 1;
  Eigen::VectorXd t0;  // size channels * pixels
  Eigen::VectorXd t1;

  double squared_norm() const { return t0.squaredNorm() + t1.squaredNorm(); }
};

/// warped_x_t0 must be W(x_t1, d) computed by the spline warp.
ResidualVector residual(const StateVector& theta, const ObservationSet& y,
                        const ImageStack& warped_x_t0);

}  // namespace amv
