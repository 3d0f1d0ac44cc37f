#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "amv/grid.hpp"

namespace amv {

enum class ObservableKind { displacement, image };

/// Per-pixel expected error of a linear observable with ell components.
/// Entries may be NaN where the estimate is unavailable (flagged pixels).
struct ExpectedErrorMap {
  PixelGrid grid;
  int ell = 1;
  Eigen::VectorXd value;

  /// Companion lower bound value / sqrt(ell) (norm-equivalence direction).
  Eigen::VectorXd lower() const { return value / std::sqrt(static_cast<double>(ell)); }
};

}  // namespace amv
