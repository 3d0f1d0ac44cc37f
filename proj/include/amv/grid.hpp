#pragma once

#include <stdexcept>
#include <utility>

namespace amv {

/// Rectangular pixel grid with row-major, 0-based flat indexing.
/// Rows and columns must be powers of two (FFT and wavelet modules rely on it).
struct PixelGrid {
  int rows = 0;
  int cols = 0;

  int pixels() const { return rows * cols; }

  /// Flat index -> (row, col).
  std::pair<int, int> position(int s) const { return {s / cols, s % cols}; }

  int index(int row, int col) const { return row * cols + col; }

  /// Index with periodic wrapping of both coordinates.
  int wrapped_index(int row, int col) const {
    row %= rows;
    if (row < 0) row += rows;
    col %= cols;
    if (col < 0) col += cols;
    return row * cols + col;
  }

  bool operator==(const PixelGrid&) const = default;
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline PixelGrid make_grid(int rows, int cols) {
  if (!is_power_of_two(rows) || !is_power_of_two(cols)) {
    throw std::invalid_argument("grid dimensions must be positive powers of two");
  }
  return PixelGrid{rows, cols};
}

}  // namespace amv
