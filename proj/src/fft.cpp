#include "amv/fft.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <unordered_map>

namespace amv {
namespace {

// Twiddle factors for length n (forward sign), cached per thread.
const std::vector<std::complex<double>>& twiddles(std::size_t n) {
  thread_local std::unordered_map<std::size_t, std::vector<std::complex<double>>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<std::complex<double>> w(n / 2);
  const double base = -2.0 * M_PI / static_cast<double>(n);
  for (std::size_t k = 0; k < n / 2; ++k) {
    w[k] = std::polar(1.0, base * static_cast<double>(k));
  }
  return cache.emplace(n, std::move(w)).first->second;
}

}  // namespace

void fft_inplace(std::vector<std::complex<double>>& data, bool inverse) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft length must be a power of two");
  if (n == 1) return;

  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  const auto& w = twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> tw = w[k * stride];
        if (inverse) tw = std::conj(tw);
        const std::complex<double> u = data[i + k];
        const std::complex<double> v = data[i + k + len / 2] * tw;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
      }
    }
  }
}

void fft2_inplace(std::vector<std::complex<double>>& data, const PixelGrid& grid,
                  bool inverse) {
  const int rows = grid.rows;
  const int cols = grid.cols;
  if (static_cast<int>(data.size()) != rows * cols) {
    throw std::invalid_argument("fft2 buffer does not match grid");
  }
  std::vector<std::complex<double>> line;
  line.resize(cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) line[c] = data[r * cols + c];
    fft_inplace(line, inverse);
    for (int c = 0; c < cols; ++c) data[r * cols + c] = line[c];
  }
  line.resize(rows);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) line[r] = data[r * cols + c];
    fft_inplace(line, inverse);
    for (int r = 0; r < rows; ++r) data[r * cols + c] = line[r];
  }
}

}  // namespace amv
