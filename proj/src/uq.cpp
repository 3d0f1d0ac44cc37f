#include "amv/uq.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace amv {

ObservableSet displacement_observables(const PixelGrid& grid) {
  std::vector<int> pixels(grid.pixels());
  std::iota(pixels.begin(), pixels.end(), 0);
  return displacement_observables(grid, pixels);
}

ObservableSet displacement_observables(const PixelGrid& grid,
                                       const std::vector<int>& pixels) {
  ObservableSet set;
  set.grid = grid;
  set.pixels = pixels;
  set.kind = ObservableKind::displacement;
  return set;
}

std::vector<int> joint_observed_pixels(const ObservationMask& mask) {
  std::vector<int> pixels;
  for (int s = 0; s < mask.grid.pixels(); ++s) {
    if (mask.observed_joint(s)) pixels.push_back(s);
  }
  return pixels;
}

double WeightMap::constraint_residual() const {
  const double count = static_cast<double>(w.size());
  switch (family) {
    case WeightFamily::uniform:
      return 0.0;
    case WeightFamily::power1: {
      double acc = 0.0;
      for (double v : w) acc -= std::log(v);
      return acc;
    }
    case WeightFamily::power2: {
      double acc = 0.0;
      for (double v : w) acc += std::sqrt(v);
      return count - acc;
    }
    case WeightFamily::sparse: {
      int nonzero = 0;
      for (double v : w) nonzero += v > 0.0 ? 1 : 0;
      return static_cast<double>(tau - nonzero);
    }
  }
  return 0.0;
}

WeightMap uniform_weights(int count) {
  WeightMap map;
  map.family = WeightFamily::uniform;
  map.w.assign(count, 1.0);
  return map;
}

WeightMap weights_power(const std::vector<double>& expected_error, int p) {
  if (p != 1 && p != 2) throw std::invalid_argument("weights_power: p must be 1 or 2");
  if (expected_error.empty()) throw std::invalid_argument("weights_power: empty input");
  for (double e : expected_error) {
    if (!(e > 0.0)) {
      throw std::invalid_argument("weights_power: expected errors must be positive");
    }
  }
  const int count = static_cast<int>(expected_error.size());
  WeightMap map;
  map.w.resize(count);
  if (p == 1) {
    map.family = WeightFamily::power1;
    double log_gm = 0.0;
    for (double e : expected_error) log_gm += std::log(e);
    log_gm /= count;
    map.c_p = std::exp(log_gm);  // geometric mean
    for (int i = 0; i < count; ++i) {
      map.w[i] = std::exp(log_gm - std::log(expected_error[i]));
    }
  } else {
    map.family = WeightFamily::power2;
    double inv_sum = 0.0;
    for (double e : expected_error) inv_sum += 1.0 / e;
    map.c_p = static_cast<double>(count) * static_cast<double>(count) / (inv_sum * inv_sum);
    for (int i = 0; i < count; ++i) {
      const double r = static_cast<double>(count) / (expected_error[i] * inv_sum);
      map.w[i] = r * r;
    }
  }
  return map;
}

WeightMap weights_sparse(const std::vector<double>& expected_error, int tau) {
  const int count = static_cast<int>(expected_error.size());
  if (tau < 1 || tau > count) throw std::invalid_argument("weights_sparse: tau out of range");
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return expected_error[a] < expected_error[b];
  });
  WeightMap map;
  map.family = WeightFamily::sparse;
  map.tau = tau;
  map.c_p = static_cast<double>(count) / tau;
  map.d0 = expected_error[order[tau - 1]];
  map.w.assign(count, 0.0);
  for (int i = 0; i < tau; ++i) map.w[order[i]] = map.c_p;
  return map;
}

double chebyshev_bound(double expected_error, double a) {
  if (!(a > 0.0)) return 1.0;
  return std::clamp(expected_error / a, 0.0, 1.0);
}

double epe(const ObservableSet& set, const WeightMap& weights,
           const DisplacementField& error_field) {
  if (set.pixels.empty()) throw std::invalid_argument("epe: empty domain");
  if (weights.w.size() != set.pixels.size()) {
    throw std::invalid_argument("epe: weight map does not match observable set");
  }
  const int m = set.grid.pixels();
  double acc = 0.0;
  for (std::size_t i = 0; i < set.pixels.size(); ++i) {
    const int s = set.pixels[i];
    const double e1 = error_field.values[s];
    const double e2 = error_field.values[m + s];
    acc += weights.w[i] * std::sqrt(e1 * e1 + e2 * e2);
  }
  return acc / static_cast<double>(set.pixels.size());
}

std::vector<double> gather_expected_error(const ExpectedErrorMap& map,
                                          const ObservableSet& set) {
  std::vector<double> out(set.pixels.size());
  for (std::size_t i = 0; i < set.pixels.size(); ++i) {
    out[i] = map.value[set.pixels[i]];
  }
  return out;
}

EpeReport criteria_suite(const DisplacementField& d_true, const DisplacementField& d_hat,
                         const ExpectedErrorMap& err_d, const ObservationMask& mask) {
  if (!(d_true.grid == d_hat.grid) || !(d_true.grid == mask.grid)) {
    throw std::invalid_argument("criteria_suite: grid mismatch");
  }
  DisplacementField error = make_displacement(d_true.grid);
  error.values = d_true.values - d_hat.values;

  const ObservableSet full = displacement_observables(d_true.grid);
  const std::vector<int> observed = joint_observed_pixels(mask);
  if (observed.empty()) throw std::invalid_argument("criteria_suite: empty joint mask");
  const ObservableSet masked_set = displacement_observables(d_true.grid, observed);

  const std::vector<double> err_full = gather_expected_error(err_d, full);
  const std::vector<double> err_obs = gather_expected_error(err_d, masked_set);

  EpeReport report;
  report.standard = epe(full, uniform_weights(full.count()), error);
  report.weighted1 = epe(full, weights_power(err_full, 1), error);
  report.weighted2 = epe(full, weights_power(err_full, 2), error);
  report.masked = epe(masked_set, uniform_weights(masked_set.count()), error);
  const int tau_sparse = std::min<int>(masked_set.count(), full.count());
  report.sparse = epe(full, weights_sparse(err_full, tau_sparse), error);
  const int tau_sm = std::max(1, masked_set.count() / 2);
  report.sparse_masked = epe(masked_set, weights_sparse(err_obs, tau_sm), error);
  return report;
}

}  // namespace amv
