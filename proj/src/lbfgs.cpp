#include "amv/lbfgs.hpp"

#include <cmath>
#include <deque>

namespace amv {
namespace {

struct Pair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

// Two-loop recursion producing -H g.
Eigen::VectorXd search_direction(const std::deque<Pair>& pairs, const Eigen::VectorXd& g) {
  Eigen::VectorXd q = g;
  std::vector<double> alpha(pairs.size());
  for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
    alpha[i] = pairs[i].rho * pairs[i].s.dot(q);
    q -= alpha[i] * pairs[i].y;
  }
  if (!pairs.empty()) {
    const Pair& last = pairs.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double beta = pairs[i].rho * pairs[i].y.dot(q);
    q += (alpha[i] - beta) * pairs[i].s;
  }
  return -q;
}

struct LineSearchResult {
  double step = 0.0;
  double value = 0.0;
  bool ok = false;        // some acceptable step was found
  bool curvature = false; // the strong-Wolfe curvature condition also holds
};

// Strong Wolfe line search: bracketing plus a zoom phase with safeguarded
// quadratic interpolation. If the curvature condition cannot be met within the
// evaluation budget, the best Armijo point found is returned (ok, !curvature).
LineSearchResult strong_wolfe(const Objective& f, const Eigen::VectorXd& x0, double f0,
                              const Eigen::VectorXd& g0, const Eigen::VectorXd& dir,
                              Eigen::VectorXd& x_out, Eigen::VectorXd& g_out,
                              const LbfgsOptions& opt) {
  const double d0 = g0.dot(dir);
  LineSearchResult res;
  if (d0 >= 0.0) return res;

  auto eval = [&](double t, double& slope) {
    x_out = x0 + t * dir;
    const double v = f(x_out, g_out);
    slope = g_out.dot(dir);
    return v;
  };
  auto armijo = [&](double t, double v) { return v <= f0 + opt.wolfe_c1 * t * d0; };

  double lo = 0.0, f_lo = f0, d_lo = d0;
  double hi = -1.0, f_hi = 0.0;
  double t = 1.0;
  double f_prev = f0;
  double t_prev = 0.0;
  int evals = 0;

  // Bracketing phase.
  while (evals < opt.max_line_search) {
    double slope;
    const double v = eval(t, slope);
    ++evals;
    if (!std::isfinite(v) || !armijo(t, v) || (evals > 1 && v >= f_prev)) {
      lo = t_prev; f_lo = f_prev; d_lo = evals > 1 ? d_lo : d0;
      hi = t; f_hi = v;
      break;
    }
    if (std::abs(slope) <= -opt.wolfe_c2 * d0) {
      res.step = t; res.value = v; res.ok = true; res.curvature = true;
      return res;
    }
    res.step = t; res.value = v; res.ok = true;  // Armijo point in hand
    if (slope >= 0.0) {
      lo = t; f_lo = v; d_lo = slope;
      hi = t_prev; f_hi = f_prev;
      break;
    }
    t_prev = t; f_prev = v; d_lo = slope;
    t *= 2.0;
  }
  if (hi < 0.0) return res;

  // Zoom phase.
  while (evals < opt.max_line_search) {
    // quadratic model through (lo, f_lo, d_lo) and (hi, f_hi), safeguarded
    double mid;
    const double denom = f_hi - f_lo - d_lo * (hi - lo);
    if (std::abs(denom) > 1e-300) {
      mid = lo - 0.5 * d_lo * (hi - lo) * (hi - lo) / denom;
    } else {
      mid = 0.5 * (lo + hi);
    }
    const double span = std::abs(hi - lo);
    const double lower = std::min(lo, hi) + 0.1 * span;
    const double upper = std::max(lo, hi) - 0.1 * span;
    if (!(mid >= lower && mid <= upper)) mid = 0.5 * (lo + hi);

    double slope;
    const double v = eval(mid, slope);
    ++evals;
    if (!std::isfinite(v) || !armijo(mid, v) || v >= f_lo) {
      hi = mid; f_hi = v;
    } else {
      if (std::abs(slope) <= -opt.wolfe_c2 * d0) {
        res.step = mid; res.value = v; res.ok = true; res.curvature = true;
        return res;
      }
      if (!res.ok || v < res.value) { res.step = mid; res.value = v; res.ok = true; }
      if (slope * (hi - lo) >= 0.0) { hi = lo; f_hi = f_lo; }
      lo = mid; f_lo = v; d_lo = slope;
    }
    if (std::abs(hi - lo) < 1e-14 * (1.0 + std::abs(lo))) break;
  }
  if (res.ok && res.step != 0.0) {
    // leave x_out/g_out at the returned point
    double slope;
    const double v = eval(res.step, slope);
    res.value = v;
  }
  return res;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, Eigen::VectorXd x0,
                           const LbfgsOptions& options) {
  LbfgsResult result;
  const Eigen::Index n = x0.size();
  Eigen::VectorXd g(n), x_new(n), g_new(n);
  double value = objective(x0, g);
  result.value_trace.push_back(value);

  std::deque<Pair> pairs;
  Eigen::VectorXd x = std::move(x0);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.grad_norm = g.norm();
    if (result.grad_norm <= options.grad_tolerance) {
      result.converged = true;
      break;
    }
    Eigen::VectorXd dir = search_direction(pairs, g);
    if (dir.dot(g) >= 0.0) dir = -g;  // restore descent after a bad pair

    const LineSearchResult ls =
        strong_wolfe(objective, x, value, g, dir, x_new, g_new, options);
    if (!ls.ok) {
      result.line_search_failed = true;
      break;
    }
    if (!ls.curvature) result.line_search_failed = true;  // reported, non-fatal

    Pair p;
    p.s = x_new - x;
    p.y = g_new - g;
    const double sy = p.s.dot(p.y);
    if (sy > 1e-14 * p.s.norm() * p.y.norm()) {
      p.rho = 1.0 / sy;
      pairs.push_back(std::move(p));
      if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
    }

    x.swap(x_new);
    g.swap(g_new);
    value = ls.value;
    result.value_trace.push_back(value);
    result.iterations = iter + 1;
  }

  result.x = std::move(x);
  result.value = value;
  result.grad_norm = g.norm();
  if (result.grad_norm <= options.grad_tolerance) result.converged = true;
  return result;
}

}  // namespace amv
