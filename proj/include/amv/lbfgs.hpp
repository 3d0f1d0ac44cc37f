#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace amv {

/// Objective callback: fills the gradient and returns the value.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct LbfgsOptions {
  int memory = 8;
  int max_iterations = 500;
  double grad_tolerance = 1e-8;  // on the gradient infinity-scaled 2-norm
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_search = 40;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
  std::vector<double> value_trace;
};

/// Limited-memory BFGS with a strong-Wolfe line search (bracket and zoom).
LbfgsResult lbfgs_minimize(const Objective& objective, Eigen::VectorXd x0,
                           const LbfgsOptions& options);

}  // namespace amv
