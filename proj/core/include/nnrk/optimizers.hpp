#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace nnrk {

/// Returns f(x) and writes the gradient into g (already sized).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& g)>;

enum class OptimStatus { Converged, MaxIterations, LineSearchFailed };

struct OptimResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd g;
  int iterations = 0;
  int evaluations = 0;
  OptimStatus status = OptimStatus::MaxIterations;
  std::vector<double> trace;  // f at the start and after every accepted step
};

std::string to_string(OptimStatus s);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int epochs = 200;
  double grad_tol = 0.0;  // stop early when max|g| falls below
};

struct LbfgsOptions {
  int memory = 10;
  int max_iter = 1000;
  double grad_tol = 1e-8;  // on max|g|
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 40;
};

/// Adam with bias correction. Throws SolverError on a non-finite step.
OptimResult adam(const Objective& fn, Eigen::VectorXd x0, const AdamOptions& opt = {});

/// L-BFGS with two-loop recursion and a strong-Wolfe line search. A failed
/// line search is retried once along the steepest-descent direction.
OptimResult lbfgs(const Objective& fn, Eigen::VectorXd x0, const LbfgsOptions& opt = {});

}  // namespace nnrk
