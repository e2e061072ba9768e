#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nnrk/loss.hpp"

namespace nnrk {

struct StageAOptions {
  int max_newton = 30;
  int max_multiplier_updates = 20;
  double newton_tol = 1e-13;  // relative step size
  double bc_tol = 1e-11;      // boundary residual relative to the reference displacement
  double ridge = 1e-10;       // relative to the largest diagonal entry, on the W^C block
  double kappa = 1e10;        // inner penalty factor, at least the loss penalty
};

struct StageAResult {
  int newton_iterations = 0;
  int multiplier_updates = 0;
  double bc_residual = 0.0;
  LossBreakdown loss;
};

/// Minimizes the loss over d and the W^C of enriched nodes with the network
/// parameters and the damage frozen. Updates the Dirichlet multipliers of
/// `problem` in place. Throws SolverError on a singular system.
StageAResult stage_a_solve(Problem& problem, const MaterialState& state, const std::vector<char>& enriched,
                           bool network, Eigen::VectorXd& p, const StageAOptions& opt = {});

}  // namespace nnrk
