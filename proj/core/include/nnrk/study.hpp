#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "nnrk/config.hpp"
#include "nnrk/loss.hpp"

namespace nnrk {

struct ErrorNorms {
  double l2 = 0.0;       // ||u - u_h||
  double l2_rel = 0.0;   // relative to ||u||
  double h1 = 0.0;       // |u - u_h|_1 with the pointwise gradient
  double h1_rel = 0.0;
};

/// Error norms against an analytic field. Each cell is fanned into triangles
/// from its centroid and integrated with the three-edge-midpoint rule.
ErrorNorms error_norms(const LossModel& model, const Eigen::VectorXd& p, const ExactSolution& exact,
                       const Expression::Variables& vars);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ConvergenceRow {
  double parameter = 0.0;  // mesh spacing h or neuron count
  ErrorNorms error;
};

struct ConvergenceTable {
  std::string parameter;
  std::vector<ConvergenceRow> rows;
  double l2_slope = 0.0;
  double h1_slope = 0.0;
};

/// Runs the config's study sweep. Throws ConfigError with fewer than three points.
ConvergenceTable run_convergence(const RunConfig& cfg);
void write_convergence_csv(const ConvergenceTable& t, std::ostream& os);

struct GradientCheck {
  double max_rel_error = 0.0;
  Eigen::Index worst = -1;
  int checked = 0;
  int skipped = 0;  // components whose central difference straddles a kink
};

/// Central differences with step 1e-6 max(1, |p_i|), taken per loss part and
/// summed. The error of a component is |a - b| / max(|a|, |b|, 1e-8 max|g|),
/// or zero when |a - b| is within the rounding level 100 eps sum|parts| / h.
GradientCheck check_gradient(const LossModel& model, const Eigen::VectorXd& p,
                             const std::vector<Eigen::Index>& indices, double rel_step = 1e-6);

/// Small random instance of a config for gradient checks: 3x3 nodes, one block
/// of 4 kernels with 4 neurons, every node enriched, the network near an
/// isometry and the displacements near a smooth field.
struct GradientInstance {
  std::unique_ptr<Problem> problem;
  MaterialState state;
  std::vector<char> enriched;
  Eigen::VectorXd p;
  bool live_damage = false;

  LossModel model() const { return LossModel(*problem, state, enriched, true, live_damage); }
  std::vector<Eigen::Index> indices() const;
};

GradientInstance make_gradient_instance(const RunConfig& cfg, std::uint64_t seed);

struct ValidationItem {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Reproduction, smoothing and gradient checks on a downscaled copy of the config.
std::vector<ValidationItem> validate_config(const RunConfig& cfg);

}  // namespace nnrk
