#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "nnrk/config.hpp"
#include "nnrk/discretization.hpp"

namespace fixture {

inline constexpr const char* elastic_material = R"J("E": 100, "nu": 0.3, "Gc_I": 1, "length_scale": 0.1, "damage": false)J";

/// Homogeneous rectangle [0,2]x[0,1] with a linear displacement prescribed on
/// the whole boundary.
inline std::string patch_json(int nx = 7, int ny = 5, const std::string& material = elastic_material) {
  return R"J({
    "name": "patch",
    "domain": {"rectangle": {"lo": [0, 0], "hi": [2, 1]},
               "regions": [{"name": "all", "lo": [-1, -1], "hi": [3, 2]}]},
    "discretization": {"nx": )J" +
         std::to_string(nx) + R"J(, "ny": )J" + std::to_string(ny) + R"J(},
    "material": {)J" +
         material + R"J(},
    "nn": {"blocks": 0},
    "load": {"dirichlet": [{"region": "all", "u1": "1e-3*(1 + 2*x + 3*y)", "u2": "1e-3*(-1 + x - y)",
                            "driven": true}]},
    "exact_solution": {"u1": "1e-3*(1 + 2*x + 3*y)", "u2": "1e-3*(-1 + x - y)",
                       "du1dx": 2e-3, "du1dy": 3e-3, "du2dx": 1e-3, "du2dy": -1e-3}
  })J";
}

/// Bar [0,L]x[0,H] clamped in x on the left, pulled by g on the right, nu = 0:
/// the exact field is u1 = g x / L, u2 = 0 once u2 is fixed on both ends.
inline std::string bar_json(double g, int steps = 1, bool damage = false, const std::string& nn = R"J("blocks": 0)J") {
  return R"J({
    "name": "bar",
    "constants": {"L": 1.0, "H": 0.25, "g": )J" +
         std::to_string(g) + R"J(},
    "domain": {"rectangle": {"lo": [0, 0], "hi": ["L", "H"]},
               "regions": [{"name": "left", "lo": [-1e-6, -1], "hi": [1e-6, 1]},
                           {"name": "right", "lo": ["L - 1e-6", -1], "hi": ["L + 1e-6", 1]}]},
    "discretization": {"nx": 9, "ny": 3},
    "material": {"E": 10, "nu": 0.0, "Gc_I": 1e-3, "length_scale": 0.05, "psi_c": 0, "damage": )J" +
         std::string(damage ? "true" : "false") + R"J(},
    "nn": {)J" + nn + R"J(},
    "optimizer": {"adam_epochs": 20, "lbfgs_max_iter": 100},
    "load": {"steps": )J" +
         std::to_string(steps) + R"J(, "dirichlet": [
      {"region": "left", "u1": 0, "u2": 0},
      {"region": "right", "u1": "g*step", "u2": 0, "driven": true}]}
  })J";
}

/// Independent polygon area (shoelace).
inline double shoelace(const std::vector<nnrk::Vec2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(a);
}

/// Cubic B-spline written out from its piecewise definition.
inline double bspline(double s) {
  s = std::abs(s);
  if (s <= 0.5) return 2.0 / 3.0 - 4.0 * s * s + 4.0 * s * s * s;
  if (s <= 1.0) return 4.0 / 3.0 * std::pow(1.0 - s, 3);
  return 0.0;
}

/// Lattice with every node displaced by up to `jitter` spacings.
inline nnrk::NodeSet jittered_cloud(int nx, int ny, const nnrk::Domain2D& d, double jitter, unsigned seed,
                                    double support = 2.0) {
  nnrk::NodeSet n = nnrk::build_uniform_grid(nx, ny, d, support);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-jitter, jitter);
  const auto [lo, hi] = nnrk::bounding_box(d.outer);
  for (auto& x : n.x) {
    const nnrk::Vec2 shift(u(rng) * n.spacing.x(), u(rng) * n.spacing.y());
    x = (x + shift).cwiseMax(lo).cwiseMin(hi);
  }
  return n;
}

}  // namespace fixture
