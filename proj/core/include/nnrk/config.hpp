#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nnrk/discretization.hpp"
#include "nnrk/expression.hpp"
#include "nnrk/loss.hpp"
#include "nnrk/material.hpp"
#include "nnrk/nn_enrich.hpp"
#include "nnrk/optimizers.hpp"
#include "nnrk/rk.hpp"
#include "nnrk/stage_a.hpp"

namespace nnrk {

/// Prescribed displacement (mm) on a boundary region. Components left unset are
/// free. Expressions see x, y, step, steps, t = step/steps and the constants.
struct DirichletSpec {
  std::string region;
  std::optional<Expression> u1, u2;
  bool driven = false;
};

/// Traction in N/mm^2 on a boundary region.
struct TractionSpec {
  std::string region;
  Expression t1, t2;
};

struct LoadProgram {
  int steps = 1;
  std::vector<DirichletSpec> dirichlet;
  std::vector<TractionSpec> traction;
  std::optional<std::array<Expression, 2>> body_force;  // N/mm^3
};

struct DiscretizationSpec {
  int nx = 11;
  int ny = 11;
  std::vector<RefineRegion> refine;
};

struct OptimizerSpec {
  AdamOptions adam;
  LbfgsOptions lbfgs;
  StageAOptions stage_a;
  double kappa_bc = 1e4;
  bool stage_b = true;
  /// Stage B also runs while no node is enriched.
  bool stage_b_without_network = false;
};

/// Analytic displacement field (mm) with optional gradient for error norms.
struct ExactSolution {
  Expression u1, u2;
  std::optional<std::array<Expression, 4>> grad;  // du1/dx, du1/dy, du2/dx, du2/dy
};

struct Transect {
  Vec2 from = Vec2::Zero();
  Vec2 to = Vec2::Zero();
  int points = 101;
};

struct OutputSpec {
  std::string directory = "output";
  int cadence = 1;
  bool fields = true;
  bool vtk = false;
  std::optional<Transect> transect;
};

/// Parameter sweep for the convergence command.
struct StudySpec {
  std::string parameter;  // "mesh" or "neurons"
  std::vector<std::array<int, 2>> meshes;
  std::vector<int> neurons;
};

struct RunConfig {
  std::string name = "run";
  std::vector<std::pair<std::string, Expression>> constants;
  Domain2D domain;
  DiscretizationSpec discretization;
  RKConfig rk;
  MaterialParams material;
  std::vector<Zone> zones;
  NNConfig nn;
  OptimizerSpec optimizer;
  LoadProgram load;
  std::optional<ExactSolution> exact;
  OutputSpec output;
  std::optional<StudySpec> study;

  /// Constants evaluated in declaration order (each may use earlier ones).
  Expression::Variables variables() const;
  /// Throws ConfigError with the offending key path.
  void validate() const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& cfg);

/// Problem setup (nodes, zones, material, network settings) for a config.
ProblemSetup make_setup(const RunConfig& cfg);

/// Applies the boundary data of load step `step` (1-based) to `problem`.
/// Multipliers of segments already present are kept.
void apply_load_step(const RunConfig& cfg, int step, Problem& problem);

}  // namespace nnrk
