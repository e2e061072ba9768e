#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nnrk/config.hpp"
#include "nnrk/errors.hpp"
#include "nnrk/loss.hpp"

namespace nnrk {

struct StepRecord {
  int step = 0;
  LossBreakdown loss;
  Vec2 load = Vec2::Zero();      // mean prescribed displacement on driven segments (mm)
  Vec2 reaction = Vec2::Zero();  // N/mm
  Eigen::VectorXd eta;           // per cell
  int enriched = 0;              // |S-bar|
  bool network = false;
  int newton_iterations = 0;
  int adam_epochs = 0;
  int lbfgs_iterations = 0;
  std::string lbfgs_status;
  double stage_b_entry = 0.0;  // scaled loss
  double stage_b_exit = 0.0;
  double wall_seconds = 0.0;
};

/// Committed state between load steps.
struct SimulationState {
  int step = 0;
  Eigen::VectorXd p;
  MaterialState material;
  std::vector<char> enriched;
  bool network = false;
  std::vector<DirichletSegment> dirichlet;  // carries the multipliers
  std::vector<StepRecord> records;
};

/// A step failed; the state of the last committed step is preserved.
class StepError : public Error {
 public:
  StepError(int step, const std::string& what) : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Staggered load-stepping controller.
class Simulation {
 public:
  explicit Simulation(RunConfig cfg);

  const RunConfig& config() const { return cfg_; }
  const Problem& problem() const { return problem_; }
  Problem& problem() { return problem_; }
  const SimulationState& state() const { return state_; }
  /// Replaces the committed state (resume); throws DimensionError on mismatch.
  void restore(SimulationState s);
  bool finished() const { return state_.step >= cfg_.load.steps; }

  /// Runs step state().step + 1 and commits it. Throws StepError.
  const StepRecord& run_step();
  /// Loss model on the committed state.
  LossModel model(bool live_damage) const;
  /// Variable scales and the loss scale used by the optimizers.
  Eigen::VectorXd parameter_scale() const;
  double loss_scale() const;

 private:
  void update_release_rates();
  bool update_enrichment(const ForwardPass& fw);
  void stage_b(StepRecord& rec);
  void commit(StepRecord& rec);

  RunConfig cfg_;
  Problem problem_;
  SimulationState state_;
};

struct RunOptions {
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> resume;
  bool write_outputs = true;
  std::function<void(const StepRecord&)> on_step;
};

/// Runs every remaining step, writing per-step records, field dumps at the
/// output cadence and a checkpoint after each step. On failure the last
/// committed state is checkpointed and the StepError is rethrown.
std::vector<StepRecord> run_simulation(Simulation& sim, const RunOptions& opt);

/// Worker thread count for the parallel loops (no effect without OpenMP).
void set_thread_count(int n);
int thread_count();

}  // namespace nnrk
