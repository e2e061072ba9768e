#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nnrk/config.hpp"
#include "nnrk/driver.hpp"
#include "nnrk/errors.hpp"
#include "nnrk/export.hpp"
#include "nnrk/study.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

struct Globals {
  int threads = 0;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
};

std::vector<fs::path> preset_dirs() {
  std::vector<fs::path> dirs;
  if (const char* env = std::getenv("NNRK_PRESET_DIR")) dirs.emplace_back(env);
#ifdef NNRK_SOURCE_PRESETS
  dirs.emplace_back(NNRK_SOURCE_PRESETS);
#endif
#ifdef NNRK_INSTALLED_PRESETS
  dirs.emplace_back(NNRK_INSTALLED_PRESETS);
#endif
  return dirs;
}

/// A config argument is a file path or the name of a shipped preset.
fs::path resolve_config(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  for (const auto& dir : preset_dirs()) {
    const fs::path p = dir / (arg + ".json");
    if (fs::exists(p)) return p;
  }
  throw nnrk::ConfigError("config", "no such file or preset: " + arg);
}

nnrk::RunConfig load(const std::string& arg, const Globals& g) {
  nnrk::RunConfig cfg = nnrk::load_config(resolve_config(arg));
  if (g.seed) cfg.nn.seed = *g.seed;
  if (!g.output_dir.empty()) cfg.output.directory = g.output_dir;
  cfg.validate();
  return cfg;
}

void print_record(const nnrk::StepRecord& r) {
  std::printf("step %4d  loss %.6e  reaction (%.5e, %.5e)  max eta %.4f  enriched %d  newton %d  lbfgs %d %s  %.2fs\n",
              r.step, r.loss.total, r.reaction(0), r.reaction(1), r.eta.size() ? r.eta.maxCoeff() : 0.0, r.enriched,
              r.newton_iterations, r.lbfgs_iterations, r.lbfgs_status.c_str(), r.wall_seconds);
  std::fflush(stdout);
}

int cmd_run(const std::string& cfg_arg, const std::string& resume, const Globals& g) {
  const nnrk::RunConfig cfg = load(cfg_arg, g);
  nnrk::Simulation sim(cfg);
  nnrk::RunOptions opt;
  opt.output_dir = cfg.output.directory;
  if (!resume.empty()) opt.resume = resume;
  opt.on_step = print_record;
  nnrk::run_simulation(sim, opt);

  if (cfg.exact) {
    const nnrk::ErrorNorms e =
        nnrk::error_norms(sim.model(false), sim.state().p, *cfg.exact, cfg.variables());
    std::printf("error  L2 %.6e (rel %.6e)  H1 %.6e (rel %.6e)\n", e.l2, e.l2_rel, e.h1, e.h1_rel);
    std::ostringstream os;
    os.precision(17);
    os << "l2,l2_rel,h1,h1_rel\n" << e.l2 << ',' << e.l2_rel << ',' << e.h1 << ',' << e.h1_rel << '\n';
    nnrk::write_file_atomic(fs::path(cfg.output.directory) / "errors.csv", os.str());
  }
  std::printf("outputs in %s\n", cfg.output.directory.c_str());
  return 0;
}

int cmd_convergence(const std::string& cfg_arg, const Globals& g) {
  const nnrk::RunConfig cfg = load(cfg_arg, g);
  const nnrk::ConvergenceTable t = nnrk::run_convergence(cfg);
  std::ostringstream os;
  nnrk::write_convergence_csv(t, os);
  std::cout << os.str();
  fs::create_directories(cfg.output.directory);
  nnrk::write_file_atomic(fs::path(cfg.output.directory) / "convergence.csv", os.str());
  std::printf("slope  L2 %.4f  H1 %.4f\n", t.l2_slope, t.h1_slope);
  return 0;
}

int cmd_validate(const std::string& cfg_arg, const Globals& g) {
  const nnrk::RunConfig cfg = load(cfg_arg, g);
  bool ok = true;
  for (const auto& it : nnrk::validate_config(cfg)) {
    std::printf("%-24s %s  %s\n", it.name.c_str(), it.pass ? "PASS" : "FAIL", it.detail.c_str());
    ok = ok && it.pass;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural-network-enriched RK phase-field fracture solver"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--threads", g.threads, "Worker threads (0: runtime default)")->envname("NNRK_THREADS");
  auto* seed_opt = app.add_option("--seed", seed, "Override nn.seed")->envname("NNRK_SEED");
  app.add_option("--output-dir", g.output_dir, "Override output.directory")->envname("NNRK_OUTPUT_DIR");

  std::string cfg_arg, resume;
  auto* run = app.add_subcommand("run", "Run a load program");
  run->add_option("config", cfg_arg, "Config file or preset name")->required();
  run->add_option("--resume", resume, "Checkpoint to continue from")->envname("NNRK_RESUME");
  auto* conv = app.add_subcommand("convergence", "Run the convergence study of a config");
  conv->add_option("config", cfg_arg, "Config file or preset name")->required();
  auto* val = app.add_subcommand("validate", "Reproduction, smoothing and gradient checks");
  val->add_option("config", cfg_arg, "Config file or preset name")->required();

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed;
  nnrk::set_thread_count(g.threads);

  try {
    if (*run) return cmd_run(cfg_arg, resume, g);
    if (*conv) return cmd_convergence(cfg_arg, g);
    return cmd_validate(cfg_arg, g);
  } catch (const nnrk::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const nnrk::StepError& e) {
    std::cerr << "run failed: " << e.what() << " (last committed state checkpointed)\n";
    return exit_runtime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_runtime;
  }
}
