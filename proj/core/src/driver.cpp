#include "nnrk/driver.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

#include "nnrk/checkpoint.hpp"
#include "nnrk/errors.hpp"
#include "nnrk/export.hpp"
#include "nnrk/optimizers.hpp"
#include "parallel.hpp"
#include "nnrk/parameters.hpp"
#include "nnrk/stage_a.hpp"

namespace nnrk {

namespace {

double half_extent(const Domain2D& d) {
  const auto [lo, hi] = bounding_box(d.outer);
  return 0.5 * (hi - lo).maxCoeff();
}

}  // namespace

Simulation::Simulation(RunConfig cfg) : cfg_(std::move(cfg)), problem_(Problem::build((cfg_.validate(), make_setup(cfg_)))) {
  state_.p = Eigen::VectorXd::Zero(problem_.layout.size());
  state_.material = problem_.initial_state();
  state_.enriched.assign(problem_.setup.nodes.size(), 0);
}

void Simulation::restore(SimulationState s) {
  if (s.p.size() != problem_.layout.size() || s.material.size() != problem_.num_cells() ||
      s.enriched.size() != problem_.setup.nodes.size())
    throw DimensionError("checkpoint does not match the discretization of this config");
  if (s.step < 0 || s.step > cfg_.load.steps) throw DimensionError("checkpoint step is outside the load program");
  for (const auto& d : s.dirichlet)
    if (d.boundary < 0 || d.boundary >= static_cast<int>(problem_.mesh.boundary.size()))
      throw DimensionError("checkpoint boundary segment out of range");
  problem_.dirichlet = s.dirichlet;
  state_ = std::move(s);
}

LossModel Simulation::model(bool live_damage) const {
  return LossModel(problem_, state_.material, state_.enriched, state_.network, live_damage);
}

Eigen::VectorXd Simulation::parameter_scale() const {
  const double u_ref = problem_.reference_displacement(1e-6 * problem_.setup.domain.size());
  return parameter_scales(problem_.layout, u_ref, half_extent(problem_.setup.domain));
}

double Simulation::loss_scale() const {
  const double u_ref = problem_.reference_displacement(1e-6 * problem_.setup.domain.size());
  const double L = 2.0 * half_extent(problem_.setup.domain);
  return problem_.setup.material.E * (u_ref / L) * (u_ref / L) * problem_.setup.domain.area();
}

const StepRecord& Simulation::run_step() {
  if (finished()) throw Error("load program already finished");
  const int step = state_.step + 1;
  const auto t0 = std::chrono::steady_clock::now();
  const SimulationState saved = state_;
  StepRecord rec;
  rec.step = step;
  try {
    update_release_rates();
    problem_.dirichlet = state_.dirichlet;
    apply_load_step(cfg_, step, problem_);

    StageAResult sa = stage_a_solve(problem_, state_.material, state_.enriched, state_.network, state_.p,
                                    cfg_.optimizer.stage_a);
    rec.newton_iterations += sa.newton_iterations;
    const ForwardPass fw = model(false).forward(state_.p);
    if (update_enrichment(fw)) {
      sa = stage_a_solve(problem_, state_.material, state_.enriched, state_.network, state_.p, cfg_.optimizer.stage_a);
      rec.newton_iterations += sa.newton_iterations;
    }
    stage_b(rec);
    commit(rec);
  } catch (const std::exception& e) {
    state_ = saved;
    problem_.dirichlet = state_.dirichlet;
    throw StepError(step, e.what());
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  state_.step = step;
  state_.dirichlet = problem_.dirichlet;
  state_.records.push_back(std::move(rec));
  return state_.records.back();
}

void Simulation::update_release_rates() {
  const auto& m = cfg_.material;
  if (m.Gc_I == m.Gc_II || state_.step == 0) return;
  const ForwardPass fw = model(false).forward(state_.p);
  for (Eigen::Index L = 0; L < problem_.num_cells(); ++L) {
    const auto& s = fw.cell[L].split;
    const double gc = critical_release_rate(s.psi_I, s.psi_II, m.Gc_I, m.Gc_II, state_.material.Gc(L));
    state_.material.set_release_rate(L, gc, m.length_scale);
  }
}

bool Simulation::update_enrichment(const ForwardPass& fw) {
  const auto& nn = cfg_.nn;
  if (nn.blocks == 0) return false;
  const Eigen::Index nc = problem_.num_cells();
  const double psi_c = cfg_.material.psi_c();
  const double threshold = psi_c > 0.0 ? nn.enrich_kappa * psi_c : nn.enrich_threshold;
  Eigen::VectorXd psi_pos(nc);
  for (Eigen::Index L = 0; L < nc; ++L) {
    psi_pos(L) = cfg_.material.damage ? fw.cell[L].split.psi_pos : 0.0;
    if (nn.force_region && point_in_polygon(problem_.mesh.cells[L].centroid, *nn.force_region))
      psi_pos(L) = std::numeric_limits<double>::infinity();
  }
  std::vector<char> next = select_enriched_nodes(psi_pos, problem_.mesh, problem_.setup.nodes,
                                                 std::max(threshold, std::numeric_limits<double>::min()),
                                                 state_.enriched);
  const bool changed = next != state_.enriched;
  state_.enriched = std::move(next);
  const bool any = std::find(state_.enriched.begin(), state_.enriched.end(), 1) != state_.enriched.end();
  if (any && !state_.network) {
    const auto blocks = initialize_blocks(nn, problem_.ell_nn, problem_.mesh.points, nn.seed);
    pack_blocks(problem_.layout, blocks, state_.p);
    state_.network = true;
    return true;
  }
  return changed;
}

void Simulation::stage_b(StepRecord& rec) {
  const auto& opt = cfg_.optimizer;
  if (!opt.stage_b || (!state_.network && !opt.stage_b_without_network)) return;
  const LossModel m = model(cfg_.material.damage);
  const auto idx = active_indices(problem_.layout, state_.enriched, state_.network);
  const Eigen::VectorXd scale = parameter_scale();
  const double ls = loss_scale();
  Eigen::VectorXd p = state_.p, g(p.size());
  const Eigen::Index n = static_cast<Eigen::Index>(idx.size());

  const Objective fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& gx) {
    for (Eigen::Index k = 0; k < n; ++k) p(idx[k]) = x(k) * scale(idx[k]);
    const double f = m.evaluate(p, &g).total / ls;
    for (Eigen::Index k = 0; k < n; ++k) gx(k) = g(idx[k]) * scale(idx[k]) / ls;
    return f;
  };
  Eigen::VectorXd x(n), gx(n);
  for (Eigen::Index k = 0; k < n; ++k) x(k) = state_.p(idx[k]) / scale(idx[k]);
  const double f0 = fn(x, gx);
  rec.stage_b_entry = f0;
  if (opt.adam.epochs > 0) {
    AdamOptions ao = opt.adam;
    ao.grad_tol = opt.lbfgs.grad_tol;
    const OptimResult ra = adam(fn, x, ao);
    rec.adam_epochs = ra.iterations;
    if (ra.f < f0) x = ra.x;
  }
  const OptimResult rl = lbfgs(fn, x, opt.lbfgs);
  rec.lbfgs_iterations = rl.iterations;
  rec.lbfgs_status = to_string(rl.status);
  rec.stage_b_exit = rl.f;
  x = rl.x;
  for (Eigen::Index k = 0; k < n; ++k) state_.p(idx[k]) = x(k) * scale(idx[k]);
}

void Simulation::commit(StepRecord& rec) {
  const bool damage = cfg_.material.damage;
  const ForwardPass fw = model(damage).forward(state_.p);
  if (damage) {
    auto& ms = state_.material;
    for (Eigen::Index L = 0; L < problem_.num_cells(); ++L) {
      ms.H(L) = std::max(ms.H(L), fw.cell[L].H);
      ms.eta(L) = std::max(ms.eta(L), damage_and_degradation(ms.H(L), ms.p(L)).eta);
    }
  }
  rec.loss = fw.loss;
  rec.reaction = 1e3 * model(damage).reaction(fw);
  int driven = 0;
  for (const auto& d : problem_.dirichlet)
    if (d.driven) {
      rec.load += d.g;
      ++driven;
    }
  if (driven > 0) rec.load /= driven;
  rec.eta = state_.material.eta;
  rec.enriched = static_cast<int>(std::count(state_.enriched.begin(), state_.enriched.end(), 1));
  rec.network = state_.network;
}

std::vector<StepRecord> run_simulation(Simulation& sim, const RunOptions& opt) {
  namespace fs = std::filesystem;
  if (opt.resume) sim.restore(load_checkpoint(*opt.resume));
  const fs::path dir = opt.output_dir.empty() ? fs::path(sim.config().output.directory) : opt.output_dir;
  const fs::path ckpt = dir / "checkpoint.json";
  if (opt.write_outputs) {
    fs::create_directories(dir);
    write_file_atomic(dir / "config.json", serialize_config(sim.config()));
    std::ostringstream mesh;
    write_mesh_csv(sim.problem().mesh, mesh);
    write_file_atomic(dir / "mesh.csv", mesh.str());
  }
  const auto& out = sim.config().output;
  while (!sim.finished()) {
    try {
      sim.run_step();
    } catch (const StepError&) {
      if (opt.write_outputs) save_checkpoint(ckpt, sim.state(), sim.config().name);
      throw;
    }
    const auto& st = sim.state();
    const StepRecord& rec = st.records.back();
    if (opt.write_outputs) {
      save_checkpoint(ckpt, st, sim.config().name);
      std::ostringstream steps, curve;
      write_step_csv(st.records, steps);
      write_load_curve(st.records, curve);
      write_file_atomic(dir / "steps.csv", steps.str());
      write_file_atomic(dir / "load_displacement.csv", curve.str());
      if (out.fields && (rec.step % out.cadence == 0 || sim.finished())) {
        char tag[32];
        std::snprintf(tag, sizeof tag, "%04d", rec.step);
        const LossModel m = sim.model(false);
        const CellFields f = cell_fields(m, st.p);
        std::ostringstream cells;
        write_cell_csv(f, cells);
        write_file_atomic(dir / (std::string("cells_") + tag + ".csv"), cells.str());
        if (out.vtk) {
          std::ostringstream vtk;
          write_vtk(sim.problem().mesh, f, vtk);
          write_file_atomic(dir / (std::string("cells_") + tag + ".vtk"), vtk.str());
        }
        if (out.transect) {
          std::ostringstream tr;
          write_transect(m, st.p, *out.transect, tr);
          write_file_atomic(dir / (std::string("transect_") + tag + ".csv"), tr.str());
        }
      }
    }
    if (opt.on_step) opt.on_step(rec);
  }
  return sim.state().records;
}

void set_thread_count(int n) { detail::set_threads(n); }
int thread_count() { return detail::max_threads(); }

}  // namespace nnrk
