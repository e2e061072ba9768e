#include "nnrk/study.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "nnrk/driver.hpp"
#include "nnrk/errors.hpp"
#include "nnrk/parameters.hpp"
#include "nnrk/scni.hpp"
#include "nnrk/stage_a.hpp"

namespace nnrk {

ErrorNorms error_norms(const LossModel& model, const Eigen::VectorXd& p, const ExactSolution& exact,
                       const Expression::Variables& vars) {
  const Problem& pb = model.problem();
  std::vector<Vec2> pts;
  std::vector<double> w;
  for (std::size_t L = 0; L < pb.mesh.cells.size(); ++L) {
    const auto& c = pb.mesh.cells[L];
    const std::size_t n = c.polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = c.centroid;
      const Vec2& b = c.polygon[i];
      const Vec2& d = c.polygon[(i + 1) % n];
      const double area = 0.5 * std::abs(cross(b - a, d - a));
      if (area <= 0.0) continue;
      const std::array<Vec2, 3> mids{Vec2(0.5 * (a + b)), Vec2(0.5 * (b + d)), Vec2(0.5 * (d + a))};
      for (const Vec2& m : mids) {
        pts.push_back(m);
        w.push_back(area / 3.0);
      }
    }
  }
  const PointFields f = model.sample(p, pts);
  const std::vector<Mat2> grad = model.sample_gradient(p, pts);
  Expression::Variables v = vars;
  auto u_exact = [&](const Vec2& x) {
    v["x"] = x.x();
    v["y"] = x.y();
    return Vec2(exact.u1.eval(v), exact.u2.eval(v));
  };
  const double h = 1e-6 * pb.setup.domain.size();
  auto grad_exact = [&](const Vec2& x) {
    Mat2 G;
    if (exact.grad) {
      v["x"] = x.x();
      v["y"] = x.y();
      const auto& g = *exact.grad;
      G << g[0].eval(v), g[1].eval(v), g[2].eval(v), g[3].eval(v);
    } else {
      const Vec2 dx = (u_exact(x + Vec2(h, 0)) - u_exact(x - Vec2(h, 0))) / (2 * h);
      const Vec2 dy = (u_exact(x + Vec2(0, h)) - u_exact(x - Vec2(0, h))) / (2 * h);
      G.col(0) = dx;
      G.col(1) = dy;
    }
    return G;
  };
  double e0 = 0, n0 = 0, e1 = 0, n1 = 0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Vec2 ue = u_exact(pts[k]);
    const Mat2 Ge = grad_exact(pts[k]);
    e0 += w[k] * (ue - f.u.row(k).transpose()).squaredNorm();
    n0 += w[k] * ue.squaredNorm();
    e1 += w[k] * (Ge - grad[k]).squaredNorm();
    n1 += w[k] * Ge.squaredNorm();
  }
  ErrorNorms r;
  r.l2 = std::sqrt(e0);
  r.h1 = std::sqrt(e1);
  r.l2_rel = n0 > 0 ? std::sqrt(e0 / n0) : r.l2;
  r.h1_rel = n1 > 0 ? std::sqrt(e1 / n1) : r.h1;
  return r;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("loglog_slope: need at least two matching points");
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw Error("loglog_slope: values must be positive");
    A(i, 0) = std::log(x[i]);
    A(i, 1) = 1.0;
    b(i) = std::log(y[i]);
  }
  return A.colPivHouseholderQr().solve(b)(0);
}

ConvergenceTable run_convergence(const RunConfig& cfg) {
  if (!cfg.study) throw ConfigError("study", "the config has no study block");
  if (!cfg.exact) throw ConfigError("exact_solution", "required by the convergence study");
  const auto& s = *cfg.study;
  const std::size_t n = s.parameter == "mesh" ? s.meshes.size() : s.neurons.size();
  if (n < 3) throw ConfigError("study.values", "at least three entries are needed for a slope");
  ConvergenceTable t;
  t.parameter = s.parameter == "mesh" ? "h" : "neurons";
  for (std::size_t i = 0; i < n; ++i) {
    RunConfig c = cfg;
    double param;
    if (s.parameter == "mesh") {
      c.discretization.nx = s.meshes[i][0];
      c.discretization.ny = s.meshes[i][1];
      const auto [lo, hi] = bounding_box(c.domain.outer);
      param = std::max((hi.x() - lo.x()) / (c.discretization.nx - 1), (hi.y() - lo.y()) / (c.discretization.ny - 1));
    } else {
      c.nn.neurons = s.neurons[i];
      param = s.neurons[i];
    }
    Simulation sim(c);
    RunOptions opt;
    opt.write_outputs = false;
    run_simulation(sim, opt);
    Expression::Variables v = c.variables();
    v["step"] = c.load.steps;
    v["steps"] = c.load.steps;
    v["t"] = 1.0;
    t.rows.push_back({param, error_norms(sim.model(false), sim.state().p, *c.exact, v)});
  }
  std::vector<double> x, e0, e1;
  for (const auto& r : t.rows) {
    x.push_back(r.parameter);
    e0.push_back(r.error.l2);
    e1.push_back(r.error.h1);
  }
  t.l2_slope = loglog_slope(x, e0);
  t.h1_slope = loglog_slope(x, e1);
  return t;
}

void write_convergence_csv(const ConvergenceTable& t, std::ostream& os) {
  os.precision(std::numeric_limits<double>::max_digits10);
  os << t.parameter << ",l2,l2_rel,h1,h1_rel\n";
  for (const auto& r : t.rows)
    os << r.parameter << ',' << r.error.l2 << ',' << r.error.l2_rel << ',' << r.error.h1 << ',' << r.error.h1_rel
       << '\n';
  os << "slope," << t.l2_slope << ",," << t.h1_slope << ",\n";
}

GradientCheck check_gradient(const LossModel& model, const Eigen::VectorXd& p,
                             const std::vector<Eigen::Index>& indices, double rel_step) {
  Eigen::VectorXd g(p.size());
  model.evaluate(p, &g);
  const double gmax = g.lpNorm<Eigen::Infinity>();
  GradientCheck r;
  Eigen::VectorXd q = p;
  for (Eigen::Index i : indices) {
    const double h = rel_step * std::max(1.0, std::abs(p(i)));
    q(i) = p(i) + h;
    const LossBreakdown fp = model.evaluate(q);
    const auto sp = model.active_set(q);
    q(i) = p(i) - h;
    const LossBreakdown fm = model.evaluate(q);
    const auto sm = model.active_set(q);
    q(i) = p(i);
    if (sp != sm) {
      ++r.skipped;
      continue;
    }
    const double fd = ((fp.strain - fm.strain) + (fp.external - fm.external) + (fp.reg - fm.reg) +
                       (fp.bc - fm.bc)) / (2.0 * h);
    const double scale = std::abs(fp.strain) + std::abs(fp.external) + std::abs(fp.reg) + std::abs(fp.bc);
    const double roundoff = 100.0 * std::numeric_limits<double>::epsilon() * scale / h;
    const double diff = std::abs(fd - g(i));
    const double err = diff <= roundoff ? 0.0 : diff / std::max({std::abs(fd), std::abs(g(i)), 1e-8 * gmax});
    ++r.checked;
    if (r.worst < 0 || err > r.max_rel_error) {
      r.max_rel_error = err;
      r.worst = i;
    }
  }
  return r;
}

std::vector<Eigen::Index> GradientInstance::indices() const {
  std::vector<Eigen::Index> idx(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) idx[i] = i;
  return idx;
}

GradientInstance make_gradient_instance(const RunConfig& cfg, std::uint64_t seed) {
  RunConfig g = cfg;
  g.discretization.nx = 3;
  g.discretization.ny = 3;
  g.discretization.refine.clear();
  g.nn.blocks = 1;
  g.nn.kernels = 4;
  g.nn.hidden_layers = 1;
  g.nn.neurons = 4;
  g.nn.kappa_reg = std::min(g.nn.kappa_reg, 1.0);
  if (!(g.material.psi_c() > 0.0) && !(g.nn.enrich_threshold > 0.0)) g.nn.enrich_threshold = 1.0;

  GradientInstance inst;
  inst.problem = std::make_unique<Problem>(Problem::build(make_setup(g)));
  Problem& pb = *inst.problem;
  apply_load_step(g, std::min(1, g.load.steps), pb);
  inst.state = pb.initial_state();
  inst.enriched.assign(pb.setup.nodes.size(), 1);
  inst.live_damage = g.material.damage;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const ParameterLayout& lay = pb.layout;
  const double size = g.domain.size();
  const double u_ref = pb.reference_displacement(1e-3 * size);

  // Displacements: the frozen elastic solution with 0.1% nodal noise; W^C two orders smaller.
  inst.p = Eigen::VectorXd::Zero(lay.size());
  stage_a_solve(pb, inst.state, inst.enriched, false, inst.p);
  for (Eigen::Index i = 0; i < lay.d_size(); ++i) inst.p(i) += 1e-3 * (std::abs(inst.p(i)) + 0.1 * u_ref) * uni(rng);
  for (Eigen::Index i = lay.wc_offset(); i < lay.wc_offset() + lay.wc_size(); ++i) inst.p(i) = 0.01 * u_ref * uni(rng);

  // Network: the identity fit, rescaled so the largest parametric gradient
  // row is 10% above one. The regularization weight is lowered to keep its
  // rounding noise below the finite-difference resolution.
  auto blocks = initialize_blocks(g.nn, pb.ell_nn, pb.mesh.points, seed);
  pack_blocks(lay, blocks, inst.p);
  double nmax = 0.0;
  for (const auto& blk : inst.model().forward(inst.p).ygrad)
    for (const auto& yg : blk) nmax = std::max(nmax, yg.rowwise().norm().maxCoeff());
  if (nmax > 0.0)
    for (auto& blk : blocks) blk.net.W.back() *= 1.1 / nmax;
  pack_blocks(lay, blocks, inst.p);
  for (Eigen::Index i = lay.wl_offset(0); i < lay.size(); ++i)
    inst.p(i) += 1e-4 * std::max(std::abs(inst.p(i)), 0.1) * uni(rng);
  return inst;
}

namespace {

std::vector<Vec2> random_points(const Domain2D& d, int n, std::mt19937_64& rng) {
  const auto [lo, hi] = bounding_box(d.outer);
  std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());
  std::vector<Vec2> pts;
  for (int tries = 0; static_cast<int>(pts.size()) < n && tries < 100 * n; ++tries) {
    const Vec2 x(ux(rng), uy(rng));
    if (point_in_polygon(x, d.outer) && !d.inside_hole(x, 1e-9 * d.size())) pts.push_back(x);
  }
  return pts;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

}  // namespace

std::vector<ValidationItem> validate_config(const RunConfig& cfg) {
  std::vector<ValidationItem> items;
  std::mt19937_64 rng(cfg.nn.seed);
  RunConfig small = cfg;
  small.discretization.nx = std::min(cfg.discretization.nx, 9);
  small.discretization.ny = std::min(cfg.discretization.ny, 9);
  small.discretization.refine.clear();
  auto guarded = [&](const std::string& name, auto&& fn) {
    ValidationItem it{name, false, ""};
    try {
      fn(it);
    } catch (const std::exception& e) {
      it.pass = false;
      it.detail = e.what();
    }
    items.push_back(it);
  };

  guarded("rk_reproduction", [&](ValidationItem& it) {
    const NodeSet nodes = build_uniform_grid(small.discretization.nx, small.discretization.ny, small.domain,
                                             small.rk.normalized_support);
    const RKApproximation rk(nodes, small.rk, &small.domain);
    double pu = 0.0, lin = 0.0;
    for (const Vec2& x : random_points(small.domain, 200, rng)) {
      const ShapeEval s = rk.shape_values(x);
      Vec2 rep = Vec2::Zero();
      for (std::size_t k = 0; k < s.index.size(); ++k) rep += s.value[k] * nodes.x[s.index[k]];
      pu = std::max(pu, std::abs(s.sum() - 1.0));
      lin = std::max(lin, (rep - x).lpNorm<Eigen::Infinity>() / small.domain.size());
    }
    it.pass = pu <= 1e-10 && (small.rk.order < 1 || lin <= 1e-9);
    it.detail = "partition of unity " + fmt(pu) + ", linear reproduction " + fmt(lin);
  });

  guarded("scni_linear_exactness", [&](ValidationItem& it) {
    const NodeSet nodes = build_uniform_grid(small.discretization.nx, small.discretization.ny, small.domain,
                                             small.rk.normalized_support);
    std::vector<Polygon> zones;
    for (const auto& z : small.zones) zones.push_back(z.polygon);
    const SmoothingCellMesh mesh = build_smoothing_cells(nodes, small.domain, {}, zones);
    const SmoothingOperator op = build_operators(mesh);
    const double a = 0.3, b = -1.7, c = 0.9;
    Eigen::VectorXd lin(mesh.points.size()), cst = Eigen::VectorXd::Constant(mesh.points.size(), a);
    for (std::size_t e = 0; e < mesh.points.size(); ++e) lin(e) = a + b * mesh.points[e].x() + c * mesh.points[e].y();
    const Eigen::MatrixX2d g = smooth(op, lin), g0 = smooth(op, cst);
    const double err = std::max((g.col(0).array() - b).abs().maxCoeff(), (g.col(1).array() - c).abs().maxCoeff());
    const double err0 = g0.cwiseAbs().maxCoeff();
    it.pass = err <= 1e-9 && err0 <= 1e-10;
    it.detail = "linear field " + fmt(err) + ", constant field " + fmt(err0);
  });

  guarded("gradient_check", [&](ValidationItem& it) {
    const GradientInstance inst = make_gradient_instance(cfg, cfg.nn.seed);
    const GradientCheck r = check_gradient(inst.model(), inst.p, inst.indices());
    it.pass = r.max_rel_error <= 1e-6 && r.checked > 0;
    it.detail = "max relative error " + fmt(r.max_rel_error) + " over " + std::to_string(r.checked) +
                " components (" + std::to_string(r.skipped) + " at kinks skipped)";
  });
  return items;
}

}  // namespace nnrk
