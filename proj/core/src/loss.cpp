#include "nnrk/loss.hpp"

#include <cmath>
#include <sstream>

#include "nnrk/errors.hpp"
#include "parallel.hpp"

namespace nnrk {

Problem Problem::build(ProblemSetup setup) {
  setup.domain.validate();
  setup.material.validate();
  setup.nn.validate();
  if (!(setup.kappa_bc > 0.0)) throw Error("optimizer.kappa_bc must be positive");
  for (const auto& z : setup.zones) {
    if (z.polygon.size() < 3 || !is_ccw(z.polygon) || !is_convex(z.polygon))
      throw GeometryError("material zone polygons must be convex and counter-clockwise");
    if (!(z.modulus_factor > 0.0)) throw Error("material zone modulus_factor must be positive");
    if (!(z.eta >= 0.0 && z.eta < 1.0)) throw Error("material zone eta must lie in [0, 1)");
  }
  RKApproximation rk(setup.nodes, setup.rk, &setup.domain);
  Problem pb(std::move(setup), std::move(rk));
  const auto& s = pb.setup;

  std::vector<Polygon> conforming;
  for (const auto& z : s.zones) conforming.push_back(z.polygon);
  pb.mesh = build_smoothing_cells(s.nodes, s.domain, s.refine, conforming);
  pb.op = build_operators(pb.mesh);
  pb.surface = build_shape_table(pb.rk, pb.mesh.points);
  std::vector<Vec2> centroids;
  for (const auto& c : pb.mesh.cells) centroids.push_back(c.centroid);
  pb.centroid = build_shape_table(pb.rk, centroids);

  const Eigen::Index nc = static_cast<Eigen::Index>(pb.mesh.cells.size());
  pb.surface_points.resize(2, static_cast<Eigen::Index>(pb.mesh.points.size()));
  for (std::size_t e = 0; e < pb.mesh.points.size(); ++e) pb.surface_points.col(e) = pb.mesh.points[e];
  pb.centroid_points.resize(2, nc);
  pb.volume.resize(nc);
  pb.modulus = Eigen::VectorXd::Ones(nc);
  for (Eigen::Index L = 0; L < nc; ++L) {
    const auto& cell = pb.mesh.cells[L];
    pb.centroid_points.col(L) = cell.centroid;
    pb.volume(L) = cell.volume;
    for (const auto& z : s.zones)
      if (point_in_polygon(cell.centroid, z.polygon)) pb.modulus(L) *= z.modulus_factor;
    pb.lame.push_back(nnrk::lame(s.material, pb.modulus(L)));
  }
  pb.layout = ParameterLayout::make(static_cast<int>(s.nodes.size()), s.nn);
  pb.ell_nn = s.nn.length_scale > 0.0 ? s.nn.length_scale : s.material.length_scale;
  return pb;
}

MaterialState Problem::initial_state() const {
  MaterialState st = MaterialState::initial(num_cells(), setup.material);
  for (Eigen::Index L = 0; L < num_cells(); ++L)
    for (const auto& z : setup.zones)
      if (z.eta > 0.0 && point_in_polygon(mesh.cells[L].centroid, z.polygon)) {
        st.eta(L) = std::max(st.eta(L), z.eta);
        st.H(L) = st.eta(L) * st.p(L) / (1.0 - st.eta(L));
      }
  return st;
}

double Problem::reference_displacement(double floor) const {
  double m = floor;
  for (const auto& d : dirichlet)
    for (int c = 0; c < 2; ++c)
      if (d.fixed[c]) m = std::max(m, std::abs(d.g(c)));
  return m;
}

LossModel::LossModel(const Problem& problem, const MaterialState& state, std::vector<char> enriched,
                     bool network, bool live_damage)
    : problem_(problem), state_(state), enriched_(std::move(enriched)), live_(live_damage), kappa_(problem.setup.kappa_bc) {
  enriched_.resize(problem_.setup.nodes.size(), 0);
  network_ = network && problem_.layout.blocks > 0;
  if (state_.size() != problem_.num_cells()) throw DimensionError("material state does not match the mesh");
}

double LossModel::penalty_modulus() const { return kappa_ * problem_.setup.material.E; }

void LossModel::point_values(const ShapeTable& table, const Eigen::VectorXd& p, const KernelEval* ke,
                             Eigen::MatrixX2d& u, Eigen::MatrixX2d* u_rk, std::vector<Eigen::MatrixX2d>* v) const {
  const auto& layout = problem_.layout;
  const Eigen::Index n = static_cast<Eigen::Index>(table.num_points());
  const int nt = ke ? static_cast<int>(ke->phi_hat.cols()) : 0;
  u.setZero(n, 2);
  if (u_rk) u_rk->setZero(n, 2);
  if (v) v->assign(nt, Eigen::MatrixX2d::Zero(n, 2));
  std::vector<Eigen::MatrixX2d> local_v;
  std::vector<Eigen::MatrixX2d>& vv = v ? *v : local_v;
  if (!v) vv.assign(nt, Eigen::MatrixX2d::Zero(n, 2));
  const double* wc = p.data() + layout.wc_offset();
  detail::parallel_for(static_cast<std::size_t>(n), [&](std::size_t e) {
    Vec2 urk = Vec2::Zero();
    for (int k = table.offset[e]; k < table.offset[e + 1]; ++k) {
      const int I = table.node[k];
      urk += table.value[k] * Vec2(p(2 * I), p(2 * I + 1));
    }
    Vec2 ut = urk;
    for (int col = 0; col < nt; ++col) {
      Vec2 s = Vec2::Zero();
      for (int k = table.offset[e]; k < table.offset[e + 1]; ++k) {
        const int I = table.node[k];
        if (!enriched_[I]) continue;
        const double* w = wc + (static_cast<Eigen::Index>(col) * layout.num_nodes + I) * 2;
        s += table.value[k] * Vec2(w[0], w[1]);
      }
      vv[col].row(e) = s.transpose();
      ut += ke->phi_hat(e, col) * s;
    }
    u.row(e) = ut.transpose();
    if (u_rk) u_rk->row(e) = urk.transpose();
  });
}

void LossModel::point_gradient(const ShapeTable& table, const KernelEval* ke, const std::vector<Eigen::MatrixX2d>& v,
                               const Eigen::MatrixX2d& ubar, Eigen::VectorXd& grad, Eigen::MatrixXd* d_phi_hat) const {
  const auto& layout = problem_.layout;
  const Eigen::Index n = static_cast<Eigen::Index>(table.num_points());
  const int nt = ke ? static_cast<int>(ke->phi_hat.cols()) : 0;
  double* wc = grad.data() + layout.wc_offset();
  for (Eigen::Index e = 0; e < n; ++e) {
    const double b0 = ubar(e, 0), b1 = ubar(e, 1);
    if (b0 == 0.0 && b1 == 0.0) continue;
    for (int k = table.offset[e]; k < table.offset[e + 1]; ++k) {
      const int I = table.node[k];
      const double psi = table.value[k];
      grad(2 * I) += psi * b0;
      grad(2 * I + 1) += psi * b1;
      if (!enriched_[I]) continue;
      for (int col = 0; col < nt; ++col) {
        const double f = ke->phi_hat(e, col) * psi;
        double* w = wc + (static_cast<Eigen::Index>(col) * layout.num_nodes + I) * 2;
        w[0] += f * b0;
        w[1] += f * b1;
      }
    }
    if (d_phi_hat)
      for (int col = 0; col < nt; ++col) (*d_phi_hat)(e, col) += b0 * v[col](e, 0) + b1 * v[col](e, 1);
  }
}

ForwardPass LossModel::forward(const Eigen::VectorXd& p) const {
  const auto& pb = problem_;
  const auto& layout = pb.layout;
  if (p.size() != layout.size()) throw DimensionError("loss: parameter vector does not match the layout");
  ForwardPass fw;
  std::vector<NNBlock> blocks;
  if (network_) {
    blocks = unpack_blocks(layout, p);
    fw.kernels = evaluate_kernels(blocks, pb.setup.nn, pb.ell_nn, pb.surface_points, true);
  }
  point_values(pb.surface, p, network_ ? &*fw.kernels : nullptr, fw.u, nullptr, &fw.v);

  const Eigen::Index nc = pb.num_cells();
  const Eigen::MatrixX2d g0 = pb.op.P[0] * fw.u;
  const Eigen::MatrixX2d g1 = pb.op.P[1] * fw.u;
  fw.grad.resize(nc);
  fw.cell.resize(nc);
  const auto& mat = pb.setup.material;
  const double psi_c = mat.psi_c();
  const bool live = live_ && mat.damage;
  detail::parallel_for(static_cast<std::size_t>(nc), [&](std::size_t L) {
    Mat2 G;
    G << g0(L, 0), g1(L, 0), g0(L, 1), g1(L, 1);
    fw.grad[L] = G;
    const Mat2 eps = 0.5 * (G + G.transpose());
    if (live) {
      fw.cell[L] = live_response(eps, state_.H(L), state_.p(L), psi_c, pb.lame[L], true);
    } else {
      LiveResponse& r = fw.cell[L];
      r.split = spectral_split(eps, pb.lame[L]);
      r.eta = state_.eta(L);
      r.H = state_.H(L);
      r.psi = energy_density(eps, r.eta, state_.p(L), pb.lame[L]);
      r.sigma = stress(eps, r.eta, pb.lame[L]);
    }
  });
  LossBreakdown& loss = fw.loss;
  for (Eigen::Index L = 0; L < nc; ++L) {
    const double e = fw.cell[L].psi * pb.volume(L);
    if (!std::isfinite(e)) {
      std::ostringstream os;
      os << "non-finite strain energy in cell " << L << " at (" << pb.mesh.cells[L].centroid.x() << ", "
         << pb.mesh.cells[L].centroid.y() << ")";
      throw NumericError(os.str(), static_cast<int>(L));
    }
    loss.strain += e;
  }

  if (network_) {
    const double kmu = pb.setup.nn.kappa_reg * lame(mat).mu;
    fw.ygrad.resize(blocks.size());
    for (std::size_t J = 0; J < blocks.size(); ++J) {
      for (int a = 0; a < 2; ++a) {
        const Eigen::VectorXd ya = fw.kernels->y[J].row(a).transpose();
        auto& yg = fw.ygrad[J][a];
        yg.resize(nc, 2);
        yg.col(0) = pb.op.P[0] * ya;
        yg.col(1) = pb.op.P[1] * ya;
        for (Eigen::Index L = 0; L < nc; ++L) {
          const double ex = yg.row(L).norm() - 1.0;
          if (ex > 0.0) loss.reg += 0.5 * kmu * ex * ex * pb.volume(L);
        }
      }
    }
  }

  const double kE = penalty_modulus();
  for (const auto& d : pb.dirichlet) {
    const auto& bs = pb.mesh.boundary[d.boundary];
    for (int c = 0; c < 2; ++c) {
      if (!d.fixed[c]) continue;
      const double r = fw.u(bs.point, c) - d.g(c);
      loss.bc += (d.multiplier(c) * r + 0.5 * kE * r * r) * bs.length;
    }
  }
  for (const auto& t : pb.traction) {
    const auto& bs = pb.mesh.boundary[t.boundary];
    loss.external -= t.t.dot(fw.u.row(bs.point).transpose()) * bs.length;
  }
  if (pb.body.size() > 0) {
    if (network_) fw.centroid_kernels = evaluate_kernels(blocks, pb.setup.nn, pb.ell_nn, pb.centroid_points, true);
    point_values(pb.centroid, p, network_ ? &*fw.centroid_kernels : nullptr, fw.u_centroid, nullptr,
                 &fw.v_centroid);
    for (Eigen::Index L = 0; L < nc; ++L)
      loss.external -= pb.body.row(L).dot(fw.u_centroid.row(L)) * pb.volume(L);
  }
  loss.total = loss.strain + loss.external + loss.reg + loss.bc;
  if (!std::isfinite(loss.total)) throw NumericError("non-finite loss", -1);
  return fw;
}

LossBreakdown LossModel::evaluate(const Eigen::VectorXd& p, Eigen::VectorXd* grad) const {
  ForwardPass fw = forward(p);
  if (!grad) return fw.loss;

  const auto& pb = problem_;
  const auto& layout = pb.layout;
  const Eigen::Index nc = pb.num_cells();
  const Eigen::Index np = pb.surface_points.cols();
  grad->setZero(layout.size());

  Eigen::MatrixX2d s0(nc, 2), s1(nc, 2);
  for (Eigen::Index L = 0; L < nc; ++L) {
    const Mat2& sig = fw.cell[L].sigma;
    const double V = pb.volume(L);
    s0(L, 0) = V * sig(0, 0);
    s0(L, 1) = V * sig(1, 0);
    s1(L, 0) = V * sig(0, 1);
    s1(L, 1) = V * sig(1, 1);
  }
  Eigen::MatrixX2d ubar = pb.op.P[0].transpose() * s0 + pb.op.P[1].transpose() * s1;

  const double kE = penalty_modulus();
  for (const auto& d : pb.dirichlet) {
    const auto& bs = pb.mesh.boundary[d.boundary];
    for (int c = 0; c < 2; ++c) {
      if (!d.fixed[c]) continue;
      const double r = fw.u(bs.point, c) - d.g(c);
      ubar(bs.point, c) += (d.multiplier(c) + kE * r) * bs.length;
    }
  }
  for (const auto& t : pb.traction) {
    const auto& bs = pb.mesh.boundary[t.boundary];
    ubar.row(bs.point) -= t.t.transpose() * bs.length;
  }

  Eigen::MatrixXd dphi;
  if (network_) dphi = Eigen::MatrixXd::Zero(np, fw.kernels->phi_hat.cols());
  point_gradient(pb.surface, network_ ? &*fw.kernels : nullptr, fw.v, ubar, *grad, network_ ? &dphi : nullptr);

  if (network_) {
    const auto blocks = unpack_blocks(layout, p);
    const double kmu = pb.setup.nn.kappa_reg * lame(pb.setup.material).mu;
    std::vector<Eigen::Matrix2Xd> dy(blocks.size(), Eigen::Matrix2Xd::Zero(2, np));
    for (std::size_t J = 0; J < blocks.size(); ++J) {
      for (int a = 0; a < 2; ++a) {
        const auto& yg = fw.ygrad[J][a];
        Eigen::VectorXd c0 = Eigen::VectorXd::Zero(nc), c1 = Eigen::VectorXd::Zero(nc);
        for (Eigen::Index L = 0; L < nc; ++L) {
          const double n = yg.row(L).norm();
          if (n - 1.0 > 0.0) {
            const double f = kmu * (n - 1.0) * pb.volume(L) / n;
            c0(L) = f * yg(L, 0);
            c1(L) = f * yg(L, 1);
          }
        }
        dy[J].row(a) = (pb.op.P[0].transpose() * c0 + pb.op.P[1].transpose() * c1).transpose();
      }
    }
    const BlockGradient bg = backprop_kernels(blocks, pb.setup.nn, pb.ell_nn, *fw.kernels, dphi, &dy);
    add_block_gradient(layout, bg, *grad);

    if (pb.body.size() > 0) {
      Eigen::MatrixX2d ub(nc, 2);
      for (Eigen::Index L = 0; L < nc; ++L) ub.row(L) = -pb.body.row(L) * pb.volume(L);
      Eigen::MatrixXd dphic = Eigen::MatrixXd::Zero(nc, fw.centroid_kernels->phi_hat.cols());
      point_gradient(pb.centroid, &*fw.centroid_kernels, fw.v_centroid, ub, *grad, &dphic);
      const BlockGradient bgc =
          backprop_kernels(blocks, pb.setup.nn, pb.ell_nn, *fw.centroid_kernels, dphic, nullptr);
      add_block_gradient(layout, bgc, *grad);
    }
  } else if (pb.body.size() > 0) {
    Eigen::MatrixX2d ub(nc, 2);
    for (Eigen::Index L = 0; L < nc; ++L) ub.row(L) = -pb.body.row(L) * pb.volume(L);
    point_gradient(pb.centroid, nullptr, fw.v_centroid, ub, *grad, nullptr);
  }
  return fw.loss;
}

std::vector<std::uint8_t> LossModel::active_set(const Eigen::VectorXd& p) const {
  const ForwardPass fw = forward(p);
  std::vector<std::uint8_t> sig;
  for (std::size_t L = 0; L < fw.cell.size(); ++L) {
    const Mat2 eps = 0.5 * (fw.grad[L] + fw.grad[L].transpose());
    const Eigen::Vector2d e = principal_strains(eps);
    sig.push_back(static_cast<std::uint8_t>((e(0) > 0.0) | ((e(1) > 0.0) << 1) | ((eps.trace() > 0.0) << 2) |
                                            (fw.cell[L].live << 3)));
  }
  for (const auto& blk : fw.ygrad)
    for (const auto& yg : blk)
      for (Eigen::Index L = 0; L < yg.rows(); ++L) sig.push_back(yg.row(L).norm() > 1.0);
  return sig;
}

PointFields LossModel::sample(const Eigen::VectorXd& p, std::span<const Vec2> points) const {
  const auto& pb = problem_;
  const ShapeTable table = build_shape_table(pb.rk, points);
  PointFields out;
  std::optional<KernelEval> ke;
  if (network_) {
    Eigen::Matrix2Xd X(2, static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) X.col(i) = points[i];
    ke = evaluate_kernels(unpack_blocks(pb.layout, p), pb.setup.nn, pb.ell_nn, X, false);
    out.y = ke->y;
  }
  point_values(table, p, ke ? &*ke : nullptr, out.u, &out.u_rk, nullptr);
  out.u_nn = out.u - out.u_rk;
  return out;
}

std::vector<Mat2> LossModel::sample_gradient(const Eigen::VectorXd& p, std::span<const Vec2> points) const {
  const double h = 1e-7 * problem_.setup.domain.size();
  const std::size_t n = points.size();
  std::vector<Vec2> shifted;
  shifted.reserve(4 * n);
  for (const Vec2& x : points)
    for (const Vec2& d : {Vec2(h, 0), Vec2(-h, 0), Vec2(0, h), Vec2(0, -h)}) shifted.push_back(x + d);
  const PointFields f = sample(p, shifted);
  std::vector<Mat2> G(n);
  for (std::size_t i = 0; i < n; ++i) {
    G[i].col(0) = (f.u.row(4 * i) - f.u.row(4 * i + 1)).transpose() / (2 * h);
    G[i].col(1) = (f.u.row(4 * i + 2) - f.u.row(4 * i + 3)).transpose() / (2 * h);
  }
  return G;
}

Eigen::MatrixXd LossModel::surface_kernels(const Eigen::VectorXd& p) const {
  if (!network_) return {};
  const auto& pb = problem_;
  return evaluate_kernels(unpack_blocks(pb.layout, p), pb.setup.nn, pb.ell_nn, pb.surface_points, false).phi_hat;
}

Vec2 LossModel::reaction(const ForwardPass& fw) const {
  const auto& pb = problem_;
  const double kE = penalty_modulus();
  Vec2 R = Vec2::Zero();
  for (const auto& d : pb.dirichlet) {
    if (!d.driven) continue;
    const auto& bs = pb.mesh.boundary[d.boundary];
    for (int c = 0; c < 2; ++c)
      if (d.fixed[c]) R(c) += (d.multiplier(c) + kE * (fw.u(bs.point, c) - d.g(c))) * bs.length;
  }
  return R;
}

}  // namespace nnrk
