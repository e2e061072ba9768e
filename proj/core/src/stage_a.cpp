#include "nnrk/stage_a.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

#include "nnrk/errors.hpp"

namespace nnrk {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

struct ScalarMap {
  SpMat A;                          // surface point x scalar unknown
  std::vector<Eigen::Index> param;  // scalar unknown -> parameter index of component 0
};

ScalarMap scalar_map(const Problem& pb, const Eigen::MatrixXd& phi_hat, const std::vector<int>& enriched) {
  const auto& L = pb.layout;
  const auto& t = pb.surface;
  const int np = L.num_nodes, ns = static_cast<int>(enriched.size());
  const int nk = static_cast<int>(phi_hat.cols());
  std::vector<int> local(np, -1);
  for (int s = 0; s < ns; ++s) local[enriched[s]] = s;

  ScalarMap m;
  for (int I = 0; I < np; ++I) m.param.push_back(L.d_index(I, 0));
  for (int col = 0; col < nk; ++col)
    for (int s = 0; s < ns; ++s) m.param.push_back(L.wc_offset() + (Eigen::Index(col) * np + enriched[s]) * 2);

  std::vector<Eigen::Triplet<double>> tr;
  for (std::size_t e = 0; e < t.num_points(); ++e)
    for (int k = t.offset[e]; k < t.offset[e + 1]; ++k) {
      const int I = t.node[k];
      tr.emplace_back(static_cast<int>(e), I, t.value[k]);
      if (local[I] >= 0)
        for (int col = 0; col < nk; ++col)
          tr.emplace_back(static_cast<int>(e), np + col * ns + local[I], phi_hat(e, col) * t.value[k]);
    }
  m.A.resize(static_cast<Eigen::Index>(t.num_points()), static_cast<Eigen::Index>(m.param.size()));
  m.A.setFromTriplets(tr.begin(), tr.end());
  return m;
}

double bc_residual(const Problem& pb, const ForwardPass& fw) {
  double r = 0.0;
  for (const auto& d : pb.dirichlet) {
    const int e = pb.mesh.boundary[d.boundary].point;
    for (int c = 0; c < 2; ++c)
      if (d.fixed[c]) r = std::max(r, std::abs(fw.u(e, c) - d.g(c)));
  }
  return r;
}

}  // namespace

StageAResult stage_a_solve(Problem& problem, const MaterialState& state, const std::vector<char>& enriched,
                           bool network, Eigen::VectorXd& p, const StageAOptions& opt) {
  const Problem& pb = problem;
  LossModel model(pb, state, enriched, network, false);
  model.set_penalty(std::max(pb.setup.kappa_bc, opt.kappa));
  std::vector<int> sbar;
  for (std::size_t I = 0; I < model.enriched().size(); ++I)
    if (model.enriched()[I] && model.network()) sbar.push_back(static_cast<int>(I));
  const Eigen::MatrixXd phi_hat = model.network() ? model.surface_kernels(p) : Eigen::MatrixXd();
  const ScalarMap map = scalar_map(pb, phi_hat, sbar);
  const Eigen::Index ns = map.A.cols(), nd = pb.layout.num_nodes;
  const Eigen::Index nc = pb.num_cells();
  const double kE = model.penalty_modulus();

  // Gradient operator: row 4L + 2i + alpha, column 2j + i.
  SpMat B;
  {
    const SpMat B0 = pb.op.P[0] * map.A, B1 = pb.op.P[1] * map.A;
    std::vector<Eigen::Triplet<double>> tr;
    tr.reserve(2 * (B0.nonZeros() + B1.nonZeros()));
    for (int a = 0; a < 2; ++a) {
      const SpMat& Ba = a == 0 ? B0 : B1;
      for (Eigen::Index j = 0; j < Ba.outerSize(); ++j)
        for (SpMat::InnerIterator it(Ba, j); it; ++it)
          for (int i = 0; i < 2; ++i) tr.emplace_back(4 * it.row() + 2 * i + a, 2 * j + i, it.value());
    }
    B.resize(4 * nc, 2 * ns);
    B.setFromTriplets(tr.begin(), tr.end());
  }
  // Boundary penalty Hessian (constant).
  SpMat Kbc(2 * ns, 2 * ns);
  {
    std::vector<Eigen::Triplet<double>> tr;
    const Eigen::SparseMatrix<double, Eigen::RowMajor> Ar = map.A;
    using RowIt = Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator;
    for (const auto& d : pb.dirichlet) {
      const auto& bs = pb.mesh.boundary[d.boundary];
      for (RowIt ia(Ar, bs.point); ia; ++ia)
        for (RowIt ib(Ar, bs.point); ib; ++ib)
          for (int c = 0; c < 2; ++c)
            if (d.fixed[c])
              tr.emplace_back(2 * ia.col() + c, 2 * ib.col() + c, kE * bs.length * ia.value() * ib.value());
    }
    Kbc.setFromTriplets(tr.begin(), tr.end());
  }

  auto gather = [&](const Eigen::VectorXd& full) {
    Eigen::VectorXd z(2 * ns);
    for (Eigen::Index j = 0; j < ns; ++j)
      for (int c = 0; c < 2; ++c) z(2 * j + c) = full(map.param[j] + c);
    return z;
  };

  StageAResult res;
  const double u_ref = pb.reference_displacement(0.0);
  const double bc_scale = u_ref > 0.0 ? u_ref : 1.0;
  Eigen::VectorXd grad(pb.layout.size());
  for (int outer = 0;; ++outer) {
    double f = model.evaluate(p, &grad).total;
    for (int it = 0; it < opt.max_newton; ++it) {
      const ForwardPass fw = model.forward(p);
      std::vector<Eigen::Triplet<double>> dt;
      dt.reserve(16 * nc);
      for (Eigen::Index L = 0; L < nc; ++L) {
        const Mat2 G = fw.grad[L];
        const Eigen::Matrix4d C =
            pb.volume(L) * tangent(0.5 * (G + G.transpose()), state.eta(L), pb.lame[L]);
        for (int r = 0; r < 4; ++r)
          for (int c = 0; c < 4; ++c)
            if (C(r, c) != 0.0) dt.emplace_back(4 * L + r, 4 * L + c, C(r, c));
      }
      SpMat D(4 * nc, 4 * nc);
      D.setFromTriplets(dt.begin(), dt.end());
      SpMat K = SpMat(B.transpose() * D * B) + Kbc;
      if (ns > nd) {
        double dmax = 0.0;
        for (Eigen::Index k = 0; k < K.rows(); ++k) dmax = std::max(dmax, K.coeff(k, k));
        for (Eigen::Index k = 2 * nd; k < 2 * ns; ++k) K.coeffRef(k, k) += opt.ridge * dmax;
      }
      Eigen::SimplicialLDLT<SpMat> solver(K);
      if (solver.info() != Eigen::Success) throw SolverError("stage A: factorization failed");
      const Eigen::VectorXd piv = solver.vectorD();
      if (piv.size() > 0 && piv.cwiseAbs().minCoeff() <= 1e-14 * piv.cwiseAbs().maxCoeff())
        throw SolverError("stage A: singular system (unconstrained rigid modes; check Dirichlet coverage)");
      const Eigen::VectorXd dz = solver.solve(-gather(grad));
      if (!dz.allFinite()) throw SolverError("stage A: non-finite solution");

      const Eigen::VectorXd p0 = p;
      double step = 1.0, fn = f;
      for (int ls = 0; ls < 30; ++ls) {
        p = p0;
        for (Eigen::Index j = 0; j < ns; ++j)
          for (int c = 0; c < 2; ++c) p(map.param[j] + c) += step * dz(2 * j + c);
        fn = model.evaluate(p, &grad).total;
        if (fn <= f + 1e-14 * std::abs(f)) break;
        step *= 0.5;
      }
      ++res.newton_iterations;
      f = fn;
      const double zmax = std::max(gather(p).lpNorm<Eigen::Infinity>(), bc_scale);
      if (step * dz.lpNorm<Eigen::Infinity>() <= opt.newton_tol * zmax) break;
    }
    const ForwardPass fw = model.forward(p);
    res.bc_residual = bc_residual(pb, fw);
    if (res.bc_residual <= opt.bc_tol * bc_scale || outer >= opt.max_multiplier_updates) break;
    for (auto& d : problem.dirichlet) {
      const int e = pb.mesh.boundary[d.boundary].point;
      for (int c = 0; c < 2; ++c)
        if (d.fixed[c]) d.multiplier(c) += kE * (fw.u(e, c) - d.g(c));
    }
    ++res.multiplier_updates;
  }
  res.loss = LossModel(pb, state, enriched, network, false).forward(p).loss;
  return res;
}

}  // namespace nnrk
