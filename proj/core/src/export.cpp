#include "nnrk/export.hpp"

#include <fstream>
#include <limits>
#include <ostream>

#include "nnrk/errors.hpp"

namespace nnrk {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CellFields cell_fields(const LossModel& model, const Eigen::VectorXd& p) {
  const Problem& pb = model.problem();
  const ForwardPass fw = model.forward(p);
  const Eigen::Index nc = pb.num_cells();
  std::vector<Vec2> centroids;
  for (const auto& c : pb.mesh.cells) centroids.push_back(c.centroid);
  const PointFields pf = model.sample(p, centroids);

  CellFields f;
  f.x = pb.centroid_points;
  f.u = pf.u;
  f.u_rk = pf.u_rk;
  f.u_nn = pf.u_nn;
  f.eps.resize(nc, 3);
  f.eta.resize(nc);
  f.psi_pos.resize(nc);
  f.y = Eigen::MatrixX2d::Zero(nc, 2);
  f.grad_y_norm = Eigen::VectorXd::Zero(nc);
  for (Eigen::Index L = 0; L < nc; ++L) {
    const Mat2& G = fw.grad[L];
    f.eps(L, 0) = G(0, 0);
    f.eps(L, 1) = G(1, 1);
    f.eps(L, 2) = 0.5 * (G(0, 1) + G(1, 0));
    f.eta(L) = fw.cell[L].eta;
    f.psi_pos(L) = fw.cell[L].split.psi_pos;
  }
  if (!pf.y.empty()) f.y = pf.y[0].transpose();
  for (const auto& blk : fw.ygrad)
    for (const auto& yg : blk)
      for (Eigen::Index L = 0; L < nc; ++L) f.grad_y_norm(L) = std::max(f.grad_y_norm(L), yg.row(L).norm());
  return f;
}

void write_cell_csv(const CellFields& f, std::ostream& os) {
  os.precision(std::numeric_limits<double>::max_digits10);
  os << "cell,x,y,u1,u2,u_rk1,u_rk2,u_nn1,u_nn2,eps11,eps22,eps12,eta,psi_pos,y1,y2,grad_y_norm\n";
  for (Eigen::Index L = 0; L < f.x.cols(); ++L) {
    os << L << ',' << f.x(0, L) << ',' << f.x(1, L) << ',' << f.u(L, 0) << ',' << f.u(L, 1) << ',' << f.u_rk(L, 0)
       << ',' << f.u_rk(L, 1) << ',' << f.u_nn(L, 0) << ',' << f.u_nn(L, 1) << ',' << f.eps(L, 0) << ','
       << f.eps(L, 1) << ',' << f.eps(L, 2) << ',' << f.eta(L) << ',' << f.psi_pos(L) << ',' << f.y(L, 0) << ','
       << f.y(L, 1) << ',' << f.grad_y_norm(L) << '\n';
  }
}

void write_vtk(const SmoothingCellMesh& mesh, const CellFields& f, std::ostream& os) {
  os.precision(std::numeric_limits<double>::max_digits10);
  std::size_t npts = 0;
  for (const auto& c : mesh.cells) npts += c.polygon.size();
  os << "# vtk DataFile Version 3.0\nnnrk smoothing cells\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << npts << " double\n";
  for (const auto& c : mesh.cells)
    for (const auto& v : c.polygon) os << v.x() << ' ' << v.y() << " 0\n";
  os << "CELLS " << mesh.cells.size() << ' ' << npts + mesh.cells.size() << '\n';
  std::size_t k = 0;
  for (const auto& c : mesh.cells) {
    os << c.polygon.size();
    for (std::size_t i = 0; i < c.polygon.size(); ++i) os << ' ' << k++;
    os << '\n';
  }
  os << "CELL_TYPES " << mesh.cells.size() << '\n';
  for (std::size_t i = 0; i < mesh.cells.size(); ++i) os << "7\n";
  os << "CELL_DATA " << mesh.cells.size() << '\n';
  auto scalar = [&](const char* name, auto&& value) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index L = 0; L < static_cast<Eigen::Index>(mesh.cells.size()); ++L) os << value(L) << '\n';
  };
  scalar("u1", [&](Eigen::Index L) { return f.u(L, 0); });
  scalar("u2", [&](Eigen::Index L) { return f.u(L, 1); });
  scalar("u_nn1", [&](Eigen::Index L) { return f.u_nn(L, 0); });
  scalar("u_nn2", [&](Eigen::Index L) { return f.u_nn(L, 1); });
  scalar("eps11", [&](Eigen::Index L) { return f.eps(L, 0); });
  scalar("eps22", [&](Eigen::Index L) { return f.eps(L, 1); });
  scalar("eps12", [&](Eigen::Index L) { return f.eps(L, 2); });
  scalar("eta", [&](Eigen::Index L) { return f.eta(L); });
  scalar("psi_pos", [&](Eigen::Index L) { return f.psi_pos(L); });
  scalar("y1", [&](Eigen::Index L) { return f.y(L, 0); });
  scalar("y2", [&](Eigen::Index L) { return f.y(L, 1); });
  scalar("grad_y_norm", [&](Eigen::Index L) { return f.grad_y_norm(L); });
}

void write_transect(const LossModel& model, const Eigen::VectorXd& p, const Transect& t, std::ostream& os) {
  const Domain2D& d = model.problem().setup.domain;
  const double tol = 1e-12 * d.size();
  std::vector<Vec2> pts;
  std::vector<double> s;
  for (int i = 0; i < t.points; ++i) {
    const double a = static_cast<double>(i) / (t.points - 1);
    const Vec2 x = (1.0 - a) * t.from + a * t.to;
    if (!point_in_polygon(x, d.outer, tol) || d.inside_hole(x)) continue;
    pts.push_back(x);
    s.push_back(a * (t.to - t.from).norm());
  }
  const PointFields f = model.sample(p, pts);
  const std::vector<Mat2> G = model.sample_gradient(p, pts);
  os.precision(std::numeric_limits<double>::max_digits10);
  os << "s,x,y,u1,u2,u_rk1,u_rk2,u_nn1,u_nn2,eps11,eps22,eps12\n";
  for (std::size_t i = 0; i < pts.size(); ++i)
    os << s[i] << ',' << pts[i].x() << ',' << pts[i].y() << ',' << f.u(i, 0) << ',' << f.u(i, 1) << ','
       << f.u_rk(i, 0) << ',' << f.u_rk(i, 1) << ',' << f.u_nn(i, 0) << ',' << f.u_nn(i, 1) << ',' << G[i](0, 0)
       << ',' << G[i](1, 1) << ',' << 0.5 * (G[i](0, 1) + G[i](1, 0)) << '\n';
}

void write_step_csv(std::span<const StepRecord> records, std::ostream& os) {
  os.precision(std::numeric_limits<double>::max_digits10);
  os << "step,total,strain,external,reg,bc,load1,load2,reaction1,reaction2,enriched,network,newton_iterations,"
        "adam_epochs,lbfgs_iterations,lbfgs_status,stage_b_entry,stage_b_exit,max_eta,wall_seconds\n";
  for (const auto& r : records)
    os << r.step << ',' << r.loss.total << ',' << r.loss.strain << ',' << r.loss.external << ',' << r.loss.reg << ','
       << r.loss.bc << ',' << r.load(0) << ',' << r.load(1) << ',' << r.reaction(0) << ',' << r.reaction(1) << ','
       << r.enriched << ',' << (r.network ? 1 : 0) << ',' << r.newton_iterations << ',' << r.adam_epochs << ','
       << r.lbfgs_iterations << ',' << r.lbfgs_status << ',' << r.stage_b_entry << ',' << r.stage_b_exit << ','
       << (r.eta.size() ? r.eta.maxCoeff() : 0.0) << ',' << r.wall_seconds << '\n';
}

void write_load_curve(std::span<const StepRecord> records, std::ostream& os) {
  os.precision(std::numeric_limits<double>::max_digits10);
  os << "step,u1,u2,reaction1,reaction2\n";
  for (const auto& r : records)
    os << r.step << ',' << r.load(0) << ',' << r.load(1) << ',' << r.reaction(0) << ',' << r.reaction(1) << '\n';
}

}  // namespace nnrk
