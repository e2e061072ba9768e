#include "nnrk/rk.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "nnrk/errors.hpp"
#include "parallel.hpp"

namespace nnrk {

int basis_size(int order) {
  switch (order) {
    case 0:
      return 1;
    case 1:
      return 3;
    case 2:
      return 6;
    default:
      throw Error("RK basis order must be 0, 1 or 2 (got " + std::to_string(order) + ")");
  }
}

double kernel_1d(double s) {
  s = std::abs(s);
  if (s <= 0.5) return 2.0 / 3.0 - 4.0 * s * s + 4.0 * s * s * s;
  if (s <= 1.0) {
    const double t = 1.0 - s;
    return 4.0 / 3.0 * t * t * t;
  }
  return 0.0;
}

double kernel_value(const Vec2& x, const Vec2& xI, const Vec2& a) {
  const double wx = kernel_1d((x.x() - xI.x()) / a.x());
  if (wx == 0.0) return 0.0;
  return wx * kernel_1d((x.y() - xI.y()) / a.y());
}

double ShapeEval::sum() const {
  double s = 0.0;
  for (double v : value) s += v;
  return s;
}

namespace {

void fill_basis(int order, double dx, double dy, Eigen::Ref<Eigen::VectorXd> h) {
  h(0) = 1.0;
  if (order >= 1) {
    h(1) = dx;
    h(2) = dy;
  }
  if (order >= 2) {
    h(3) = dx * dx;
    h(4) = dx * dy;
    h(5) = dy * dy;
  }
}

}  // namespace

RKApproximation::RKApproximation(const NodeSet& nodes, RKConfig cfg, const Domain2D* domain)
    : nodes_(nodes), cfg_(cfg) {
  basis_size(cfg_.order);
  if (!(cfg_.normalized_support > 0.0)) throw Error("RK normalized support must be positive");
  if (nodes_.support.size() != nodes_.x.size())
    throw DimensionError("RK: support list does not match node count");
  if (nodes_.x.empty()) throw Error("RK: empty node set");
  if (domain) {
    for (const auto& h : domain->holes) holes_.push_back(h.polygon());
    hole_tol_ = 1e-9 * domain->size();
  }

  double amax = 0.0;
  for (const auto& a : nodes_.support) {
    if (!(a.minCoeff() > 0.0)) throw Error("RK: non-positive support size");
    amax = std::max(amax, a.maxCoeff());
  }
  auto [lo, hi] = bounding_box(nodes_.x);
  origin_ = lo;
  bucket_ = amax;
  nbx_ = std::max(1, static_cast<int>(std::floor((hi.x() - lo.x()) / bucket_)) + 1);
  nby_ = std::max(1, static_cast<int>(std::floor((hi.y() - lo.y()) / bucket_)) + 1);
  buckets_.assign(static_cast<std::size_t>(nbx_) * nby_, {});
  for (std::size_t i = 0; i < nodes_.x.size(); ++i) {
    const int bx = std::clamp(static_cast<int>(std::floor((nodes_.x[i].x() - lo.x()) / bucket_)), 0, nbx_ - 1);
    const int by = std::clamp(static_cast<int>(std::floor((nodes_.x[i].y() - lo.y()) / bucket_)), 0, nby_ - 1);
    buckets_[static_cast<std::size_t>(by) * nbx_ + bx].push_back(static_cast<int>(i));
  }
}

bool RKApproximation::visible(const Vec2& x, int node) const {
  for (const auto& h : holes_)
    if (segment_crosses_convex_interior(x, nodes_.x[node], h, hole_tol_)) return false;
  return true;
}

std::vector<int> RKApproximation::covering_nodes(const Vec2& x) const {
  std::vector<int> out;
  const int cx = static_cast<int>(std::floor((x.x() - origin_.x()) / bucket_));
  const int cy = static_cast<int>(std::floor((x.y() - origin_.y()) / bucket_));
  for (int by = std::max(0, cy - 1); by <= std::min(nby_ - 1, cy + 1); ++by) {
    for (int bx = std::max(0, cx - 1); bx <= std::min(nbx_ - 1, cx + 1); ++bx) {
      for (int i : buckets_[static_cast<std::size_t>(by) * nbx_ + bx]) {
        if (kernel_value(x, nodes_.x[i], nodes_.support[i]) > 0.0 && visible(x, i)) out.push_back(i);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::MatrixXd RKApproximation::moment_matrix(const Vec2& x) const {
  const int m = basis_size(cfg_.order);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd h(m);
  for (int i : covering_nodes(x)) {
    const Vec2 d = x - nodes_.x[i];
    fill_basis(cfg_.order, d.x(), d.y(), h);
    M.noalias() += kernel_value(x, nodes_.x[i], nodes_.support[i]) * h * h.transpose();
  }
  return M;
}

ShapeEval RKApproximation::shape_values(const Vec2& x) const {
  const int m = basis_size(cfg_.order);
  ShapeEval out;
  out.x = x;
  const auto cover = covering_nodes(x);
  auto fail = [&](const std::string& why) {
    std::ostringstream os;
    os << "singular moment matrix at (" << x.x() << ", " << x.y() << "): " << why << " ("
       << cover.size() << " covering nodes)";
    throw SingularMomentError(os.str(), x.x(), x.y());
  };
  if (static_cast<int>(cover.size()) < m) fail("insufficient support coverage");

  // Monomials are scaled by the local support so the condition number is
  // independent of the physical units.
  Vec2 scale = Vec2::Zero();
  for (int i : cover) scale += nodes_.support[i];
  scale /= static_cast<double>(cover.size());

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd H(m, cover.size());
  Eigen::VectorXd phi(cover.size());
  for (std::size_t k = 0; k < cover.size(); ++k) {
    const int i = cover[k];
    const Vec2 d = (x - nodes_.x[i]).cwiseQuotient(scale);
    fill_basis(cfg_.order, d.x(), d.y(), H.col(k));
    phi(k) = kernel_value(x, nodes_.x[i], nodes_.support[i]);
    M.noalias() += phi(k) * H.col(k) * H.col(k).transpose();
  }
  if (m > 1) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > max_condition) fail("condition number above 1e12");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) fail("Cholesky factorization failed");
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(m);
  e0(0) = 1.0;
  const Eigen::VectorXd b = llt.solve(e0);
  out.index = cover;
  out.value.resize(cover.size());
  for (std::size_t k = 0; k < cover.size(); ++k) out.value[k] = b.dot(H.col(k)) * phi(k);
  return out;
}

ShapeTable build_shape_table(const RKApproximation& rk, std::span<const Vec2> points) {
  std::vector<ShapeEval> evals(points.size());
  detail::parallel_for(points.size(), [&](std::size_t p) { evals[p] = rk.shape_values(points[p]); });
  ShapeTable t;
  t.offset.reserve(points.size() + 1);
  for (const auto& e : evals) {
    t.node.insert(t.node.end(), e.index.begin(), e.index.end());
    t.value.insert(t.value.end(), e.value.begin(), e.value.end());
    t.offset.push_back(static_cast<int>(t.node.size()));
  }
  return t;
}

}  // namespace nnrk
