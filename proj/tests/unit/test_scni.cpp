#include "doctest.h"
#include "fixtures.hpp"
#include "nnrk/scni.hpp"

using namespace nnrk;

namespace {

Eigen::VectorXd sample(const std::vector<Vec2>& pts, double a, double bx, double by) {
  Eigen::VectorXd v(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) v(i) = a + bx * pts[i].x() + by * pts[i].y();
  return v;
}

double worst_linear_error(const SmoothingCellMesh& mesh) {
  const SmoothingOperator op = build_operators(mesh);
  const Eigen::MatrixX2d g = smooth(op, sample(op.points, 0.7, 1.5, -2.25));
  return std::max((g.col(0).array() - 1.5).abs().maxCoeff(), (g.col(1).array() + 2.25).abs().maxCoeff());
}

}  // namespace

TEST_CASE("smoothed gradient of a linear field is exact") {
  const Domain2D sq = Domain2D::rectangle(Vec2(0, 0), Vec2(1, 1));
  CHECK(worst_linear_error(build_smoothing_cells(build_uniform_grid(5, 5, sq), sq)) < 1e-12);

  const Domain2D d = Domain2D::rectangle(Vec2(-1, -0.25), Vec2(1, 0.25));
  const NodeSet n = fixture::jittered_cloud(21, 6, d, 0.2, 5);
  const std::vector<RefineRegion> refine{{{{-0.3, -0.25}, {0.3, -0.25}, {0.3, 0.25}, {-0.3, 0.25}}, 2}};
  CHECK(worst_linear_error(build_smoothing_cells(n, d, refine)) < 1e-11);

  Domain2D slit = Domain2D::rectangle(Vec2(-0.5, -0.5), Vec2(0.5, 0.5));
  slit.holes.push_back({Vec2(-0.6, 0.0), Vec2(0.0, 0.0), 0.01});
  CHECK(worst_linear_error(build_smoothing_cells(build_uniform_grid(11, 11, slit), slit)) < 1e-11);
}

TEST_CASE("operator rows sum to zero") {
  const Domain2D d = Domain2D::rectangle(Vec2(0, 0), Vec2(2, 1));
  const SmoothingOperator op = build_operators(build_smoothing_cells(build_uniform_grid(9, 5, d), d));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(op.num_points());
  for (int a = 0; a < 2; ++a) CHECK((op.P[a] * ones).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("integrate: constant gives the area, x^2 converges at second order") {
  auto x2_gap = [](int nx, int ny) {
    const Domain2D d = Domain2D::rectangle(Vec2(-1, -0.25), Vec2(1, 0.25));
    const auto mesh = build_smoothing_cells(build_uniform_grid(nx, ny, d), d);
    CHECK(std::abs(integrate(mesh, Eigen::VectorXd::Ones(mesh.num_cells())) - 1.0) < 1e-12);
    Eigen::VectorXd f(mesh.num_cells());
    for (std::size_t L = 0; L < mesh.num_cells(); ++L) f(L) = std::pow(mesh.cells[L].centroid.x(), 2);
    return std::abs(integrate(mesh, f) - 1.0 / 3.0);
  };
  const double coarse = x2_gap(21, 6), fine = x2_gap(41, 11);
  const double h = 0.1;
  CHECK(coarse > 0.0);
  CHECK(coarse < h * h);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.15));
}
