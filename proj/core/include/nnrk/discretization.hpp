#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nnrk/geometry.hpp"

namespace nnrk {

/// Straight notch or slit of finite width, modelled as a rectangular hole
/// centred on the segment a-b.
struct Hole {
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();
  double width = 0.0;

  Polygon polygon() const;
  Vec2 axis() const { return (b - a).normalized(); }
  Vec2 normal() const { return Vec2(-axis().y(), axis().x()); }
};

/// Named subset of the boundary: every boundary segment whose midpoint lies
/// in the closed box [lo, hi].
struct BoundaryRegion {
  std::string name;
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Zero();

  bool contains(const Vec2& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
};

struct Domain2D {
  Polygon outer;
  std::vector<Hole> holes;
  std::vector<BoundaryRegion> regions;

  /// Throws GeometryError when the outer boundary is not a simple, convex,
  /// counter-clockwise polygon or a hole has non-positive width.
  void validate() const;
  /// Outer area minus the union of the holes.
  double area() const;
  bool is_rectangle() const;
  /// Length of the bounding-box diagonal; the reference length for tolerances.
  double size() const;
  bool inside_hole(const Vec2& p, double tol = 0.0) const;
  const BoundaryRegion* find_region(const std::string& name) const;

  static Domain2D rectangle(const Vec2& lo, const Vec2& hi);
};

/// Background RK nodes. Supports are per axis because lattices may have
/// different spacings in x and y.
struct NodeSet {
  std::vector<Vec2> x;
  std::vector<Vec2> support;
  Vec2 spacing = Vec2::Zero();

  std::size_t size() const { return x.size(); }
  /// max/min nearest-neighbour distance
  double quasi_uniformity_ratio() const;
};

NodeSet build_uniform_grid(int nx, int ny, const Domain2D& domain, double normalized_support = 2.0);

struct Segment {
  int v0 = -1, v1 = -1;  // welded vertex ids
  Vec2 midpoint = Vec2::Zero();
  Vec2 normal = Vec2::Zero();  // outward unit normal
  double length = 0.0;
  int point = -1;  // index into SmoothingCellMesh::points
};

struct Cell {
  Polygon polygon;
  double volume = 0.0;
  Vec2 centroid = Vec2::Zero();
  int node = -1;  // generating node
  std::vector<Segment> segments;
};

struct BoundarySegment {
  int cell = -1;
  int segment = -1;
  int point = -1;
  Vec2 midpoint = Vec2::Zero();
  Vec2 normal = Vec2::Zero();
  double length = 0.0;
  int hole = -1;  // -1 for the outer boundary
};

struct RefineRegion {
  Polygon polygon;  // convex
  int level = 1;
};

struct SmoothingCellMesh {
  std::vector<Cell> cells;
  std::vector<Vec2> vertices;
  /// Surface evaluation points: one per geometric segment, shared segments merged.
  std::vector<Vec2> points;
  std::vector<BoundarySegment> boundary;

  std::size_t num_cells() const { return cells.size(); }
  std::size_t num_points() const { return points.size(); }
  double total_area() const;
  /// Boundary segments whose midpoint lies in the region.
  std::vector<int> boundary_in_region(const BoundaryRegion& region) const;
};

/// Voronoi cells of the nodes clipped to the domain, split along every polygon
/// in `conforming` (convex), and refined where they overlap a refine region.
SmoothingCellMesh build_smoothing_cells(const NodeSet& nodes, const Domain2D& domain,
                                        std::span<const RefineRegion> refine = {},
                                        std::span<const Polygon> conforming = {});

/// CSV dump: one row per cell (kind=cell) and one per segment (kind=segment).
void write_mesh_csv(const SmoothingCellMesh& mesh, std::ostream& os);

}  // namespace nnrk
