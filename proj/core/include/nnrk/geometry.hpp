#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace nnrk {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Closed polygon, vertices in counter-clockwise order, last vertex not repeated.
using Polygon = std::vector<Vec2>;

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(std::span<const Vec2> poly);
inline double area(std::span<const Vec2> poly) { return std::abs(signed_area(poly)); }
Vec2 centroid(std::span<const Vec2> poly);

bool is_ccw(std::span<const Vec2> poly);
bool is_convex(std::span<const Vec2> poly);
/// No two non-adjacent edges intersect.
bool is_simple(std::span<const Vec2> poly);

/// Keeps the part of a convex polygon with normal.dot(x) <= offset.
Polygon clip_halfplane(const Polygon& poly, const Vec2& normal, double offset);

/// Intersection of a convex polygon with a convex clip polygon (Sutherland-Hodgman).
Polygon clip_convex(const Polygon& subject, const Polygon& clip);

/// Convex pieces of `subject \ hole`, both convex. Pieces with area below
/// `min_area` are dropped.
std::vector<Polygon> subtract_convex(const Polygon& subject, const Polygon& hole,
                                     double min_area);

/// Removes repeated and collinear vertices (tolerance relative to `scale`).
Polygon simplify(const Polygon& poly, double scale);

/// Closed point-in-polygon test with tolerance `tol` on the boundary.
bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly, double tol = 0.0);
/// Strict interior test for a convex polygon: distance to every edge > tol.
bool point_strictly_inside_convex(const Vec2& p, std::span<const Vec2> poly, double tol);

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

/// True if the open segment (a, b) passes through the interior of a convex polygon.
bool segment_crosses_convex_interior(const Vec2& a, const Vec2& b,
                                     std::span<const Vec2> convex, double tol);

/// Area of the overlap of two convex polygons.
double overlap_area(const Polygon& a, const Polygon& b);

/// Axis-aligned bounding box, returned as (min, max).
std::pair<Vec2, Vec2> bounding_box(std::span<const Vec2> pts);

}  // namespace nnrk
