#include "nnrk/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nnrk {

double signed_area(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * a;
}

Vec2 centroid(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  // Shift to the first vertex to limit cancellation for small cells far from the origin.
  const Vec2 o = poly[0];
  double a = 0.0;
  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p = poly[i] - o;
    const Vec2 q = poly[(i + 1) % n] - o;
    const double w = cross(p, q);
    a += w;
    c += w * (p + q);
  }
  if (std::abs(a) < std::numeric_limits<double>::min()) {
    Vec2 mean = Vec2::Zero();
    for (const auto& p : poly) mean += p;
    return mean / double(n);
  }
  return o + c / (3.0 * a);
}

bool is_ccw(std::span<const Vec2> poly) { return signed_area(poly) > 0.0; }

bool is_convex(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  const auto [lo, hi] = bounding_box(poly);
  const double tol = 1e-12 * (hi - lo).squaredNorm();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const Vec2& c = poly[(i + 2) % n];
    if (cross(b - a, c - b) < -tol) return false;
  }
  return true;
}

namespace {

int orientation(const Vec2& a, const Vec2& b, const Vec2& c, double tol) {
  const double v = cross(b - a, c - a);
  if (v > tol) return 1;
  if (v < -tol) return -1;
  return 0;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p, double tol) {
  return p.x() <= std::max(a.x(), b.x()) + tol && p.x() >= std::min(a.x(), b.x()) - tol &&
         p.y() <= std::max(a.y(), b.y()) + tol && p.y() >= std::min(a.y(), b.y()) - tol;
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2,
                        double tol) {
  const int o1 = orientation(p1, p2, q1, tol), o2 = orientation(p1, p2, q2, tol);
  const int o3 = orientation(q1, q2, p1, tol), o4 = orientation(q1, q2, p2, tol);
  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
  if (o1 == 0 && on_segment(p1, p2, q1, 0.0)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2, 0.0)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1, 0.0)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2, 0.0)) return true;
  return false;
}

}  // namespace

bool is_simple(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  const auto [lo, hi] = bounding_box(poly);
  const double tol = 1e-14 * (hi - lo).squaredNorm();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n], tol))
        return false;
    }
  }
  return true;
}

Polygon clip_halfplane(const Polygon& poly, const Vec2& normal, double offset) {
  Polygon out;
  const std::size_t n = poly.size();
  if (n == 0) return out;
  out.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const double da = normal.dot(a) - offset;
    const double db = normal.dot(b) - offset;
    if (da <= 0.0) out.push_back(a);
    if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
      const double t = da / (da - db);
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
  Polygon out = subject;
  const std::size_t m = clip.size();
  for (std::size_t k = 0; k < m && !out.empty(); ++k) {
    const Vec2& a = clip[k];
    const Vec2& b = clip[(k + 1) % m];
    const Vec2 e = b - a;
    const Vec2 n(e.y(), -e.x());  // outward for a CCW clip polygon
    out = clip_halfplane(out, n, n.dot(a));
  }
  return out;
}

std::vector<Polygon> subtract_convex(const Polygon& subject, const Polygon& hole,
                                     double min_area) {
  std::vector<Polygon> pieces;
  Polygon rest = subject;
  const std::size_t m = hole.size();
  for (std::size_t k = 0; k < m && rest.size() >= 3; ++k) {
    const Vec2& a = hole[k];
    const Vec2& b = hole[(k + 1) % m];
    const Vec2 e = b - a;
    const Vec2 n(e.y(), -e.x());
    const double c = n.dot(a);
    Polygon outside = clip_halfplane(rest, -n, -c);
    if (outside.size() >= 3 && area(outside) > min_area) pieces.push_back(std::move(outside));
    rest = clip_halfplane(rest, n, c);
  }
  // whatever is left of `rest` lies inside the hole
  return pieces;
}

Polygon simplify(const Polygon& poly, double scale) {
  const double tol = 1e-12 * scale;
  Polygon out;
  for (const auto& p : poly) {
    if (!out.empty() && (p - out.back()).norm() <= tol) continue;
    out.push_back(p);
  }
  while (out.size() > 1 && (out.front() - out.back()).norm() <= tol) out.pop_back();
  bool changed = true;
  while (changed && out.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Vec2& a = out[(i + out.size() - 1) % out.size()];
      const Vec2& b = out[i];
      const Vec2& c = out[(i + 1) % out.size()];
      const double len = (c - a).norm();
      if (len <= tol || std::abs(cross(b - a, c - a)) <= tol * len) {
        out.erase(out.begin() + i);
        changed = true;
        break;
      }
    }
  }
  return out;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 e = b - a;
  const double l2 = e.squaredNorm();
  if (l2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(e) / l2, 0.0, 1.0);
  return (p - (a + t * e)).norm();
}

bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly, double tol) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i)
    if (point_segment_distance(p, poly[i], poly[(i + 1) % n]) <= tol) return true;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

bool point_strictly_inside_convex(const Vec2& p, std::span<const Vec2> poly, double tol) {
  const std::size_t n = poly.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2& a = poly[k];
    const Vec2& b = poly[(k + 1) % n];
    const Vec2 e = b - a;
    const double len = e.norm();
    // signed distance, positive inside for CCW
    if (cross(e, p - a) / len <= tol) return false;
  }
  return true;
}

bool segment_crosses_convex_interior(const Vec2& a, const Vec2& b,
                                     std::span<const Vec2> convex, double tol) {
  // Parametric clip of the segment against each inward half-plane shrunk by tol.
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = b - a;
  const std::size_t n = convex.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2& p = convex[k];
    const Vec2& q = convex[(k + 1) % n];
    const Vec2 e = q - p;
    const double len = e.norm();
    // inside: cross(e, x - p)/len > tol
    const double fa = cross(e, a - p) / len - tol;
    const double fd = cross(e, d) / len;
    if (fd == 0.0) {
      if (fa <= 0.0) return false;
      continue;
    }
    const double t = -fa / fd;
    if (fd > 0.0)
      t0 = std::max(t0, t);
    else
      t1 = std::min(t1, t);
    if (t0 >= t1) return false;
  }
  return t1 - t0 > 0.0;
}

double overlap_area(const Polygon& a, const Polygon& b) {
  const Polygon c = clip_convex(a, b);
  return c.size() >= 3 ? area(c) : 0.0;
}

std::pair<Vec2, Vec2> bounding_box(std::span<const Vec2> pts) {
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {lo, hi};
}

}  // namespace nnrk
