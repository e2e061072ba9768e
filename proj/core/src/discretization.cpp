#include "nnrk/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "nnrk/errors.hpp"

namespace nnrk {

Polygon Hole::polygon() const {
  const Vec2 n = normal() * (0.5 * width);
  return {a - n, b - n, b + n, a + n};
}

void Domain2D::validate() const {
  if (outer.size() < 3) throw GeometryError("domain: outer boundary needs at least 3 vertices");
  if (!is_ccw(outer)) throw GeometryError("domain: outer boundary must be counter-clockwise");
  if (!is_simple(outer)) throw GeometryError("domain: outer boundary self-intersects");
  if (!is_convex(outer))
    throw GeometryError("domain: only convex outer boundaries are supported (use holes for notches)");
  for (std::size_t k = 0; k < holes.size(); ++k) {
    if (!(holes[k].width > 0.0))
      throw GeometryError("domain: hole " + std::to_string(k) + " needs a positive width");
    if ((holes[k].b - holes[k].a).norm() <= 0.0)
      throw GeometryError("domain: hole " + std::to_string(k) + " has zero length");
  }
  for (const auto& r : regions) {
    if (r.name.empty()) throw GeometryError("domain: boundary region without a name");
    if (!(r.lo.array() <= r.hi.array()).all())
      throw GeometryError("domain: boundary region '" + r.name + "' has an inverted box");
  }
}

double Domain2D::area() const {
  const double min_area = 1e-14 * size() * size();
  std::vector<Polygon> pieces{outer};
  for (const auto& h : holes) {
    std::vector<Polygon> next;
    for (const auto& p : pieces) {
      if (overlap_area(p, h.polygon()) <= 0.0) {
        next.push_back(p);
        continue;
      }
      auto cut = subtract_convex(p, h.polygon(), min_area);
      next.insert(next.end(), cut.begin(), cut.end());
    }
    pieces = std::move(next);
  }
  double a = 0.0;
  for (const auto& p : pieces) a += nnrk::area(p);
  return a;
}

bool Domain2D::is_rectangle() const {
  if (outer.size() != 4) return false;
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec2 e = outer[(i + 1) % 4] - outer[i];
    if (e.x() != 0.0 && e.y() != 0.0) return false;
  }
  return true;
}

double Domain2D::size() const {
  const auto [lo, hi] = bounding_box(outer);
  return (hi - lo).norm();
}

bool Domain2D::inside_hole(const Vec2& p, double tol) const {
  for (const auto& h : holes) {
    const Polygon poly = h.polygon();
    if (point_strictly_inside_convex(p, poly, tol)) return true;
  }
  return false;
}

const BoundaryRegion* Domain2D::find_region(const std::string& name) const {
  for (const auto& r : regions)
    if (r.name == name) return &r;
  return nullptr;
}

Domain2D Domain2D::rectangle(const Vec2& lo, const Vec2& hi) {
  Domain2D d;
  d.outer = {lo, Vec2(hi.x(), lo.y()), hi, Vec2(lo.x(), hi.y())};
  return d;
}

double NodeSet::quasi_uniformity_ratio() const {
  if (x.size() < 2) return 1.0;
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.size(); ++j)
      if (i != j) nearest = std::min(nearest, (x[i] - x[j]).norm());
    dmin = std::min(dmin, nearest);
    dmax = std::max(dmax, nearest);
  }
  return dmin > 0.0 ? dmax / dmin : std::numeric_limits<double>::infinity();
}

NodeSet build_uniform_grid(int nx, int ny, const Domain2D& domain, double normalized_support) {
  if (nx < 2 || ny < 2) throw GeometryError("build_uniform_grid: nx and ny must be >= 2");
  if (!domain.is_rectangle())
    throw GeometryError("build_uniform_grid: unsupported geometry (domain is not an axis-aligned rectangle)");
  if (!(normalized_support > 0.0))
    throw GeometryError("build_uniform_grid: normalized support must be positive");
  const auto [lo, hi] = bounding_box(domain.outer);
  NodeSet nodes;
  nodes.spacing = Vec2((hi.x() - lo.x()) / (nx - 1), (hi.y() - lo.y()) / (ny - 1));
  const Vec2 a = normalized_support * nodes.spacing;
  const double tol = 1e-12 * domain.size();

  auto keep = [&](const Vec2& p) {
    return point_in_polygon(p, domain.outer, tol) && !domain.inside_hole(p, tol);
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Vec2 p(i == nx - 1 ? hi.x() : lo.x() + i * nodes.spacing.x(),
                   j == ny - 1 ? hi.y() : lo.y() + j * nodes.spacing.y());
      if (!domain.inside_hole(p, tol)) {
        nodes.x.push_back(p);
        continue;
      }
      // A lattice node inside a slit is replaced by its projections onto both faces.
      for (const auto& h : domain.holes) {
        if (!point_strictly_inside_convex(p, h.polygon(), tol)) continue;
        const Vec2 t = h.axis();
        const Vec2 n = h.normal();
        const double s = std::clamp((p - h.a).dot(t), 0.0, (h.b - h.a).norm());
        for (double side : {-1.0, 1.0}) {
          const Vec2 q = h.a + s * t + side * 0.5 * h.width * n;
          if (keep(q)) nodes.x.push_back(q);
        }
        break;
      }
    }
  }
  nodes.support.assign(nodes.x.size(), a);
  return nodes;
}

double SmoothingCellMesh::total_area() const {
  double a = 0.0;
  for (const auto& c : cells) a += c.volume;
  return a;
}

std::vector<int> SmoothingCellMesh::boundary_in_region(const BoundaryRegion& region) const {
  std::vector<int> out;
  for (std::size_t k = 0; k < boundary.size(); ++k)
    if (region.contains(boundary[k].midpoint)) out.push_back(static_cast<int>(k));
  return out;
}

namespace {

struct Piece {
  Polygon poly;
  int node;
};

Polygon voronoi_cell(std::size_t i, const NodeSet& nodes, const Polygon& box) {
  const Vec2 xi = nodes.x[i];
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j)
    if (j != i) order.emplace_back((nodes.x[j] - xi).squaredNorm(), j);
  std::sort(order.begin(), order.end());
  Polygon cell = box;
  for (const auto& [d2, j] : order) {
    double r2 = 0.0;
    for (const auto& v : cell) r2 = std::max(r2, (v - xi).squaredNorm());
    // neighbours farther than twice the cell radius cannot cut it
    if (d2 > 4.0 * r2) break;
    const Vec2 n = nodes.x[j] - xi;
    const Vec2 m = 0.5 * (nodes.x[j] + xi);
    if (n.squaredNorm() == 0.0)
      throw MeshError("smoothing cells: duplicate node " + std::to_string(i), static_cast<int>(i));
    cell = clip_halfplane(cell, n, n.dot(m));
    if (cell.size() < 3) break;
  }
  return cell;
}

std::vector<Polygon> refine_fan(const Polygon& poly, int level) {
  const Vec2 c = centroid(poly);
  std::vector<Polygon> tris;
  for (std::size_t k = 0; k < poly.size(); ++k) tris.push_back({c, poly[k], poly[(k + 1) % poly.size()]});
  for (int l = 1; l < level; ++l) {
    std::vector<Polygon> next;
    next.reserve(tris.size() * 4);
    for (const auto& t : tris) {
      const Vec2 m01 = 0.5 * (t[0] + t[1]);
      const Vec2 m12 = 0.5 * (t[1] + t[2]);
      const Vec2 m20 = 0.5 * (t[2] + t[0]);
      next.push_back({t[0], m01, m20});
      next.push_back({m01, t[1], m12});
      next.push_back({m20, m12, t[2]});
      next.push_back({m01, m12, m20});
    }
    tris = std::move(next);
  }
  return tris;
}

/// Spatial hash used for vertex welding and T-junction lookup.
class VertexGrid {
 public:
  VertexGrid(const Vec2& lo, double cell) : lo_(lo), cell_(cell) {}

  std::pair<long, long> key(const Vec2& p) const {
    return {static_cast<long>(std::floor((p.x() - lo_.x()) / cell_)),
            static_cast<long>(std::floor((p.y() - lo_.y()) / cell_))};
  }

  void insert(int id, const Vec2& p) { buckets_[key(p)].push_back(id); }

  template <class Fn>
  void visit(const Vec2& lo, const Vec2& hi, Fn&& fn) const {
    const auto [i0, j0] = key(lo);
    const auto [i1, j1] = key(hi);
    for (long i = i0; i <= i1; ++i)
      for (long j = j0; j <= j1; ++j) {
        auto it = buckets_.find({i, j});
        if (it == buckets_.end()) continue;
        for (int id : it->second) fn(id);
      }
  }

 private:
  Vec2 lo_;
  double cell_;
  std::map<std::pair<long, long>, std::vector<int>> buckets_;
};

}  // namespace

SmoothingCellMesh build_smoothing_cells(const NodeSet& nodes, const Domain2D& domain,
                                        std::span<const RefineRegion> refine,
                                        std::span<const Polygon> conforming) {
  domain.validate();
  if (nodes.size() == 0) throw GeometryError("smoothing cells: empty node set");
  const double L = domain.size();
  const double min_area = 1e-12 * L * L;
  const double weld_tol = 1e-9 * L;

  auto [lo, hi] = bounding_box(domain.outer);
  const Vec2 pad = Vec2::Constant(0.1 * L);
  const Polygon box = {lo - pad, Vec2(hi.x() + pad.x(), lo.y() - pad.y()), hi + pad,
                       Vec2(lo.x() - pad.x(), hi.y() + pad.y())};

  std::vector<Piece> pieces;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    Polygon cell = voronoi_cell(i, nodes, box);
    cell = clip_convex(cell, domain.outer);
    std::vector<Polygon> parts;
    if (cell.size() >= 3 && area(cell) > min_area) parts.push_back(std::move(cell));
    for (const auto& h : domain.holes) {
      const Polygon hp = h.polygon();
      std::vector<Polygon> next;
      for (auto& p : parts) {
        if (overlap_area(p, hp) <= min_area) {
          next.push_back(std::move(p));
          continue;
        }
        auto cut = subtract_convex(p, hp, min_area);
        next.insert(next.end(), cut.begin(), cut.end());
      }
      parts = std::move(next);
    }
    for (const auto& zone : conforming) {
      std::vector<Polygon> next;
      for (auto& p : parts) {
        if (overlap_area(p, zone) <= min_area) {
          next.push_back(std::move(p));
          continue;
        }
        Polygon in = clip_convex(p, zone);
        if (in.size() >= 3 && area(in) > min_area) next.push_back(std::move(in));
        auto out = subtract_convex(p, zone, min_area);
        next.insert(next.end(), out.begin(), out.end());
      }
      parts = std::move(next);
    }
    if (parts.empty()) {
      std::ostringstream os;
      os << "smoothing cells: node " << i << " at (" << nodes.x[i].x() << ", " << nodes.x[i].y()
         << ") has a degenerate (zero-area) cell";
      throw MeshError(os.str(), static_cast<int>(i));
    }
    for (auto& p : parts) {
      int level = 0;
      for (const auto& r : refine)
        if (r.level > level && overlap_area(p, r.polygon) > min_area) level = r.level;
      if (level <= 0) {
        pieces.push_back({std::move(p), static_cast<int>(i)});
      } else {
        for (auto& t : refine_fan(p, level)) pieces.push_back({std::move(t), static_cast<int>(i)});
      }
    }
  }

  for (auto& pc : pieces) pc.poly = simplify(pc.poly, L);

  // Weld vertices so that shared edges are bitwise identical on both sides.
  SmoothingCellMesh mesh;
  VertexGrid weld(lo - pad, 16.0 * weld_tol);
  std::vector<std::vector<int>> ids(pieces.size());
  for (std::size_t c = 0; c < pieces.size(); ++c) {
    for (const auto& v : pieces[c].poly) {
      int found = -1;
      weld.visit(v - Vec2::Constant(weld_tol), v + Vec2::Constant(weld_tol), [&](int id) {
        if (found < 0 && (mesh.vertices[id] - v).norm() <= weld_tol) found = id;
      });
      if (found < 0) {
        found = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(v);
        weld.insert(found, v);
      }
      if (ids[c].empty() || ids[c].back() != found) ids[c].push_back(found);
    }
    while (ids[c].size() > 1 && ids[c].front() == ids[c].back()) ids[c].pop_back();
  }

  // Resolve T-junctions: split every edge at welded vertices lying on it.
  double hmin = std::min(nodes.spacing.x() > 0 ? nodes.spacing.x() : L,
                         nodes.spacing.y() > 0 ? nodes.spacing.y() : L);
  VertexGrid lookup(lo - pad, std::max(hmin, 1e-6 * L));
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) lookup.insert(static_cast<int>(v), mesh.vertices[v]);
  for (std::size_t c = 0; c < pieces.size(); ++c) {
    std::vector<int> out;
    const auto& poly_ids = ids[c];
    for (std::size_t k = 0; k < poly_ids.size(); ++k) {
      const int ia = poly_ids[k];
      const int ib = poly_ids[(k + 1) % poly_ids.size()];
      const Vec2 a = mesh.vertices[ia];
      const Vec2 b = mesh.vertices[ib];
      out.push_back(ia);
      const Vec2 e = b - a;
      const double l2 = e.squaredNorm();
      std::vector<std::pair<double, int>> on_edge;
      lookup.visit(a.cwiseMin(b) - Vec2::Constant(weld_tol), a.cwiseMax(b) + Vec2::Constant(weld_tol),
                   [&](int id) {
                     if (id == ia || id == ib) return;
                     const Vec2 p = mesh.vertices[id];
                     const double t = (p - a).dot(e) / l2;
                     if (t <= 0.0 || t >= 1.0) return;
                     if ((a + t * e - p).norm() <= weld_tol) on_edge.emplace_back(t, id);
                   });
      std::sort(on_edge.begin(), on_edge.end());
      for (const auto& [t, id] : on_edge) out.push_back(id);
    }
    ids[c] = std::move(out);
  }

  std::unordered_map<std::uint64_t, int> point_of;
  std::unordered_map<std::uint64_t, int> use_count;
  auto edge_key = [](int a, int b) {
    const auto lo_id = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi_id = static_cast<std::uint64_t>(std::max(a, b));
    return (hi_id << 32) | lo_id;
  };

  mesh.cells.reserve(pieces.size());
  for (std::size_t c = 0; c < pieces.size(); ++c) {
    Cell cell;
    cell.node = pieces[c].node;
    for (int id : ids[c]) cell.polygon.push_back(mesh.vertices[id]);
    cell.volume = area(cell.polygon);
    if (!(cell.volume > min_area)) continue;
    cell.centroid = centroid(cell.polygon);
    const auto& poly_ids = ids[c];
    for (std::size_t k = 0; k < poly_ids.size(); ++k) {
      Segment s;
      s.v0 = poly_ids[k];
      s.v1 = poly_ids[(k + 1) % poly_ids.size()];
      const Vec2 a = mesh.vertices[s.v0];
      const Vec2 b = mesh.vertices[s.v1];
      const Vec2 e = b - a;
      s.length = e.norm();
      if (s.length == 0.0) continue;
      s.normal = Vec2(e.y(), -e.x()) / s.length;
      s.midpoint = 0.5 * (a + b);
      const auto key = edge_key(s.v0, s.v1);
      auto [it, inserted] = point_of.try_emplace(key, static_cast<int>(mesh.points.size()));
      if (inserted) mesh.points.push_back(s.midpoint);
      s.point = it->second;
      ++use_count[key];
      cell.segments.push_back(s);
    }
    mesh.cells.push_back(std::move(cell));
  }

  const double on_tol = 1e-8 * L;
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    const auto& cell = mesh.cells[c];
    for (std::size_t k = 0; k < cell.segments.size(); ++k) {
      const auto& s = cell.segments[k];
      if (use_count[edge_key(s.v0, s.v1)] != 1) continue;
      BoundarySegment b;
      b.cell = static_cast<int>(c);
      b.segment = static_cast<int>(k);
      b.point = s.point;
      b.midpoint = s.midpoint;
      b.normal = s.normal;
      b.length = s.length;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t e = 0; e < domain.outer.size(); ++e)
        best = std::min(best, point_segment_distance(s.midpoint, domain.outer[e],
                                                     domain.outer[(e + 1) % domain.outer.size()]));
      if (best > on_tol) {
        for (std::size_t h = 0; h < domain.holes.size(); ++h) {
          const Polygon hp = domain.holes[h].polygon();
          for (std::size_t e = 0; e < hp.size(); ++e)
            if (point_segment_distance(s.midpoint, hp[e], hp[(e + 1) % hp.size()]) <= on_tol)
              b.hole = static_cast<int>(h);
        }
      }
      mesh.boundary.push_back(b);
    }
  }
  return mesh;
}

void write_mesh_csv(const SmoothingCellMesh& mesh, std::ostream& os) {
  os << "kind,cell,x,y,nx,ny,measure\n";
  os << std::setprecision(17);
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    const auto& cell = mesh.cells[c];
    os << "cell," << c << ',' << cell.centroid.x() << ',' << cell.centroid.y() << ",,,"
       << cell.volume << '\n';
  }
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    for (const auto& s : mesh.cells[c].segments) {
      os << "segment," << c << ',' << s.midpoint.x() << ',' << s.midpoint.y() << ','
         << s.normal.x() << ',' << s.normal.y() << ',' << s.length << '\n';
    }
  }
}

}  // namespace nnrk
