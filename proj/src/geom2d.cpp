#include "hypent/geom2d.hpp"

#include <algorithm>
#include <cmath>

namespace hypent {

namespace {

double cross(const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); }

double signed_area(const std::vector<Point>& v) {
  double s = 0.0;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % n];
    s += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * s;
}

std::vector<Point> dedup_ring(std::vector<Point> v, double eps) {
  std::vector<Point> out;
  for (const auto& p : v) {
    if (out.empty() || (out.back() - p).norm() > eps) out.push_back(p);
  }
  while (out.size() > 1 && (out.front() - out.back()).norm() <= eps) out.pop_back();
  return out;
}

}  // namespace

double point_segment_distance(const Point& p, const Segment& s) {
  const Vec2 d = s.b - s.a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return (p - s.a).norm();
  double t = (p - s.a).dot(d) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (s.a + t * d)).norm();
}

bool collinear(const Segment& s, const Segment& t, double eps_geo) {
  if (s.length() < 1e-300) return false;
  const Vec2 d = s.direction();
  // cross(d, p - a) is the perpendicular distance of p from the supporting line
  const double tol = eps_geo * std::max(1.0, std::max(s.length(), t.length()));
  return std::abs(cross(d, t.a - s.a)) <= tol && std::abs(cross(d, t.b - s.a)) <= tol;
}

std::optional<Point> segment_intersection(const Segment& s, const Segment& t, double eps_geo) {
  const Vec2 r = s.b - s.a;
  const Vec2 q = t.b - t.a;
  const double denom = cross(r, q);
  const double scale = std::max(r.norm(), q.norm());
  if (std::abs(denom) <= eps_geo * scale * scale) return std::nullopt;  // parallel or collinear
  const Vec2 w = t.a - s.a;
  const double u = cross(w, q) / denom;
  const double v = cross(w, r) / denom;
  const double slack = eps_geo / std::max(scale, eps_geo);
  if (u < -slack || u > 1.0 + slack || v < -slack || v > 1.0 + slack) return std::nullopt;
  return s.a + u * r;
}

// ---------------------------------------------------------------------------
// ConvexPolygon

ConvexPolygon::ConvexPolygon(std::vector<Point> vertices, const Tolerances& tol) {
  verts_ = dedup_ring(std::move(vertices), tol.eps_geo);
  if (verts_.size() < 3) {
    verts_.clear();
    return;
  }
  if (signed_area(verts_) < 0.0) std::reverse(verts_.begin(), verts_.end());
  // Convexity check: all turns non-right (tolerance scaled by edge lengths).
  const std::size_t n = verts_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e1 = verts_[(i + 1) % n] - verts_[i];
    const Vec2 e2 = verts_[(i + 2) % n] - verts_[(i + 1) % n];
    if (cross(e1, e2) < -1e-9 * e1.norm() * e2.norm()) {
      throw InvalidInput("ConvexPolygon: vertex ring is not convex");
    }
  }
}

ConvexPolygon ConvexPolygon::rectangle(double x0, double y0, double x1, double y1) {
  return ConvexPolygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

double ConvexPolygon::area() const {
  if (empty()) return 0.0;
  return signed_area(verts_);
}

Point ConvexPolygon::centroid() const {
  if (empty()) return Vec2::Zero();
  double a6 = 0.0;
  Vec2 c = Vec2::Zero();
  const std::size_t n = verts_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = verts_[i];
    const auto& q = verts_[(i + 1) % n];
    const double w = p.x() * q.y() - q.x() * p.y();
    a6 += w;
    c += w * (p + q);
  }
  if (std::abs(a6) < 1e-300) return verts_[0];
  return c / (3.0 * a6);
}

bool ConvexPolygon::contains(const Point& p, double eps_geo) const {
  if (empty()) return false;
  const std::size_t n = verts_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = verts_[(i + 1) % n] - verts_[i];
    if (cross(e, p - verts_[i]) < -eps_geo * std::max(e.norm(), 1.0)) return false;
  }
  return true;
}

bool ConvexPolygon::contains_interior(const Point& p, double eps_geo) const {
  if (empty()) return false;
  const std::size_t n = verts_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = verts_[(i + 1) % n] - verts_[i];
    if (cross(e, p - verts_[i]) <= eps_geo * std::max(e.norm(), 1.0)) return false;
  }
  return true;
}

void ConvexPolygon::bounding_box(Vec2& lo, Vec2& hi) const {
  lo = Vec2(1e300, 1e300);
  hi = Vec2(-1e300, -1e300);
  for (const auto& v : verts_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
}

ConvexPolygon ConvexPolygon::clip_halfplane(const Vec2& n, double c, const Tolerances& tol) const {
  if (empty()) return {};
  std::vector<Point> out;
  const std::size_t m = verts_.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Point& p = verts_[i];
    const Point& q = verts_[(i + 1) % m];
    const double dp = n.dot(p) - c;
    const double dq = n.dot(q) - c;
    if (dp <= 0.0) out.push_back(p);
    if ((dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0)) {
      const double t = dp / (dp - dq);
      out.push_back(p + t * (q - p));
    }
  }
  std::vector<Point> ring = dedup_ring(std::move(out), tol.eps_geo);
  if (ring.size() < 3) return {};
  if (std::abs(signed_area(ring)) < tol.eps_area) return {};
  ConvexPolygon r;
  r.verts_ = std::move(ring);
  if (signed_area(r.verts_) < 0.0) std::reverse(r.verts_.begin(), r.verts_.end());
  return r;
}

ConvexPolygon ConvexPolygon::intersect(const ConvexPolygon& other, const Tolerances& tol) const {
  if (empty() || other.empty()) return {};
  ConvexPolygon cur = *this;
  const auto& ov = other.verts_;
  const std::size_t n = ov.size();
  for (std::size_t i = 0; i < n && !cur.empty(); ++i) {
    const Vec2 e = ov[(i + 1) % n] - ov[i];
    const Vec2 inward_normal(-e.y(), e.x());
    // keep inward side: inward_normal.dot(x - ov[i]) >= 0  <=>  (-inward).dot(x) <= (-inward).dot(ov[i])
    cur = cur.clip_halfplane(-inward_normal, -inward_normal.dot(ov[i]), tol);
  }
  return cur;
}

ConvexPolygon ConvexPolygon::affine_image(const Mat2& M, const Vec2& t) const {
  if (empty()) return {};
  std::vector<Point> v;
  v.reserve(verts_.size());
  for (const auto& p : verts_) v.push_back(M * p + t);
  if (M.determinant() < 0.0) std::reverse(v.begin(), v.end());
  ConvexPolygon r;
  r.verts_ = std::move(v);
  return r;
}

std::optional<Segment> ConvexPolygon::clip_segment(const Segment& s, const Tolerances& tol) const {
  if (empty()) return std::nullopt;
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = s.b - s.a;
  const std::size_t n = verts_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = verts_[(i + 1) % n] - verts_[i];
    const Vec2 nrm(-e.y(), e.x());  // inward normal
    const double denom = nrm.dot(d);
    const double dist = nrm.dot(s.a - verts_[i]);
    if (std::abs(denom) < 1e-300) {
      if (dist < -tol.eps_geo * std::max(e.norm(), 1.0)) return std::nullopt;
      continue;
    }
    const double t = -dist / denom;
    if (denom > 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return std::nullopt;
  }
  Segment r(s.a + t0 * d, s.a + t1 * d, s.origin);
  if (r.length() <= tol.eps_geo) return std::nullopt;
  return r;
}

double diameter_along(const ConvexPolygon& poly, const Vec2& dir) {
  const double n = dir.norm();
  if (n < 1e-300) throw InvalidInput("diameter_along: zero direction");
  if (poly.empty()) return 0.0;
  const Vec2 u = dir / n;
  double lo = 1e300, hi = -1e300;
  for (const auto& v : poly.vertices()) {
    const double t = u.dot(v);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  return hi - lo;
}

// ---------------------------------------------------------------------------
// Cone

Cone::Cone(const Vec2& axis_, double half_width_) : axis(axis_.normalized()), half_width(half_width_) {
  if (!(half_width > 0.0 && half_width < M_PI / 2.0)) {
    throw InvalidInput("Cone: half_width must lie in (0, pi/2)");
  }
}

Cone Cone::from_angle_deg(double axis_deg, double half_width_deg) {
  const double a = axis_deg * M_PI / 180.0;
  return Cone(Vec2(std::cos(a), std::sin(a)), half_width_deg * M_PI / 180.0);
}

double Cone::angular_margin(const Vec2& v) const {
  const double nv = v.norm();
  if (nv < 1e-300) return -M_PI;
  // angle between lines (directions mod pi)
  double c = std::abs(axis.dot(v) / nv);
  c = std::clamp(c, 0.0, 1.0);
  const double ang = std::acos(c);
  return half_width - ang;
}

bool Cone::contains(const Vec2& v, double margin) const { return angular_margin(v) >= margin; }

// ---------------------------------------------------------------------------
// cut / refine

std::vector<ConvexPolygon> cut_polygon(const ConvexPolygon& poly, const Point& p, const Vec2& dir,
                                       const Tolerances& tol, GeomDiagnostics* diag) {
  if (dir.norm() < 1e-300) throw InvalidInput("cut_polygon: degenerate line direction");
  if (poly.empty()) return {};
  const Vec2 n(-dir.y(), dir.x());
  const double c = n.dot(p);
  std::vector<ConvexPolygon> out;
  const double in_area = poly.area();
  // clip with the sliver floor disabled so drops are decided (and logged) here
  Tolerances clip_tol = tol;
  clip_tol.eps_area = 0.0;
  ConvexPolygon lo = poly.clip_halfplane(n / n.norm(), c / n.norm(), clip_tol);
  ConvexPolygon hi = poly.clip_halfplane(-n / n.norm(), -c / n.norm(), clip_tol);
  double kept = 0.0;
  for (auto* piece : {&lo, &hi}) {
    if (piece->empty()) continue;
    if (piece->area() < tol.eps_area) {
      if (diag) {
        diag->slivers_dropped++;
        diag->sliver_area += piece->area();
      }
      continue;
    }
    kept += piece->area();
    out.push_back(std::move(*piece));
  }
  if (out.empty()) {
    out.push_back(poly);  // line missed the polygon entirely
  } else if (out.size() == 1 && kept < in_area - 1e-9 * std::max(in_area, 1.0)) {
    // one side was a dropped sliver: keep original to conserve area
    out.clear();
    out.push_back(poly);
  }
  return out;
}

namespace {

// True when `seg` covers the full chord of `cell` on seg's supporting line,
// i.e. cutting the cell along that line is a valid refinement step.
bool segment_spans_cell(const ConvexPolygon& cell, const Segment& seg, const Tolerances& tol) {
  auto chord = cell.clip_segment(Segment(seg.a, seg.b), tol);
  // extend the segment line well past both ends to get the full chord
  const Vec2 d = (seg.b - seg.a);
  const double L = d.norm();
  if (L < tol.eps_geo) return false;
  Vec2 lo, hi;
  cell.bounding_box(lo, hi);
  const double reach = (hi - lo).norm() + L;
  const Segment long_seg(seg.a - d / L * reach, seg.b + d / L * reach, seg.origin);
  auto full = cell.clip_segment(long_seg, tol);
  if (!full) return false;
  if (!chord) return false;
  // chord endpoints must reach the full chord's endpoints (within tolerance)
  const double slack = 64.0 * tol.eps_geo;
  const bool covers = (chord->length() >= full->length() - slack);
  if (!covers) return false;
  // the chord must pass through the interior, not graze an edge
  return cell.contains_interior(full->midpoint(), tol.eps_geo);
}

}  // namespace

std::vector<ConvexPolygon> refine_cells(const std::vector<ConvexPolygon>& cells,
                                        const std::vector<Segment>& segments, const Tolerances& tol,
                                        GeomDiagnostics* diag) {
  std::vector<ConvexPolygon> cur = cells;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<ConvexPolygon> next;
    next.reserve(cur.size());
    for (const auto& cell : cur) {
      bool cut = false;
      for (const auto& seg : segments) {
        if (!segment_spans_cell(cell, seg, tol)) continue;
        auto pieces = cut_polygon(cell, seg.a, seg.b - seg.a, tol, diag);
        if (pieces.size() >= 2) {
          for (auto& pc : pieces) next.push_back(std::move(pc));
          cut = true;
          changed = true;
          break;
        }
      }
      if (!cut) next.push_back(cell);
    }
    cur = std::move(next);
  }
  sort_cells_canonically(cur);
  return cur;
}

void sort_cells_canonically(std::vector<ConvexPolygon>& cells) {
  std::sort(cells.begin(), cells.end(), [](const ConvexPolygon& a, const ConvexPolygon& b) {
    const Point ca = a.centroid(), cb = b.centroid();
    if (ca.x() != cb.x()) return ca.x() < cb.x();
    return ca.y() < cb.y();
  });
}

// ---------------------------------------------------------------------------
// vertex census

namespace {

struct LineKey {
  // normalized supporting line: unit normal with canonical sign, offset
  Vec2 n;
  double c;
};

LineKey supporting_line(const Segment& s) {
  Vec2 d = (s.b - s.a).normalized();
  Vec2 n(-d.y(), d.x());
  if (n.x() < 0.0 || (n.x() == 0.0 && n.y() < 0.0)) n = -n;
  return {n, n.dot(s.a)};
}

bool same_line(const LineKey& a, const LineKey& b, double eps) {
  return (a.n - b.n).norm() <= 1e-9 && std::abs(a.c - b.c) <= std::max(eps, 1e-9);
}

}  // namespace

VertexCensus vertex_multiplicity_census(const std::vector<Segment>& segments, const Tolerances& tol) {
  VertexCensus census;
  if (segments.empty()) return census;
  census.max_multiplicity = 1;

  std::vector<Point> pts;
  const std::size_t m = segments.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (auto p = segment_intersection(segments[i], segments[j], tol.eps_geo)) pts.push_back(*p);
    }
  }
  if (pts.empty()) return census;

  // cluster within eps_geo (eps is tiny; a linear scan against accepted
  // representatives is fine at these sizes)
  std::vector<Point> reps;
  const double cluster_eps = std::max(tol.eps_geo, 1e-11);
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });
  for (const auto& p : pts) {
    bool found = false;
    for (const auto& r : reps) {
      if ((r - p).norm() <= cluster_eps) {
        found = true;
        break;
      }
    }
    if (!found) reps.push_back(p);
  }

  std::vector<LineKey> lines(m);
  for (std::size_t i = 0; i < m; ++i) lines[i] = supporting_line(segments[i]);

  for (const auto& r : reps) {
    // group passing segments by supporting line; a maximal collinear overlap
    // group counts as a single curve through the point
    std::vector<LineKey> groups;
    for (std::size_t i = 0; i < m; ++i) {
      if (point_segment_distance(r, segments[i]) > cluster_eps) continue;
      bool merged = false;
      for (const auto& g : groups) {
        if (same_line(g, lines[i], cluster_eps)) {
          merged = true;
          break;
        }
      }
      if (!merged) groups.push_back(lines[i]);
    }
    const int mult = static_cast<int>(groups.size());
    if (mult >= 2) census.points.push_back({r, mult});
    census.max_multiplicity = std::max(census.max_multiplicity, mult);
  }
  std::sort(census.points.begin(), census.points.end(),
            [](const MultiplicityPoint& a, const MultiplicityPoint& b) {
              if (a.multiplicity != b.multiplicity) return a.multiplicity > b.multiplicity;
              return a.where.x() != b.where.x() ? a.where.x() < b.where.x() : a.where.y() < b.where.y();
            });
  return census;
}

}  // namespace hypent
