#ifndef HYPENT_GEOM2D_HPP
#define HYPENT_GEOM2D_HPP

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypent {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Point = Vec2;

/// Thrown on violated preconditions (degenerate directions, bad polygons, ...).
struct InvalidInput : std::runtime_error {
  explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a projected cell count exceeds the configured memory cap.
struct CapExceeded : std::runtime_error {
  explicit CapExceeded(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a map fails one of its certification checks.
struct CertificationFailure : std::runtime_error {
  explicit CertificationFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Geometric tolerances.  eps_geo snaps coincident points, eps_area suppresses
/// sliver polygons produced by cutting.  Dropped slivers are counted in
/// `slivers_dropped` so that cell-count discrepancies stay auditable.
struct Tolerances {
  double eps_geo = 1e-12;
  double eps_area = 1e-14;
};

/// Running diagnostics channel for the geometry kernel.
struct GeomDiagnostics {
  long slivers_dropped = 0;
  double sliver_area = 0.0;
};

// ---------------------------------------------------------------------------
// Segment

struct Segment {
  Point a, b;
  int origin = 0;  // which singularity iterate produced this curve (0 = base)

  Segment() : a(Vec2::Zero()), b(Vec2::Zero()) {}
  Segment(const Point& a_, const Point& b_, int origin_ = 0) : a(a_), b(b_), origin(origin_) {}

  double length() const { return (b - a).norm(); }
  Vec2 direction() const { return (b - a).normalized(); }
  Point midpoint() const { return 0.5 * (a + b); }
};

/// Euclidean distance from a point to a segment.
double point_segment_distance(const Point& p, const Segment& s);

/// True if the two segments lie on the same supporting line (within tol).
bool collinear(const Segment& s, const Segment& t, double eps_geo);

/// Intersection point of two segments treated as closed sets; nullopt when
/// disjoint or collinear (overlap handled separately by the census).
std::optional<Point> segment_intersection(const Segment& s, const Segment& t, double eps_geo);

// ---------------------------------------------------------------------------
// ConvexPolygon

/// Convex polygon with counterclockwise vertex order.  Simple, area > 0,
/// at least 3 vertices.  Immutable after construction.
class ConvexPolygon {
 public:
  ConvexPolygon() = default;
  explicit ConvexPolygon(std::vector<Point> vertices, const Tolerances& tol = {});

  static ConvexPolygon rectangle(double x0, double y0, double x1, double y1);
  static ConvexPolygon unit_square() { return rectangle(0.0, 0.0, 1.0, 1.0); }

  const std::vector<Point>& vertices() const { return verts_; }
  std::size_t size() const { return verts_.size(); }
  bool empty() const { return verts_.size() < 3; }

  double area() const;
  Point centroid() const;

  /// Closed containment test: true also for boundary points within eps.
  bool contains(const Point& p, double eps_geo = 1e-12) const;
  /// Strict interior test with margin eps.
  bool contains_interior(const Point& p, double eps_geo = 1e-12) const;

  void bounding_box(Vec2& lo, Vec2& hi) const;

  /// Keeps the part with n.dot(x) <= c.  May return an empty polygon.
  ConvexPolygon clip_halfplane(const Vec2& n, double c, const Tolerances& tol = {}) const;

  /// Intersection with another convex polygon (possibly empty).
  ConvexPolygon intersect(const ConvexPolygon& other, const Tolerances& tol = {}) const;

  /// Image under x -> M x + t.  Vertex order is fixed up when det(M) < 0.
  ConvexPolygon affine_image(const Mat2& M, const Vec2& t) const;

  /// Clips a segment to the polygon; nullopt when the overlap is shorter
  /// than eps_geo.
  std::optional<Segment> clip_segment(const Segment& s, const Tolerances& tol = {}) const;

 private:
  std::vector<Point> verts_;
};

/// Width of the projection of `poly` onto the direction `dir`.
double diameter_along(const ConvexPolygon& poly, const Vec2& dir);

// ---------------------------------------------------------------------------
// Cone

/// Symmetric cone of directions (v ~ -v) around a unit axis.
struct Cone {
  Vec2 axis;
  double half_width;  // radians, in (0, pi/2)

  Cone() : axis(1.0, 0.0), half_width(0.1) {}
  Cone(const Vec2& axis_, double half_width_);

  static Cone from_angle_deg(double axis_deg, double half_width_deg);

  double axis_angle() const { return std::atan2(axis.y(), axis.x()); }

  /// True if the direction of v (mod pi) lies within the closed cone.
  bool contains(const Vec2& v, double margin = 0.0) const;

  /// Signed angular slack of v inside the cone (positive = strictly inside).
  double angular_margin(const Vec2& v) const;
};

// ---------------------------------------------------------------------------
// Operations

/// Splits a convex polygon by the supporting line through `p` with direction
/// `dir`.  Pieces with area below eps_area are dropped (and logged in diag).
std::vector<ConvexPolygon> cut_polygon(const ConvexPolygon& poly, const Point& p, const Vec2& dir,
                                       const Tolerances& tol = {}, GeomDiagnostics* diag = nullptr);

/// Refines a family of pairwise interior-disjoint convex cells by a set of
/// straight segments: no output cell interior crosses an input segment.
/// A cell is cut by a segment only when the segment spans the full chord of
/// the cell on its supporting line (a partial segment cannot disconnect a
/// convex cell).  Passes repeat until no further cut applies.  Output is
/// sorted by centroid (lexicographic) so runs are reproducible.
std::vector<ConvexPolygon> refine_cells(const std::vector<ConvexPolygon>& cells,
                                        const std::vector<Segment>& segments,
                                        const Tolerances& tol = {}, GeomDiagnostics* diag = nullptr);

/// One point where the maximum number of curves meet.
struct MultiplicityPoint {
  Point where;
  int multiplicity = 0;
};

/// Result of the coincidence census over a segment family.
struct VertexCensus {
  int max_multiplicity = 0;          // 1 when there are segments but no crossings
  std::vector<MultiplicityPoint> points;  // clustered intersection points, multiplicity >= 2
};

/// Maximum number of curves through a single point.  Collinear overlapping
/// segments count once per maximal overlap group; intersection points are
/// clustered within eps_geo.
VertexCensus vertex_multiplicity_census(const std::vector<Segment>& segments,
                                        const Tolerances& tol = {});

/// Canonical ordering used everywhere cells are emitted.
void sort_cells_canonically(std::vector<ConvexPolygon>& cells);

}  // namespace hypent

#endif  // HYPENT_GEOM2D_HPP
