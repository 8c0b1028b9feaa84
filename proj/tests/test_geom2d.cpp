#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <set>

#include "hypent/geom2d.hpp"

using namespace hypent;

namespace {

// Deterministic 64-bit generator for sampling oracles.
struct SplitMix64 {
  std::uint64_t s;
  explicit SplitMix64(std::uint64_t seed) : s(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return (next() >> 11) * 0x1.0p-53; }
};

// Independent oracle: counts the sign-classes of sample points against the
// supporting lines of the segments (cells of the line arrangement inside the
// square).  Points within `margin` of any line are rejected.
int point_location_class_count(const std::vector<Segment>& segs, int samples, double margin) {
  SplitMix64 rng(20260810ULL);
  std::set<std::vector<int>> classes;
  int accepted = 0;
  while (accepted < samples) {
    Point p(rng.uniform(), rng.uniform());
    bool near = false;
    std::vector<int> key;
    for (const auto& s : segs) {
      const Vec2 d = (s.b - s.a).normalized();
      const Vec2 n(-d.y(), d.x());
      const double v = n.dot(p - s.a);
      if (std::abs(v) < margin) {
        near = true;
        break;
      }
      key.push_back(v > 0 ? 1 : -1);
    }
    if (near) continue;
    ++accepted;
    classes.insert(key);
  }
  return static_cast<int>(classes.size());
}

}  // namespace

TEST_CASE("cut_polygon bisects the unit square") {
  auto sq = ConvexPolygon::unit_square();
  auto pieces = cut_polygon(sq, Point(0.5, 0.0), Vec2(0.0, 1.0));
  REQUIRE(pieces.size() == 2);
  CHECK(pieces[0].area() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pieces[1].area() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cut_polygon with a disjoint line returns the input") {
  auto sq = ConvexPolygon::unit_square();
  auto pieces = cut_polygon(sq, Point(2.0, 0.0), Vec2(0.0, 1.0));
  REQUIRE(pieces.size() == 1);
  CHECK(pieces[0].area() == doctest::Approx(1.0));
}

TEST_CASE("cut_polygon along the diagonal gives two half triangles") {
  auto sq = ConvexPolygon::unit_square();
  auto pieces = cut_polygon(sq, Point(0.0, 0.0), Vec2(1.0, 1.0));
  REQUIRE(pieces.size() == 2);
  CHECK(pieces[0].area() == doctest::Approx(0.5));
  CHECK(pieces[1].area() == doctest::Approx(0.5));
}

TEST_CASE("cut_polygon rejects a degenerate direction") {
  auto sq = ConvexPolygon::unit_square();
  CHECK_THROWS_AS(cut_polygon(sq, Point(0.5, 0.5), Vec2(0.0, 0.0)), InvalidInput);
}

TEST_CASE("refine_cells: parallel cuts") {
  std::vector<ConvexPolygon> cells{ConvexPolygon::unit_square()};
  std::vector<Segment> segs{{Point(1.0 / 3, 0), Point(1.0 / 3, 1)}, {Point(2.0 / 3, 0), Point(2.0 / 3, 1)}};
  auto out = refine_cells(cells, segs);
  CHECK(out.size() == 3);
}

TEST_CASE("refine_cells: grid") {
  std::vector<ConvexPolygon> cells{ConvexPolygon::unit_square()};
  std::vector<Segment> segs{{Point(0.5, 0), Point(0.5, 1)}, {Point(0, 0.5), Point(1, 0.5)}};
  auto out = refine_cells(cells, segs);
  CHECK(out.size() == 4);
}

TEST_CASE("refine_cells: grid plus diagonal matches the point-location oracle") {
  std::vector<Segment> segs{{Point(0.5, 0), Point(0.5, 1)},
                            {Point(0, 0.5), Point(1, 0.5)},
                            {Point(0, 0), Point(1, 1)}};
  // Three concurrent lines through (1/2, 1/2); the diagonal only crosses the
  // two diagonal quadrants, so the arrangement has 6 cells, not 8.
  const int oracle = point_location_class_count(segs, 4000, 1e-3);
  CHECK(oracle == 6);

  std::vector<ConvexPolygon> cells{ConvexPolygon::unit_square()};
  auto out = refine_cells(cells, segs);
  CHECK(static_cast<int>(out.size()) == oracle);

  double total = 0.0;
  for (const auto& c : out) total += c.area();
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("refine_cells is idempotent") {
  std::vector<Segment> segs{{Point(0.5, 0), Point(0.5, 1)},
                            {Point(0, 0.5), Point(1, 0.5)},
                            {Point(0, 0), Point(1, 1)}};
  std::vector<ConvexPolygon> cells{ConvexPolygon::unit_square()};
  auto once = refine_cells(cells, segs);
  auto twice = refine_cells(once, segs);
  REQUIRE(once.size() == twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(once[i].area() == doctest::Approx(twice[i].area()).epsilon(1e-10));
  }
}

TEST_CASE("refine_cells: area conservation and unique point location") {
  std::vector<Segment> segs{{Point(0.3, 0), Point(0.3, 1)},
                            {Point(0, 0.7), Point(1, 0.7)},
                            {Point(0, 0.2), Point(1, 0.9)},
                            {Point(0.1, 1), Point(0.9, 0)}};
  std::vector<ConvexPolygon> cells{ConvexPolygon::unit_square()};
  auto out = refine_cells(cells, segs);
  double total = 0.0;
  for (const auto& c : out) total += c.area();
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));

  SplitMix64 rng(7ULL);
  int checked = 0;
  while (checked < 1000) {
    Point p(rng.uniform(), rng.uniform());
    bool near = false;
    for (const auto& s : segs) {
      if (point_segment_distance(p, s) < 1e-6) near = true;
    }
    if (near) continue;
    ++checked;
    int hits = 0;
    for (const auto& c : out) {
      if (c.contains_interior(p, 1e-9)) ++hits;
    }
    CHECK(hits == 1);
  }
}

TEST_CASE("diameter_along of simple shapes") {
  auto sq = ConvexPolygon::unit_square();
  CHECK(diameter_along(sq, Vec2(1, 0)) == doctest::Approx(1.0));
  CHECK(diameter_along(sq, Vec2(1, 1)) == doctest::Approx(std::sqrt(2.0)));
  ConvexPolygon tri({{0, 0}, {1, 0}, {0, 1}});
  CHECK(diameter_along(tri, Vec2(1, 0)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(diameter_along(sq, Vec2(0, 0)), InvalidInput);
}

TEST_CASE("vertex census: parallel, grid, concurrent") {
  std::vector<Segment> parallel{{Point(1.0 / 3, 0), Point(1.0 / 3, 1)},
                                {Point(2.0 / 3, 0), Point(2.0 / 3, 1)}};
  CHECK(vertex_multiplicity_census(parallel).max_multiplicity == 1);

  std::vector<Segment> grid{{Point(0.5, 0), Point(0.5, 1)}, {Point(0, 0.5), Point(1, 0.5)}};
  auto c2 = vertex_multiplicity_census(grid);
  CHECK(c2.max_multiplicity == 2);
  REQUIRE(c2.points.size() == 1);
  CHECK(c2.points[0].where.x() == doctest::Approx(0.5));
  CHECK(c2.points[0].where.y() == doctest::Approx(0.5));

  std::vector<Segment> concurrent{{Point(0.5, 0), Point(0.5, 1)},
                                  {Point(0, 0.5), Point(1, 0.5)},
                                  {Point(0, 0), Point(1, 1)}};
  CHECK(vertex_multiplicity_census(concurrent).max_multiplicity == 3);
}

TEST_CASE("vertex census counts a collinear overlap group once") {
  // two halves of the same vertical line crossing one horizontal line
  std::vector<Segment> segs{{Point(0.5, 0), Point(0.5, 0.6)},
                            {Point(0.5, 0.4), Point(0.5, 1)},
                            {Point(0, 0.5), Point(1, 0.5)}};
  CHECK(vertex_multiplicity_census(segs).max_multiplicity == 2);
}

TEST_CASE("polygon intersection and affine images behave") {
  auto a = ConvexPolygon::rectangle(0, 0, 0.6, 0.6);
  auto b = ConvexPolygon::rectangle(0.4, 0.4, 1, 1);
  auto c = a.intersect(b);
  CHECK(c.area() == doctest::Approx(0.04).epsilon(1e-12));

  Mat2 flip;
  flip << -1, 0, 0, 1;  // orientation-reversing
  auto img = a.affine_image(flip, Vec2(1, 0));
  CHECK(img.area() == doctest::Approx(0.36).epsilon(1e-12));
  CHECK(img.contains(Point(0.7, 0.3)));
}

TEST_CASE("segment clipping against a polygon") {
  auto sq = ConvexPolygon::unit_square();
  auto inside = sq.clip_segment(Segment(Point(-1, 0.5), Point(2, 0.5)));
  REQUIRE(inside.has_value());
  CHECK(inside->length() == doctest::Approx(1.0));
  CHECK_FALSE(sq.clip_segment(Segment(Point(-1, 2), Point(2, 2))).has_value());
}

TEST_CASE("cones: membership and margins") {
  Cone c = Cone::from_angle_deg(0.0, 10.0);
  CHECK(c.contains(Vec2(1, 0)));
  CHECK(c.contains(Vec2(-1, 0)));  // directions mod pi
  CHECK(c.contains(Vec2(1, std::tan(9.0 * M_PI / 180))));
  CHECK_FALSE(c.contains(Vec2(1, std::tan(11.0 * M_PI / 180))));
  CHECK_THROWS_AS(Cone(Vec2(1, 0), 0.0), InvalidInput);
}

TEST_CASE("dropped slivers are logged in the diagnostics channel") {
  GeomDiagnostics diag;
  auto sq = ConvexPolygon::unit_square();
  // a cut hugging the edge produces a sliver below the area floor
  Tolerances tol;
  tol.eps_area = 1e-6;
  auto pieces = cut_polygon(sq, Point(1e-9, 0.0), Vec2(0.0, 1.0), tol, &diag);
  REQUIRE(pieces.size() == 1);
  CHECK(pieces[0].area() == doctest::Approx(1.0));
  CHECK(diag.slivers_dropped >= 1);
}
