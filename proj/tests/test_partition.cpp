#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "hypent/partition_dynamics.hpp"

using namespace hypent;

namespace {

std::set<long> distinct_vertical_lines(const std::vector<Segment>& segs) {
  std::set<long> xs;
  for (const auto& s : segs) {
    REQUIRE(std::abs(s.a.x() - s.b.x()) < 1e-12);  // all vertical
    xs.insert(std::lround(s.a.x() * 1e9));
  }
  return xs;
}

// Independent oracle for the refinement identity: counts nonempty pairwise
// intersections of M_0^n cells with M_{-k}^0 cells.
std::int64_t pairwise_clip_count(const PiecewiseAffineMap& map, int k, int n) {
  auto fwd = refine(map, 0, n);
  auto bwd = refine(map, k, 0);
  std::int64_t count = 0;
  for (const auto& a : fwd.cells) {
    for (const auto& b : bwd.cells) {
      auto inter = a.intersect(b, map.tol());
      if (!inter.empty() && inter.area() > 1e-12) ++count;
    }
  }
  return count;
}

}  // namespace

TEST_CASE("baker3 singularity iterates") {
  auto map = make_baker3();

  auto s1 = singular_set(map, 1, Sign::Plus);
  REQUIRE(s1.segments.size() == 2);
  auto xs1 = distinct_vertical_lines(s1.segments);
  CHECK(xs1.count(std::lround(1e9 / 3.0)) == 1);
  CHECK(xs1.count(std::lround(2e9 / 3.0)) == 1);

  // preimages of {1/3, 2/3} under the times-3 map: all j/9 interior multiples
  auto s2 = singular_set(map, 2, Sign::Plus);
  CHECK(s2.segments.size() == 8);  // 2 base + 6 preimage lines
  std::set<long> expect;
  for (int j : {3, 6}) expect.insert(std::lround(j * 1e9 / 9.0));
  for (int j : {1, 2, 4, 5, 7, 8}) expect.insert(std::lround(j * 1e9 / 9.0));
  CHECK(distinct_vertical_lines(s2.segments) == expect);

  auto m1 = singular_set(map, 1, Sign::Minus);
  REQUIRE(m1.segments.size() == 2);
  for (const auto& s : m1.segments) {
    CHECK(std::abs(s.a.y() - s.b.y()) < 1e-12);  // horizontal
    CHECK((std::abs(s.a.y() - 1.0 / 3) < 1e-9 || std::abs(s.a.y() - 2.0 / 3) < 1e-9));
  }
}

TEST_CASE("refine cell counts for baker3") {
  auto map = make_baker3();
  auto r02 = refine(map, 0, 2);
  CHECK(r02.count == 9);  // 3^n vertical strips: 8 distinct cut lines + 1

  auto r11 = refine(map, 1, 1);
  CHECK(r11.count == 9);  // 3 x 3 grid
  for (std::size_t i = 0; i < r11.count; ++i) {
    CHECK(r11.cells[i].area() == doctest::Approx(1.0 / 9).epsilon(1e-9));
  }
}

TEST_CASE("refine counts for cat match the mod-1 pieces and point location") {
  auto map = make_cat();
  auto r = refine(map, 0, 1);
  CHECK(r.count == map.domains().size());

  // point-location sampling cross-check: every sampled point lies in exactly
  // one cell and every cell is hit
  std::set<int> hit;
  CellIndex index(r.cells);
  int accepted = 0;
  std::uint64_t state = 42;
  auto rnd = [&]() {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return (state >> 11) * 0x1.0p-53;
  };
  while (accepted < 2000) {
    Point p(rnd(), rnd());
    int hits = 0, which = -1;
    for (int i = 0; i < static_cast<int>(r.cells.size()); ++i) {
      if (r.cells[i].contains_interior(p, 1e-9)) {
        ++hits;
        which = i;
      }
    }
    if (hits == 0) continue;  // on a boundary
    CHECK(hits == 1);
    hit.insert(which);
    ++accepted;
  }
  CHECK(hit.size() == r.cells.size());
}

TEST_CASE("count sequences: baker3 is 3^n, baker2u is 2^n") {
  auto b3 = count_sequence(make_baker3(), 8);
  std::int64_t expect = 1;
  for (int n = 1; n <= 8; ++n) {
    expect *= 3;
    CHECK(b3[n - 1] == expect);
  }
  auto b2 = count_sequence(make_baker2u(0.4), 10);
  expect = 1;
  for (int n = 1; n <= 10; ++n) {
    expect *= 2;
    CHECK(b2[n - 1] == expect);
  }
}

TEST_CASE("count sequence for cat approaches the eigenvalue ratio") {
  auto counts = count_sequence(make_cat(), 9);
  const double lambda = (3.0 + std::sqrt(5.0)) / 2.0;
  const double ratio = static_cast<double>(counts[8]) / counts[7];
  CHECK(std::abs(ratio - lambda) / lambda < 0.05);
  // monotone nondecreasing
  for (std::size_t i = 1; i < counts.size(); ++i) CHECK(counts[i] >= counts[i - 1]);
}

TEST_CASE("count cap produces a truncated sequence with a flag") {
  bool capped = false;
  auto counts = count_sequence(make_baker3(), 10, 100, &capped);
  CHECK(capped);
  CHECK(counts.size() == 4);  // 3, 9, 27, 81 fit under 100
  CHECK_THROWS_AS(count_sequence(make_baker3(), 10, 100), CapExceeded);
}

TEST_CASE("time symmetry #M_0^n = #M_{-n}^0") {
  for (const auto* name : {"baker3", "baker2u:0.4", "cat"}) {
    auto map = load_map(name);
    auto fwd = count_sequence(map, 5);
    auto bwd = count_sequence_backward(map, 5);
    for (int i = 0; i < 5; ++i) CHECK(fwd[i] == bwd[i]);
  }
}

TEST_CASE("refinement consistency #M_{-k}^n = #M_0^{n+k} and the clip oracle") {
  for (const auto* name : {"baker3", "baker2u:0.4", "cat"}) {
    auto map = load_map(name);
    for (int k = 1; k <= 2; ++k) {
      for (int n = 1; n <= 2; ++n) {
        auto r = refine(map, k, n);
        auto counts = count_sequence(map, n + k);
        CHECK(static_cast<std::int64_t>(r.count) == counts[n + k - 1]);
        CHECK(static_cast<std::int64_t>(r.count) == pairwise_clip_count(map, k, n));
      }
    }
  }
}

TEST_CASE("cell diameters shrink in the cut direction") {
  auto map = make_baker3();
  for (int n = 1; n <= 5; ++n) {
    auto r = refine(map, 0, n);
    double max_u = 0.0, max_s = 0.0;
    for (std::size_t i = 0; i < r.count; ++i) {
      max_u = std::max(max_u, r.unstable_diam[i]);
      max_s = std::max(max_s, r.stable_diam[i]);
    }
    // M_0^n cells are vertical strips: unstable width 3^{-n}, full stable height
    CHECK(max_u == doctest::Approx(std::pow(3.0, -n)).epsilon(1e-9));
    CHECK(max_s == doctest::Approx(1.0).epsilon(1e-9));
  }
  // two-sided refinement shrinks both directions like Lambda^{-k}
  auto r22 = refine(map, 2, 2);
  for (std::size_t i = 0; i < r22.count; ++i) {
    CHECK(r22.stable_diam[i] <= 1.0 / 9 + 1e-9);
    CHECK(r22.unstable_diam[i] <= 1.0 / 9 + 1e-9);
  }
}

TEST_CASE("estimate_hstar on exact geometric sequences") {
  std::vector<std::int64_t> counts;
  std::int64_t c = 1;
  for (int n = 1; n <= 10; ++n) {
    c *= 3;
    counts.push_back(c);
  }
  auto est = estimate_hstar(counts, 1, 10);
  CHECK(est.hstar == doctest::Approx(std::log(3.0)).epsilon(1e-13));
  CHECK(est.fit_residual < 1e-12);
  CHECK(est.c1 == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(est.C_sharp_lo == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(est.C_sharp_hi == doctest::Approx(1.0).epsilon(1e-10));

  std::vector<std::int64_t> twos;
  c = 1;
  for (int n = 1; n <= 8; ++n) {
    c *= 2;
    twos.push_back(c);
  }
  auto est2 = estimate_hstar(twos, 1, 8);
  CHECK(est2.hstar == doctest::Approx(std::log(2.0)).epsilon(1e-13));
  CHECK(est2.c1 == doctest::Approx(1.0).epsilon(1e-13));

  CHECK_THROWS_AS(estimate_hstar(twos, 1, 3), InvalidInput);
}

TEST_CASE("partition count checks: baker3 Markov equality at k=1, n=1") {
  auto map = make_baker3();
  auto chk = partition_count_checks(map, 1, 1);
  CHECK(chk.components == 27);
  CHECK(chk.interior_classes == 27);
  CHECK(chk.refinement_inequality);
  CHECK(chk.disconnected_classes == 0);
  CHECK(chk.isolated_within_bound);
}

TEST_CASE("partition count checks: baker2u and cat inequalities hold") {
  auto chk = partition_count_checks(make_baker2u(0.4), 1, 2);
  CHECK(chk.refinement_inequality);
  CHECK(chk.isolated_within_bound);

  auto chk2 = partition_count_checks(make_cat(), 1, 1);
  CHECK(chk2.refinement_inequality);
  CHECK(chk2.isolated_within_bound);
}

TEST_CASE("interior-class submultiplicativity") {
  auto map = make_baker2u(0.4);
  auto c1 = partition_count_checks(map, 1, 1);
  auto c2 = partition_count_checks(map, 1, 2);
  auto c3 = partition_count_checks(map, 1, 3);
  CHECK(c3.interior_classes <= c1.interior_classes * c2.interior_classes);
  CHECK(c2.interior_classes <= c1.interior_classes * c1.interior_classes);
}

TEST_CASE("supermultiplicativity of counts") {
  for (const auto* name : {"baker3", "baker2u:0.4", "cat"}) {
    auto counts = count_sequence(load_map(name), 8);
    auto est = estimate_hstar(counts, 1, 8);
    CHECK(est.c1 > 0.0);
    if (std::string(name) == "baker3") CHECK(est.c1 == doctest::Approx(1.0).epsilon(1e-12));
  }
}
