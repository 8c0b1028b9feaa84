#include "hypent/partition_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

namespace hypent {

// ---------------------------------------------------------------------------
// CellIndex

CellIndex::CellIndex(const std::vector<ConvexPolygon>& cells) : cells_(&cells) {
  Vec2 lo(1e300, 1e300), hi(-1e300, -1e300);
  for (const auto& c : cells) {
    Vec2 clo, chi;
    c.bounding_box(clo, chi);
    lo = lo.cwiseMin(clo);
    hi = hi.cwiseMax(chi);
  }
  if (cells.empty()) {
    lo = Vec2(0, 0);
    hi = Vec2(1, 1);
  }
  lo_ = lo - Vec2(1e-9, 1e-9);
  const Vec2 span = hi - lo + Vec2(2e-9, 2e-9);
  grid_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(cells.size()))));
  size_ = span / grid_;
  buckets_.assign(static_cast<std::size_t>(grid_) * grid_, {});
  for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
    Vec2 clo, chi;
    cells[i].bounding_box(clo, chi);
    const int x0 = std::clamp(static_cast<int>((clo.x() - lo_.x()) / size_.x()), 0, grid_ - 1);
    const int x1 = std::clamp(static_cast<int>((chi.x() - lo_.x()) / size_.x()), 0, grid_ - 1);
    const int y0 = std::clamp(static_cast<int>((clo.y() - lo_.y()) / size_.y()), 0, grid_ - 1);
    const int y1 = std::clamp(static_cast<int>((chi.y() - lo_.y()) / size_.y()), 0, grid_ - 1);
    for (int x = x0; x <= x1; ++x) {
      for (int y = y0; y <= y1; ++y) buckets_[static_cast<std::size_t>(x) * grid_ + y].push_back(i);
    }
  }
}

int CellIndex::locate(const Point& p, double eps_geo) const {
  const int x = std::clamp(static_cast<int>((p.x() - lo_.x()) / size_.x()), 0, grid_ - 1);
  const int y = std::clamp(static_cast<int>((p.y() - lo_.y()) / size_.y()), 0, grid_ - 1);
  for (int i : buckets_[static_cast<std::size_t>(x) * grid_ + y]) {
    if ((*cells_)[i].contains(p, eps_geo)) return i;
  }
  return -1;
}

void CellIndex::overlap_candidates(const Vec2& lo, const Vec2& hi, std::vector<int>& out) const {
  out.clear();
  const int x0 = std::clamp(static_cast<int>((lo.x() - lo_.x()) / size_.x()), 0, grid_ - 1);
  const int x1 = std::clamp(static_cast<int>((hi.x() - lo_.x()) / size_.x()), 0, grid_ - 1);
  const int y0 = std::clamp(static_cast<int>((lo.y() - lo_.y()) / size_.y()), 0, grid_ - 1);
  const int y1 = std::clamp(static_cast<int>((hi.y() - lo_.y()) / size_.y()), 0, grid_ - 1);
  for (int x = x0; x <= x1; ++x) {
    for (int y = y0; y <= y1; ++y) {
      for (int i : buckets_[static_cast<std::size_t>(x) * grid_ + y]) out.push_back(i);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

// ---------------------------------------------------------------------------
// Singularity sets

SingularCurveSet singular_set(const PiecewiseAffineMap& map, int n, Sign sign) {
  if (n < 1) throw InvalidInput("singular_set: n >= 1 required");
  SingularCurveSet out;
  out.n = n;
  out.sign = sign;
  std::vector<Segment> level = (sign == Sign::Plus) ? map.s_plus() : map.s_minus();
  out.segments = level;
  for (int i = 1; i < n; ++i) {
    level = (sign == Sign::Plus) ? pullback_segments(map, level) : pushforward_segments(map, level);
    for (auto& s : level) s.origin = i;
    out.segments.insert(out.segments.end(), level.begin(), level.end());
  }
  std::sort(out.segments.begin(), out.segments.end(), [](const Segment& a, const Segment& b) {
    if (a.origin != b.origin) return a.origin < b.origin;
    const Point ma = a.midpoint(), mb = b.midpoint();
    if (ma.x() != mb.x()) return ma.x() < mb.x();
    return ma.y() < mb.y();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Itinerary refinement

namespace {

struct CellRec {
  ConvexPolygon poly;
  int first_branch = -1;      // head of the forward itinerary
  Mat2 M = Mat2::Identity();  // composed map of the tracked backward steps
  Vec2 v = Vec2::Zero();
};

// One pullback step: cells of M_0^{i+1} from cells of M_0^i.  When `track`
// is set, the composed map T^{j+1}|_cell = T^j|_A o T_b is maintained and the
// original forward head is inherited from A.
void refine_step(const PiecewiseAffineMap& map, std::vector<CellRec>& cells, bool track,
                 std::int64_t cap) {
  const auto& branches = map.branches();
  const auto& domains = map.domains();
  std::vector<CellRec> next;
  next.reserve(cells.size() * 2);
  const Tolerances& tol = map.tol();
  for (const auto& rec : cells) {
    for (std::size_t b = 0; b < branches.size(); ++b) {
      const Mat2 inv = branches[b].linear.inverse();
      const ConvexPolygon pre = rec.poly.affine_image(inv, -inv * branches[b].offset);
      ConvexPolygon piece = pre.intersect(domains[b], tol);
      if (piece.empty() || piece.area() < 1e-13) continue;
      CellRec nr;
      nr.poly = std::move(piece);
      if (track) {
        nr.first_branch = rec.first_branch;
        nr.M = rec.M * branches[b].linear;
        nr.v = rec.M * branches[b].offset + rec.v;
      } else {
        nr.first_branch = static_cast<int>(b);
      }
      next.push_back(std::move(nr));
      if (static_cast<std::int64_t>(next.size()) > cap) {
        throw CapExceeded("refine: projected cell count exceeds cap (" + std::to_string(cap) + ")");
      }
    }
  }
  cells = std::move(next);
}

void sort_cell_recs(std::vector<CellRec>& cells) {
  std::sort(cells.begin(), cells.end(), [](const CellRec& a, const CellRec& b) {
    const Point ca = a.poly.centroid(), cb = b.poly.centroid();
    if (ca.x() != cb.x()) return ca.x() < cb.x();
    return ca.y() < cb.y();
  });
}

// True when the two convex cells share a boundary piece of positive length.
bool cells_share_edge(const ConvexPolygon& a, const ConvexPolygon& b, double eps) {
  const auto& va = a.vertices();
  const auto& vb = b.vertices();
  for (std::size_t i = 0; i < va.size(); ++i) {
    Segment ea(va[i], va[(i + 1) % va.size()]);
    for (std::size_t j = 0; j < vb.size(); ++j) {
      Segment eb(vb[j], vb[(j + 1) % vb.size()]);
      if (!collinear(ea, eb, 1e-9)) continue;
      const Vec2 d = ea.direction();
      double a0 = d.dot(ea.a), a1 = d.dot(ea.b);
      double b0 = d.dot(eb.a), b1 = d.dot(eb.b);
      if (a0 > a1) std::swap(a0, a1);
      if (b0 > b1) std::swap(b0, b1);
      if (std::min(a1, b1) - std::max(a0, b0) > eps) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<TrackedCell> forward_cells_tracked(const PiecewiseAffineMap& map, int n,
                                               std::int64_t cell_cap) {
  std::vector<CellRec> cells;
  cells.push_back({map.ambient_polygon(), -1, Mat2::Identity(), Vec2::Zero()});
  for (int i = 0; i < n; ++i) refine_step(map, cells, true, cell_cap);
  sort_cell_recs(cells);
  std::vector<TrackedCell> out;
  out.reserve(cells.size());
  for (auto& rec : cells) out.push_back({std::move(rec.poly), rec.M, rec.v});
  return out;
}

PartitionRefinement refine(const PiecewiseAffineMap& map, int k, int n, std::int64_t cell_cap) {
  if (k < 0 || n < 0 || k + n < 1) throw InvalidInput("refine: need k, n >= 0 and k + n >= 1");
  std::vector<CellRec> cells;
  cells.push_back({map.ambient_polygon(), -1, Mat2::Identity(), Vec2::Zero()});
  // The forward-only phase builds M_0^n; the tracked phase prepends k more
  // steps and keeps the composed T^k|_cell used to push cells to M_{-k}^n.
  for (int i = 0; i < n; ++i) refine_step(map, cells, false, cell_cap);
  for (int i = 0; i < k; ++i) refine_step(map, cells, true, cell_cap);

  PartitionRefinement out;
  out.k = k;
  out.n = n;
  if (k > 0) {
    for (auto& rec : cells) rec.poly = rec.poly.affine_image(rec.M, rec.v);
  }
  sort_cell_recs(cells);
  out.count = cells.size();
  out.cells.reserve(cells.size());
  out.first_branch.reserve(cells.size());
  for (auto& rec : cells) {
    out.cells.push_back(std::move(rec.poly));
    out.first_branch.push_back(rec.first_branch);
    if (k > 0) {
      out.backward_linear.push_back(rec.M);
      out.backward_offset.push_back(rec.v);
    }
  }
  const Vec2 sdir = map.stable_cone().axis;
  const Vec2 udir = map.unstable_cone().axis;
  out.stable_diam.reserve(out.cells.size());
  out.unstable_diam.reserve(out.cells.size());
  for (const auto& c : out.cells) {
    out.stable_diam.push_back(diameter_along(c, sdir));
    out.unstable_diam.push_back(diameter_along(c, udir));
  }

  // isolated-point proxy: census of boundary-curve intersections, only at
  // sizes where the quadratic pass is affordable
  std::vector<Segment> curves;
  if (n >= 1) {
    auto sp = singular_set(map, n, Sign::Plus);
    curves.insert(curves.end(), sp.segments.begin(), sp.segments.end());
  }
  if (k >= 1) {
    auto sm = singular_set(map, k, Sign::Minus);
    curves.insert(curves.end(), sm.segments.begin(), sm.segments.end());
  }
  if (curves.size() <= 3000) {
    out.isolated_points =
        static_cast<long>(vertex_multiplicity_census(curves, map.tol()).points.size());
  }
  return out;
}

std::vector<std::int64_t> count_sequence(const PiecewiseAffineMap& map, int n_max,
                                         std::int64_t cell_cap, bool* capped) {
  std::vector<std::int64_t> counts;
  if (capped) *capped = false;
  std::vector<CellRec> cells;
  cells.push_back({map.ambient_polygon(), -1, Mat2::Identity(), Vec2::Zero()});
  for (int i = 0; i < n_max; ++i) {
    try {
      refine_step(map, cells, false, cell_cap);
    } catch (const CapExceeded&) {
      if (capped) {
        *capped = true;
        return counts;
      }
      throw;
    }
    counts.push_back(static_cast<std::int64_t>(cells.size()));
  }
  return counts;
}

std::vector<std::int64_t> count_sequence_backward(const PiecewiseAffineMap& map, int n_max,
                                                  std::int64_t cell_cap) {
  std::vector<std::int64_t> counts;
  std::vector<ConvexPolygon> cells{map.ambient_polygon()};
  const Tolerances& tol = map.tol();
  for (int i = 0; i < n_max; ++i) {
    std::vector<ConvexPolygon> next;
    next.reserve(cells.size() * 2);
    for (const auto& cell : cells) {
      for (std::size_t b = 0; b < map.branches().size(); ++b) {
        ConvexPolygon piece = cell.intersect(map.domains()[b], tol);
        if (piece.empty() || piece.area() < 1e-13) continue;
        next.push_back(piece.affine_image(map.branches()[b].linear, map.branches()[b].offset));
        if (static_cast<std::int64_t>(next.size()) > cell_cap) {
          throw CapExceeded("count_sequence_backward: cap exceeded");
        }
      }
    }
    cells = std::move(next);
    counts.push_back(static_cast<std::int64_t>(cells.size()));
  }
  return counts;
}

// ---------------------------------------------------------------------------
// h* estimate

HstarEstimate estimate_hstar(const std::vector<std::int64_t>& counts, int fit_lo, int fit_hi) {
  HstarEstimate est;
  est.counts = counts;
  const int n_max = static_cast<int>(counts.size());
  fit_lo = std::max(fit_lo, 1);
  fit_hi = std::min(fit_hi, n_max);
  if (fit_hi - fit_lo + 1 < 4) throw InvalidInput("estimate_hstar: need >= 4 counts in the window");
  est.fit_lo = fit_lo;
  est.fit_hi = fit_hi;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int n = fit_lo; n <= fit_hi; ++n) {
    const double x = n;
    const double y = std::log(static_cast<double>(counts[n - 1]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  const double denom = m * sxx - sx * sx;
  est.hstar = (m * sxy - sx * sy) / denom;
  const double intercept = (sy - est.hstar * sx) / m;
  est.fit_residual = 0.0;
  est.C_sharp_lo = 1e300;
  est.C_sharp_hi = 0.0;
  for (int n = fit_lo; n <= fit_hi; ++n) {
    const double y = std::log(static_cast<double>(counts[n - 1]));
    est.fit_residual = std::max(est.fit_residual, std::abs(y - (intercept + est.hstar * n)));
    const double scaled = counts[n - 1] * std::exp(-est.hstar * n);
    est.C_sharp_lo = std::min(est.C_sharp_lo, scaled);
    est.C_sharp_hi = std::max(est.C_sharp_hi, scaled);
  }

  // c1 = min over 1 <= j <= n of count(n) / (count(n-j) count(j)), count(0) = 1
  est.c1 = 1e300;
  auto cnt = [&](int n) -> double { return n == 0 ? 1.0 : static_cast<double>(counts[n - 1]); };
  for (int n = 1; n <= n_max; ++n) {
    for (int j = 1; j <= n; ++j) {
      est.c1 = std::min(est.c1, cnt(n) / (cnt(n - j) * cnt(j)));
    }
  }
  return est;
}

// ---------------------------------------------------------------------------
// Count-inequality checks

PartitionCountChecks partition_count_checks(const PiecewiseAffineMap& map, int k, int n,
                                       std::int64_t cell_cap) {
  if (k < 1 || n < 1) throw InvalidInput("partition_count_checks: k, n >= 1");
  PartitionCountChecks out;

  PartitionRefinement fine = refine(map, k, k + n, cell_cap);  // M_{-k}^{k+n}
  PartitionRefinement base = refine(map, k, k, cell_cap);      // M_{-k}^{k} = interiors of P_k
  out.components = static_cast<std::int64_t>(fine.count);

  CellIndex base_index(base.cells);

  // itinerary signature of each fine cell: which P_k element contains T^i x
  std::map<std::vector<int>, std::vector<int>> classes;
  for (std::size_t c = 0; c < fine.cells.size(); ++c) {
    Point p = fine.cells[c].centroid();
    std::vector<int> sig;
    sig.reserve(n + 1);
    for (int i = 0; i <= n; ++i) {
      sig.push_back(base_index.locate(p, map.tol().eps_geo));
      if (i < n) {
        auto next = map.forward(p);
        if (next.empty()) break;
        p = next.front();
      }
    }
    classes[sig].push_back(static_cast<int>(c));
  }
  out.interior_classes = static_cast<std::int64_t>(classes.size());
  out.refinement_inequality = out.interior_classes <= out.components;

  // disconnected classes: union-find over shared boundary edges
  for (const auto& [sig, members] : classes) {
    if (members.size() <= 1) continue;
    std::vector<int> parent(members.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        if (cells_share_edge(fine.cells[members[i]], fine.cells[members[j]], 1e-10)) {
          const int ri = find(static_cast<int>(i));
          const int rj = find(static_cast<int>(j));
          if (ri != rj) parent[ri] = rj;
        }
      }
    }
    int roots = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (find(static_cast<int>(i)) == static_cast<int>(i)) ++roots;
    }
    if (roots > 1) ++out.disconnected_classes;
  }

  // isolated-point census against the combinatorial bound
  out.isolated_census = fine.isolated_points;
  auto counts = count_sequence(map, k + n, cell_cap);
  std::int64_t sum = 0;
  for (auto c : counts) sum += c;
  out.isolated_bound =
      2 * static_cast<std::int64_t>(map.s_plus().size() + map.s_minus().size()) * sum;
  out.isolated_within_bound = (out.isolated_census >= 0 && out.isolated_census <= out.isolated_bound);
  return out;
}

}  // namespace hypent
