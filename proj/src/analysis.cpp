#include "hypent/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>

namespace hypent {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

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

double torus_distance(const Point& a, const Point& b) {
  double best = 1e300;
  for (int dx = -1; dx <= 1; ++dx) {
    for (int dy = -1; dy <= 1; ++dy) {
      best = std::min(best, (a - b + Vec2(dx, dy)).norm());
    }
  }
  return best;
}

double point_distance(const PiecewiseAffineMap& map, const Point& a, const Point& b) {
  return map.ambient() == Ambient::Torus ? torus_distance(a, b) : (a - b).norm();
}

double lsq_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const int m = static_cast<int>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < m; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

// ---------------------------------------------------------------------------
// Metric and observables

double bar_distance(const PiecewiseAffineMap& map, const Point& x, const Point& y) {
  const auto dx = map.domains_containing(x);
  const auto dy = map.domains_containing(y);
  for (int i : dx) {
    for (int j : dy) {
      if (i == j) return (x - y).norm();
    }
  }
  return 10.0 * map.ambient_diameter();
}

Observable parse_observable(const std::string& descriptor) {
  Observable obs;
  obs.descriptor = descriptor;
  auto split2 = [](const std::string& args) {
    std::istringstream ss(args);
    double a = 0, b = 0;
    char comma = 0;
    ss >> a >> comma >> b;
    if (!ss || comma != ',') throw InvalidInput("observable: expected <a>,<b> arguments");
    return std::pair<double, double>(a, b);
  };
  if (descriptor == "1") {
    obs.f = [](const Point&) { return 1.0; };
  } else if (descriptor == "x") {
    obs.f = [](const Point& p) { return p.x(); };
  } else if (descriptor == "y") {
    obs.f = [](const Point& p) { return p.y(); };
  } else if (descriptor.rfind("const:", 0) == 0) {
    const double v = std::stod(descriptor.substr(6));
    obs.f = [v](const Point&) { return v; };
  } else if (descriptor.rfind("poly:", 0) == 0) {
    auto [a, b] = split2(descriptor.substr(5));
    obs.f = [a, b](const Point& p) { return std::pow(p.x(), a) * std::pow(p.y(), b); };
  } else if (descriptor.rfind("cos2pi:", 0) == 0) {
    auto [kx, ky] = split2(descriptor.substr(7));
    obs.f = [kx, ky](const Point& p) { return std::cos(kTwoPi * (kx * p.x() + ky * p.y())); };
  } else if (descriptor.rfind("sin2pi:", 0) == 0) {
    auto [kx, ky] = split2(descriptor.substr(7));
    obs.f = [kx, ky](const Point& p) { return std::sin(kTwoPi * (kx * p.x() + ky * p.y())); };
  } else {
    throw InvalidInput("observable: unknown descriptor '" + descriptor + "'");
  }
  return obs;
}

// ---------------------------------------------------------------------------
// Correlations

CorrelationReport correlation_decay(const UlamOperator& op, const DiscreteMeasure& mme,
                                    const Observable& phi, const Observable& psi, int n_max) {
  if (mme.masses.size() != op.size()) throw InvalidInput("correlation_decay: measure mismatch");
  const std::size_t n_cells = op.size();
  std::vector<double> phi_c(n_cells), psi_c(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) {
    const Point c = op.cells.cells[i].centroid();
    phi_c[i] = phi(c);
    psi_c[i] = psi(c);
  }
  double mean_phi = 0, mean_psi = 0;
  for (std::size_t i = 0; i < n_cells; ++i) {
    mean_phi += phi_c[i] * mme.masses[i];
    mean_psi += psi_c[i] * mme.masses[i];
  }

  CorrelationReport rep;
  Eigen::VectorXd w(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) w[i] = psi_c[i] * mme.masses[i];
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) w = op.P * w;
    double corr = 0;
    for (std::size_t i = 0; i < n_cells; ++i) corr += phi_c[i] * w[i];
    rep.table.push_back({n, std::abs(corr - mean_phi * mean_psi)});
  }

  // fit over the decreasing range above the noise floor
  int hi = 0;
  for (int n = 1; n <= n_max; ++n) {
    if (rep.table[n].value <= kCorrelationFloor) {
      rep.truncated = true;
      break;
    }
    if (rep.table[n].value > rep.table[n - 1].value * (1.0 + 1e-9) && n > 1) break;
    hi = n;
  }
  if (hi < 1) {
    rep.immediate_decay = true;
    const double c0 = rep.table[0].value;
    rep.gamma = c0 > kCorrelationFloor ? std::log(c0 / kCorrelationFloor) : 0.0;
    return rep;
  }
  if (hi == 1) {
    rep.gamma = std::log(std::max(rep.table[0].value, kCorrelationFloor) /
                         rep.table[1].value);
    rep.fit_lo = 0;
    rep.fit_hi = 1;
    return rep;
  }
  std::vector<double> xs, ys;
  for (int n = 1; n <= hi; ++n) {
    xs.push_back(n);
    ys.push_back(std::log(rep.table[n].value));
  }
  rep.gamma = -lsq_slope(xs, ys);
  rep.fit_lo = 1;
  rep.fit_hi = hi;
  return rep;
}

// ---------------------------------------------------------------------------
// Bowen balls

namespace {

ConvexPolygon disk_polygon(const Point& c, double r, int sides = 64) {
  std::vector<Point> v;
  v.reserve(sides);
  for (int i = 0; i < sides; ++i) {
    const double th = kTwoPi * i / sides;
    v.emplace_back(c.x() + r * std::cos(th), c.y() + r * std::sin(th));
  }
  return ConvexPolygon(std::move(v));
}

// pieces of { y : bar d(y, w) <= eps } = disk cap (closed domains of w)
std::vector<ConvexPolygon> metric_ball_pieces(const PiecewiseAffineMap& map, const Point& w,
                                              double eps) {
  std::vector<ConvexPolygon> out;
  const ConvexPolygon disk = disk_polygon(w, eps);
  for (int d : map.domains_containing(w)) {
    ConvexPolygon piece = disk.intersect(map.domains()[d], map.tol());
    if (!piece.empty() && piece.area() > 1e-20) out.push_back(std::move(piece));
  }
  return out;
}

}  // namespace

BowenScaling bowen_ball_scaling(const PiecewiseAffineMap& map, const UlamOperator& op,
                                const DiscreteMeasure& mme, const Point& center, int n_max,
                                double eps) {
  if (eps >= 10.0 * map.ambient_diameter()) {
    throw InvalidInput("bowen_ball_scaling: eps must be below 10 diam(M)");
  }
  BowenScaling scaling;
  scaling.center = center;
  scaling.eps = eps;

  std::vector<Point> orbit{center};
  for (int j = 1; j <= n_max; ++j) {
    auto pre = map.inverse(orbit.back());
    if (pre.empty()) throw InvalidInput("bowen_ball_scaling: backward orbit left the domain");
    orbit.push_back(pre.front());
  }

  CellIndex index(op.cells.cells);
  std::vector<double> cell_area(op.size());
  for (std::size_t i = 0; i < op.size(); ++i) cell_area[i] = op.cells.cells[i].area();

  std::vector<int> candidates;
  for (int n = 0; n <= n_max; ++n) {
    // B_n = D_0 cap T(D_1 cap T(... D_n)), built from the deepest constraint up
    std::vector<ConvexPolygon> pieces = metric_ball_pieces(map, orbit[n], eps);
    auto step_forward = [&](std::vector<ConvexPolygon>& ps) {
      std::vector<ConvexPolygon> forward;
      for (const auto& piece : ps) {
        for (std::size_t b = 0; b < map.branches().size(); ++b) {
          ConvexPolygon part = piece.intersect(map.domains()[b], map.tol());
          if (part.empty() || part.area() < 1e-20) continue;
          forward.push_back(
              part.affine_image(map.branches()[b].linear, map.branches()[b].offset));
        }
      }
      ps = std::move(forward);
    };
    for (int j = n - 1; j >= 0; --j) {
      step_forward(pieces);
      std::vector<ConvexPolygon> next;
      for (const auto& dpiece : metric_ball_pieces(map, orbit[j], eps)) {
        for (const auto& f : pieces) {
          ConvexPolygon cut = f.intersect(dpiece, map.tol());
          if (!cut.empty() && cut.area() > 1e-20) next.push_back(std::move(cut));
        }
      }
      pieces = std::move(next);
    }
    // Recenter by invariance: the backward ball is thin only in the stable
    // direction (eps Lambda^{-n}); T^{n/2} balances the two extents so the
    // cell bracketing resolves the set at half the depth.  mu* masses are
    // T-invariant, so the measured value is unchanged up to the invariance
    // residual.
    for (int s = 0; s < n / 2; ++s) step_forward(pieces);

    // bracket the mass cellwise: full cells, touched cells, area fractions
    std::map<int, double> covered;
    for (const auto& piece : pieces) {
      Vec2 lo, hi;
      piece.bounding_box(lo, hi);
      index.overlap_candidates(lo, hi, candidates);
      for (int i : candidates) {
        ConvexPolygon inter = piece.intersect(op.cells.cells[i], map.tol());
        if (!inter.empty()) covered[i] += inter.area();
      }
    }
    BowenBallResult res;
    res.query = {center, n, eps};
    for (const auto& [i, area] : covered) {
      const double frac = std::min(1.0, area / cell_area[i]);
      if (frac > 1.0 - 1e-9) res.mass_lower += mme.masses[i];
      if (frac > 1e-12) res.mass_upper += mme.masses[i];
      res.mass_estimate += mme.masses[i] * frac;
    }
    res.inconclusive = (res.mass_upper > 0.0) &&
                       (res.mass_upper - res.mass_lower > 0.5 * res.mass_upper);
    scaling.per_n.push_back(res);
  }

  std::vector<double> xs, ys;
  for (int n = 1; n <= n_max; ++n) {
    const double m = scaling.per_n[n].mass_estimate;
    if (m <= 0.0) break;
    xs.push_back(n);
    ys.push_back(-std::log(m));
  }
  scaling.slope = xs.size() >= 2 ? lsq_slope(xs, ys) : 0.0;
  return scaling;
}

double pooled_bowen_slope(const std::vector<BowenScaling>& batch) {
  if (batch.empty()) throw InvalidInput("pooled_bowen_slope: empty batch");
  double sum = 0.0;
  for (const auto& b : batch) sum += b.slope;
  return sum / batch.size();
}

std::vector<Point> sample_bowen_centers(const PiecewiseAffineMap& map, int count, int n_max,
                                        double min_clearance, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Point> centers;
  int guard = 0;
  while (static_cast<int>(centers.size()) < count && guard++ < 100000) {
    Point p(rng.uniform(), rng.uniform());
    Point w = p;
    bool good = true;
    for (int j = 0; j <= n_max && good; ++j) {
      for (const auto& s : map.s_minus()) {
        if (point_segment_distance(w, s) < min_clearance) {
          good = false;
          break;
        }
      }
      if (!good) break;
      auto pre = map.inverse(w);
      if (pre.size() != 1) {
        good = false;
        break;
      }
      w = pre.front();
    }
    if (good) centers.push_back(p);
  }
  if (static_cast<int>(centers.size()) < count) {
    throw InvalidInput("sample_bowen_centers: rejection sampling failed");
  }
  return centers;
}

// ---------------------------------------------------------------------------
// Singularity neighborhoods

namespace {

double segment_polygon_min_distance(const Segment& s, const ConvexPolygon& poly) {
  if (poly.clip_segment(s).has_value()) return 0.0;
  double best = 1e300;
  const auto& v = poly.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    best = std::min(best, point_segment_distance(v[i], s));
    // endpoints of s against the polygon edge
    Segment edge(v[i], v[(i + 1) % v.size()]);
    best = std::min(best, point_segment_distance(s.a, edge));
    best = std::min(best, point_segment_distance(s.b, edge));
  }
  return best;
}

double segment_polygon_max_distance(const Segment& s, const ConvexPolygon& poly) {
  double worst = 0.0;
  for (const auto& v : poly.vertices()) worst = std::max(worst, point_segment_distance(v, s));
  return worst;
}

}  // namespace

NeighborhoodReport singularity_neighborhood(const PiecewiseAffineMap& map, const UlamOperator& op,
                                            const DiscreteMeasure& mme, Sign sign,
                                            const std::vector<double>& eps_list) {
  if (eps_list.size() < 2) throw InvalidInput("singularity_neighborhood: need several eps values");
  NeighborhoodReport rep;
  rep.sign = sign;
  const auto& segs = (sign == Sign::Plus) ? map.s_plus() : map.s_minus();

  for (double eps : eps_list) {
    NeighborhoodRow row;
    row.eps = eps;
    for (std::size_t i = 0; i < op.size(); ++i) {
      const auto& cell = op.cells.cells[i];
      double dmin = 1e300, dmax_best = 1e300;
      for (const auto& s : segs) {
        dmin = std::min(dmin, segment_polygon_min_distance(s, cell));
        dmax_best = std::min(dmax_best, segment_polygon_max_distance(s, cell));
      }
      if (dmax_best <= eps) {
        // the whole cell sits within eps of a single curve
        row.lower += mme.masses[i];
        row.upper += mme.masses[i];
        row.estimate += mme.masses[i];
      } else if (dmin < eps) {
        row.upper += mme.masses[i];
        // area fraction of the cell within the eps-slab of the closest curves
        double covered = 0.0;
        const double cell_area = cell.area();
        for (const auto& s : segs) {
          const Vec2 d = s.direction();
          const Vec2 nrm(-d.y(), d.x());
          ConvexPolygon slab = cell.clip_halfplane(nrm, nrm.dot(s.a) + eps, map.tol())
                                   .clip_halfplane(-nrm, -(nrm.dot(s.a) - eps), map.tol());
          // restrict to the segment's extent along its direction
          slab = slab.clip_halfplane(d, d.dot(s.b) + eps, map.tol());
          slab = slab.clip_halfplane(-d, -(d.dot(s.a) - eps), map.tol());
          if (!slab.empty()) covered += slab.area();
        }
        row.estimate += mme.masses[i] * std::min(1.0, covered / cell_area);
      }
    }
    rep.rows.push_back(row);
    if (row.upper > 0.0 && row.upper - row.lower > 0.5 * row.upper) rep.refine_suggested = true;
  }

  std::vector<double> xs, ys;
  for (const auto& row : rep.rows) {
    if (row.estimate > 0.0) {
      xs.push_back(std::log(row.eps));
      ys.push_back(std::log(row.estimate));
    }
  }
  rep.exponent = xs.size() >= 2 ? lsq_slope(xs, ys) : 0.0;
  rep.positive = rep.exponent > 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Periodic orbits

namespace {

struct PointCluster {
  std::vector<Point> reps;
  const PiecewiseAffineMap* map;
  double tol;

  bool insert(const Point& p) {  // returns true if new
    for (const auto& r : reps) {
      if (point_distance(*map, r, p) <= tol) return false;
    }
    reps.push_back(p);
    return true;
  }
  bool contains(const Point& p) const {
    for (const auto& r : reps) {
      if (point_distance(*map, r, p) <= tol) return true;
    }
    return false;
  }
};

}  // namespace

std::vector<PeriodicCensus> count_periodic(const PiecewiseAffineMap& map, int n_max,
                                           std::int64_t cell_cap) {
  std::vector<PeriodicCensus> out;
  std::vector<PointCluster> fixed_sets;  // Fix(T^n) per n
  const double cluster_tol = 1e-9;

  for (int n = 1; n <= n_max; ++n) {
    auto cells = forward_cells_tracked(map, n, cell_cap);
    PointCluster fix{{}, &map, cluster_tol};
    for (const auto& cell : cells) {
      const Mat2 IM = Mat2::Identity() - cell.M;
      const double det = IM.determinant();
      if (std::abs(det) < 1e-10) {
        throw CertificationFailure("count_periodic: |det(I - T^n)| degenerate on a cell");
      }
      const Vec2 fp = IM.inverse() * cell.v;
      if (!cell.poly.contains(fp, 1e-9)) continue;
      fix.insert(map.wrap(fp));
    }
    // sort for determinism of representatives
    std::sort(fix.reps.begin(), fix.reps.end(), [](const Point& a, const Point& b) {
      if (a.x() != b.x()) return a.x() < b.x();
      return a.y() < b.y();
    });

    PeriodicCensus census;
    census.n = n;
    census.fixed_count = static_cast<std::int64_t>(fix.reps.size());

    // Moebius sieve: points of prime period d | n are fixed by T^n
    std::int64_t lower_orders = 0;
    for (int d = 1; d < n; ++d) {
      if (n % d == 0) lower_orders += out[d - 1].prime_count;
    }
    census.prime_count = census.fixed_count - lower_orders;

    // orbit representatives for the prime-period-n points
    std::vector<Point> prime_points;
    for (const auto& p : fix.reps) {
      bool lower = false;
      for (int d = 1; d < n && !lower; ++d) {
        if (n % d == 0 && fixed_sets[d - 1].contains(p)) lower = true;
      }
      if (!lower) prime_points.push_back(p);
    }
    std::vector<bool> used(prime_points.size(), false);
    for (std::size_t i = 0; i < prime_points.size(); ++i) {
      if (used[i]) continue;
      Point rep = prime_points[i];
      Point cur = prime_points[i];
      used[i] = true;
      for (int step = 1; step < n; ++step) {
        auto images = map.forward(cur);
        if (images.empty()) break;
        // follow the image that is itself a prime-period point
        Point chosen = images.front();
        for (const auto& q : images) {
          for (std::size_t j = 0; j < prime_points.size(); ++j) {
            if (point_distance(map, q, prime_points[j]) <= cluster_tol) {
              chosen = prime_points[j];
              used[j] = true;
            }
          }
        }
        cur = chosen;
        if (cur.x() < rep.x() || (cur.x() == rep.x() && cur.y() < rep.y())) rep = cur;
      }
      census.representatives.push_back(rep);
    }
    fixed_sets.push_back(std::move(fix));
    out.push_back(std::move(census));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Invariance and entropy

double invariance_residual(const UlamOperator& op, const DiscreteMeasure& mme) {
  auto pushed = push_forward(op, mme);
  double tv = 0.0;
  for (std::size_t i = 0; i < mme.masses.size(); ++i) {
    tv += std::abs(pushed.masses[i] - mme.masses[i]);
  }
  return 0.5 * tv;
}

double chain_invariance_residual(const UlamOperator& op, const EigenPair& right,
                                 const EigenPair& left, const DiscreteMeasure& mme) {
  const auto& l = left.vec.masses;
  const double lambda = right.lambda;
  std::vector<double> out(op.size(), 0.0);
  for (int j = 0; j < static_cast<int>(op.size()); ++j) {
    if (l[j] <= 0.0) continue;
    for (SparseMat::InnerIterator it(op.A, j); it; ++it) {
      out[it.row()] += it.value() * l[it.row()] / (lambda * l[j]) * mme.masses[j];
    }
  }
  double tv = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) tv += std::abs(out[i] - mme.masses[i]);
  return 0.5 * tv;
}

double shannon_entropy(const std::vector<double>& masses) {
  double h = 0.0;
  for (double m : masses) {
    if (m > 0.0) h -= m * std::log(m);
  }
  return h;
}

EntropyEstimate entropy_estimate(const PiecewiseAffineMap& map, const UlamOperator& op,
                                 const EigenPair& right, const EigenPair& left,
                                 const DiscreteMeasure& mme, int n_max, std::int64_t cell_cap) {
  EntropyEstimate est;
  const auto& l = left.vec.masses;
  const double lambda = right.lambda;

  // conditional entropy of the h-transform chain Q[i|j] = A[i][j] l_i/(lambda l_j)
  double rate = 0.0;
  for (int j = 0; j < static_cast<int>(op.size()); ++j) {
    if (mme.masses[j] <= 0.0 || l[j] <= 0.0) continue;
    double hj = 0.0, qsum = 0.0;
    std::vector<double> qs;
    for (SparseMat::InnerIterator it(op.A, j); it; ++it) {
      const double q = it.value() * l[it.row()] / (lambda * l[j]);
      if (q > 0.0) {
        qs.push_back(q);
        qsum += q;
      }
    }
    for (double q : qs) {
      const double qq = q / qsum;  // kill residual-level drift
      hj -= qq * std::log(qq);
    }
    rate += mme.masses[j] * hj;
  }
  est.rate = rate;

  const double H0 = shannon_entropy(mme.masses);
  est.H.resize(n_max + 1);
  for (int n = 0; n <= n_max; ++n) est.H[n] = H0 + n * rate;
  for (int n = 1; n <= n_max; ++n) est.H_over_n.push_back(est.H[n] / n);

  // entropy sandwich H_n <= log #M_{-k}^{k+n} wherever counts fit the cap
  bool capped = false;
  auto counts = count_sequence(map, n_max + 2 * op.depth, cell_cap, &capped);
  est.sandwich_ok = true;
  for (int n = 0; n <= n_max; ++n) {
    const int idx = n + 2 * op.depth;
    if (idx < 1 || idx > static_cast<int>(counts.size())) continue;
    ++est.sandwich_checked;
    if (est.H[n] > std::log(static_cast<double>(counts[idx - 1])) + 1e-9) {
      est.sandwich_ok = false;
    }
  }
  return est;
}

}  // namespace hypent
