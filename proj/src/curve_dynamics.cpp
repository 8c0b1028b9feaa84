#include "hypent/curve_dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace hypent {

namespace {

// Equal-part subdivision of a long piece into lengths within [delta/2, delta].
void subdivide_into(const Segment& s, double delta, int parent, std::vector<FragmentPiece>& out) {
  const double len = s.length();
  if (len <= delta) {
    out.push_back({s, len, parent, false});
    return;
  }
  // tolerant ceil: a length of exactly k*delta splits into k parts
  const int parts = std::max(1, static_cast<int>(std::ceil(len / delta * (1.0 - 1e-12))));
  const Vec2 step = (s.b - s.a) / parts;
  for (int i = 0; i < parts; ++i) {
    Segment piece(s.a + i * step, s.a + (i + 1) * step, s.origin);
    out.push_back({piece, piece.length(), parent, false});
  }
}

}  // namespace

FragmentationReport fragment(const PiecewiseAffineMap& map, const StableSegment& W, int n,
                             double delta) {
  if (delta <= 0.0) throw InvalidInput("fragment: delta must be positive");
  FragmentationReport rep;
  rep.origin = W;
  rep.delta = delta;
  rep.generations.reserve(n);

  std::vector<FragmentPiece> prev{{W.geom, W.length(), -1, true}};
  // The origin's own length does not enter the never-long bookkeeping: I_n
  // tracks shortness over generations 1..n only.
  for (int g = 1; g <= n; ++g) {
    Generation gen;
    for (int pi = 0; pi < static_cast<int>(prev.size()); ++pi) {
      const auto& parent = prev[pi];
      for (const auto& comp : one_step_preimage_components(map, parent.geom)) {
        subdivide_into(comp, delta, pi, gen.pieces);
      }
    }
    for (auto& piece : gen.pieces) {
      const bool parent_never_long = (g == 1) ? true : prev[piece.parent].never_long;
      piece.never_long = parent_never_long && (piece.length < delta / 3.0);
      if (piece.length >= delta / 3.0) ++gen.count_long;
      if (piece.never_long) ++gen.count_never_long;
      gen.total_length += piece.length;
    }
    prev = gen.pieces;
    rep.generations.push_back(std::move(gen));
  }
  return rep;
}

double pullback_length_analytic(const PiecewiseAffineMap& map, const Segment& W, int n) {
  std::vector<Segment> pieces{W};
  for (int g = 0; g < n; ++g) {
    std::vector<Segment> next;
    for (const auto& s : pieces) {
      auto comps = one_step_preimage_components(map, s);
      next.insert(next.end(), comps.begin(), comps.end());
    }
    pieces = std::move(next);
  }
  double total = 0.0;
  for (const auto& s : pieces) total += s.length();
  return total;
}

GrowthBoundReport growth_bound_checks(const PiecewiseAffineMap& map,
                                      const std::vector<Segment>& samples, int n_max, double delta0,
                                      double p, int K1, const std::vector<std::int64_t>& m0_counts,
                                      double Lambda, double kappa) {
  if (static_cast<int>(m0_counts.size()) < n_max) {
    throw InvalidInput("growth_bound_checks: need #M_0^n counts up to n_max");
  }
  GrowthBoundReport rep;
  rep.rows.resize(n_max);
  for (int n = 1; n <= n_max; ++n) rep.rows[n - 1].n = n;

  for (const auto& seg : samples) {
    StableSegment W{seg};
    auto frag = fragment(map, W, n_max, delta0);
    for (int n = 1; n <= n_max; ++n) {
      const auto& gen = frag.generations[n - 1];
      auto& row = rep.rows[n - 1];
      row.max_never_long = std::max(row.max_never_long, gen.count_never_long);
      row.max_g_over_m =
          std::max(row.max_g_over_m, static_cast<double>(gen.count()) / m0_counts[n - 1]);
      double sum = 0.0;
      const double wlen = W.length();
      for (const auto& piece : gen.pieces) sum += std::pow(piece.length / wlen, 1.0 / p);
      row.max_sum_ratio = std::max(row.max_sum_ratio, sum);
    }
  }

  rep.all_bounds_hold = true;
  rep.C_b = 0.0;
  rep.C_c = 0.0;
  rep.C_d = 1e300;
  for (int n = 1; n <= n_max; ++n) {
    auto& row = rep.rows[n - 1];
    row.bound_a_holds = (row.max_never_long <= std::pow(static_cast<double>(K1), n));
    rep.all_bounds_hold = rep.all_bounds_hold && row.bound_a_holds;
    rep.C_b = std::max(rep.C_b, row.max_g_over_m * delta0);
    const double denom = std::pow(delta0, -1.0 + 1.0 / p) * std::pow(kappa, -n / p) *
                         std::pow(static_cast<double>(m0_counts[n - 1]), 1.0 - 1.0 / p);
    rep.C_c = std::max(rep.C_c, row.max_sum_ratio / denom);
    rep.C_d = std::min(rep.C_d, m0_counts[n - 1] / (delta0 * std::pow(Lambda, n)));
  }
  return rep;
}

LongFractionScan long_fraction_scan(const PiecewiseAffineMap& map,
                                    const std::vector<double>& delta_grid, int n_max,
                                    int lattice_n) {
  LongFractionScan scan;
  scan.best_fraction = 0.0;
  for (double delta : delta_grid) {
    auto grid = stable_segment_grid(map, lattice_n, delta);
    // samples need |W| >= delta/3; the grid trims to that already
    std::vector<double> min_fraction(n_max, 1e300);
    for (const auto& seg : grid) {
      auto frag = fragment(map, StableSegment{seg}, n_max, delta);
      for (int n = 1; n <= n_max; ++n) {
        const auto& gen = frag.generations[n - 1];
        const double f =
            gen.count() == 0 ? 0.0 : static_cast<double>(gen.count_long) / gen.count();
        min_fraction[n - 1] = std::min(min_fraction[n - 1], f);
      }
    }
    for (int n = 1; n <= n_max; ++n) {
      scan.table.push_back({delta, n, min_fraction[n - 1]});
      scan.best_fraction = std::max(scan.best_fraction, min_fraction[n - 1]);
    }
    if (!scan.certified) {
      // smallest n1 with fraction >= 2/3 on the whole tail [n1, n_max]
      int n1 = 0;
      for (int n = n_max; n >= 1; --n) {
        if (min_fraction[n - 1] >= 2.0 / 3.0) {
          n1 = n;
        } else {
          break;
        }
      }
      if (n1 > 0) {
        scan.certified = true;
        scan.delta1 = delta;
        scan.n1 = n1;
      }
    }
  }
  return scan;
}

namespace {

double one_step_sum(const PiecewiseAffineMap& map, const Segment& W, double q) {
  const double wlen = W.length();
  if (wlen <= map.tol().eps_geo) return 0.0;
  double sum = 0.0;
  for (std::size_t b = 0; b < map.branches().size(); ++b) {
    auto piece = map.images()[b].clip_segment(W, map.tol());
    if (!piece) continue;
    const auto& br = map.branches()[b];
    const double tv = piece->length();
    const double v = (br.linear.inverse() * (piece->b - piece->a)).norm();
    if (v <= map.tol().eps_geo) continue;
    sum += std::pow(wlen / v, q) * (tv / wlen);
  }
  return sum;
}

}  // namespace

OneStepExpansion one_step_expansion(const PiecewiseAffineMap& map, double delta0, double q,
                                    int lattice_n) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidInput("one_step_expansion: q must lie in (0, 1]");
  if (delta0 <= 0.0) throw InvalidInput("one_step_expansion: delta0 must be positive");
  OneStepExpansion out;
  for (const auto& seg : stable_segment_grid(map, lattice_n, delta0)) {
    const double s = one_step_sum(map, seg, q);
    if (s > out.rho_hat) {
      out.rho_hat = s;
      out.maximizer = seg;
    }
  }
  out.contracting = out.rho_hat < 1.0;

  // diagnostic sup including segments placed across S^- intersection points,
  // where several branch cuts can hit a single short curve
  out.rho_hat_adversarial = out.rho_hat;
  std::vector<Segment> sminus = map.s_minus();
  if (map.ambient() == Ambient::Torus) {
    const auto base = sminus;
    for (const auto& s : base) {
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          if (dx == 0 && dy == 0) continue;
          sminus.emplace_back(s.a + Vec2(dx, dy), s.b + Vec2(dx, dy), s.origin);
        }
      }
    }
  }
  auto census = vertex_multiplicity_census(sminus, map.tol());
  const Vec2 dir = map.stable_cone().axis;
  for (const auto& mp : census.points) {
    for (double off : {-0.25 * delta0, 0.0, 0.25 * delta0}) {
      const Point mid = mp.where + off * Vec2(-dir.y(), dir.x());
      Segment seg(mid - 0.5 * delta0 * dir, mid + 0.5 * delta0 * dir);
      auto clipped = map.ambient_polygon().clip_segment(seg, map.tol());
      if (!clipped || clipped->length() < delta0 / 3.0) continue;
      out.rho_hat_adversarial = std::max(out.rho_hat_adversarial, one_step_sum(map, *clipped, q));
    }
  }
  return out;
}

UniformGrowthCheck uniform_growth_check(const PiecewiseAffineMap& map, double hstar, double delta1,
                                        int n_lo, int n_hi, int lattice_n) {
  UniformGrowthCheck out;
  auto grid = stable_segment_grid(map, lattice_n, delta1);
  for (const auto& seg : grid) {
    std::vector<Segment> pieces{seg};
    double total = seg.length();
    for (int n = 1; n <= n_hi; ++n) {
      std::vector<Segment> next;
      total = 0.0;
      for (const auto& s : pieces) {
        auto comps = one_step_preimage_components(map, s);
        for (const auto& c : comps) total += c.length();
        next.insert(next.end(), comps.begin(), comps.end());
      }
      pieces = std::move(next);
      if (n >= n_lo) {
        const double scaled = total * std::exp(-hstar * n);
        out.c_lo = std::min(out.c_lo, scaled);
        out.c_hi = std::max(out.c_hi, scaled);
      }
    }
  }
  out.C_bar = std::min(out.c_lo, out.c_hi > 0 ? 1.0 / out.c_hi : 0.0);
  return out;
}

}  // namespace hypent
