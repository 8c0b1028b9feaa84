#include "hypent/map_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace hypent {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Canonical key of a supporting line, used to merge collinear overlaps.
struct LineBucket {
  Vec2 n;
  double c;
  Vec2 d;        // unit direction along the line
  // parameter intervals [t0, t1] of merged segments along the line
  std::vector<std::pair<double, double>> intervals;
  int origin;
};

std::vector<Segment> merge_collinear_segments(const std::vector<Segment>& segs, double eps) {
  std::vector<LineBucket> buckets;
  for (const auto& s : segs) {
    if (s.length() <= eps) continue;
    Vec2 d = s.direction();
    if (d.x() < 0.0 || (d.x() == 0.0 && d.y() < 0.0)) d = -d;
    Vec2 n(-d.y(), d.x());
    const double c = n.dot(s.a);
    LineBucket* bucket = nullptr;
    for (auto& b : buckets) {
      if ((b.d - d).norm() <= 1e-9 && std::abs(b.c - c) <= std::max(eps, 1e-10)) {
        bucket = &b;
        break;
      }
    }
    if (!bucket) {
      buckets.push_back({n, c, d, {}, s.origin});
      bucket = &buckets.back();
    }
    double t0 = d.dot(s.a), t1 = d.dot(s.b);
    if (t0 > t1) std::swap(t0, t1);
    bucket->intervals.emplace_back(t0, t1);
    bucket->origin = std::min(bucket->origin, s.origin);
  }
  std::vector<Segment> out;
  for (auto& b : buckets) {
    std::sort(b.intervals.begin(), b.intervals.end());
    const double glue = std::max(eps, 1e-10);
    double lo = 0, hi = 0;
    bool open = false;
    auto flush = [&]() {
      if (!open) return;
      const Vec2 base = b.c * b.n;
      out.emplace_back(base + lo * b.d, base + hi * b.d, b.origin);
      open = false;
    };
    for (const auto& [a, c2] : b.intervals) {
      if (!open) {
        lo = a;
        hi = c2;
        open = true;
      } else if (a <= hi + glue) {
        hi = std::max(hi, c2);
      } else {
        flush();
        lo = a;
        hi = c2;
        open = true;
      }
    }
    flush();
  }
  std::sort(out.begin(), out.end(), [](const Segment& a, const Segment& b2) {
    const Point ma = a.midpoint(), mb = b2.midpoint();
    if (ma.x() != mb.x()) return ma.x() < mb.x();
    return ma.y() < mb.y();
  });
  return out;
}

bool on_unit_square_boundary(const Segment& s, double eps) {
  auto on_edge = [&](double coord_a, double coord_b, double v) {
    return std::abs(coord_a - v) <= eps && std::abs(coord_b - v) <= eps;
  };
  return on_edge(s.a.x(), s.b.x(), 0.0) || on_edge(s.a.x(), s.b.x(), 1.0) ||
         on_edge(s.a.y(), s.b.y(), 0.0) || on_edge(s.a.y(), s.b.y(), 1.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// PiecewiseAffineMap

PiecewiseAffineMap::PiecewiseAffineMap(std::string name, Ambient ambient,
                                       std::vector<ConvexPolygon> domains,
                                       std::vector<AffineBranch> branches, Cone stable_cone,
                                       Cone unstable_cone, MapDeclarations decl,
                                       const Tolerances& tol)
    : name_(std::move(name)),
      ambient_(ambient),
      domains_(std::move(domains)),
      branches_(std::move(branches)),
      stable_cone_(stable_cone),
      unstable_cone_(unstable_cone),
      decl_(decl),
      tol_(tol) {
  validate();
  compute_singularity_sets();
}

void PiecewiseAffineMap::validate() {
  if (domains_.empty() || domains_.size() != branches_.size()) {
    throw InvalidInput("map: need one affine branch per domain");
  }
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    branches_[i].domain_index = static_cast<int>(i);
    if (std::abs(branches_[i].linear.determinant()) < 1e-12) {
      throw InvalidInput("map: non-invertible branch " + std::to_string(i));
    }
    Eigen::JacobiSVD<Mat2> svd(branches_[i].linear);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(1);
    if (!(smax > 1.0 && smin < 1.0)) {
      throw CertificationFailure("map: branch " + std::to_string(i) +
                                 " fails the hyperbolicity precheck (singular values " +
                                 std::to_string(smax) + ", " + std::to_string(smin) + ")");
    }
  }

  double total = 0.0;
  for (const auto& d : domains_) {
    if (d.empty() || d.area() <= 0.0) throw InvalidInput("map: degenerate domain polygon");
    total += d.area();
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidInput("map: domains do not cover the ambient (total area " + std::to_string(total) + ")");
  }
  for (std::size_t i = 0; i < domains_.size(); ++i) {
    for (std::size_t j = i + 1; j < domains_.size(); ++j) {
      const auto inter = domains_[i].intersect(domains_[j], tol_);
      if (!inter.empty() && inter.area() > 1e-10) {
        throw InvalidInput("map: domains " + std::to_string(i) + " and " + std::to_string(j) +
                           " overlap with area " + std::to_string(inter.area()));
      }
    }
  }

  images_.clear();
  images_.reserve(domains_.size());
  double image_total = 0.0;
  for (std::size_t i = 0; i < domains_.size(); ++i) {
    images_.push_back(domains_[i].affine_image(branches_[i].linear, branches_[i].offset));
    image_total += images_.back().area();
    Vec2 lo, hi;
    images_.back().bounding_box(lo, hi);
    if (lo.x() < -1e-9 || lo.y() < -1e-9 || hi.x() > 1.0 + 1e-9 || hi.y() > 1.0 + 1e-9) {
      throw InvalidInput("map: image of domain " + std::to_string(i) +
                         " leaves the ambient (torus maps must be pre-cut along mod-1 seams)");
    }
  }
  if (std::abs(image_total - 1.0) > 1e-9) {
    throw InvalidInput("map: images do not cover the ambient (total area " +
                       std::to_string(image_total) + ")");
  }
}

void PiecewiseAffineMap::compute_singularity_sets() {
  const double eps = tol_.eps_geo;
  std::vector<Segment> plus_edges, minus_edges;
  auto collect = [&](const std::vector<ConvexPolygon>& polys, std::vector<Segment>& out) {
    for (const auto& poly : polys) {
      const auto& v = poly.vertices();
      for (std::size_t i = 0; i < v.size(); ++i) {
        Segment e(v[i], v[(i + 1) % v.size()], 0);
        if (ambient_ == Ambient::UnitSquare && on_unit_square_boundary(e, 1e-9)) continue;
        out.push_back(e);
      }
    }
  };
  collect(domains_, plus_edges);
  collect(images_, minus_edges);
  s_plus_ = merge_collinear_segments(plus_edges, eps);
  s_minus_ = merge_collinear_segments(minus_edges, eps);

  // transversality with the invariant cones (uniform, since everything is straight)
  for (const auto& s : s_minus_) {
    if (stable_cone_.contains(s.direction())) {
      throw CertificationFailure("map: an S^- curve is tangent to the stable cone");
    }
  }
  for (const auto& s : s_plus_) {
    if (unstable_cone_.contains(s.direction())) {
      throw CertificationFailure("map: an S^+ curve is tangent to the unstable cone");
    }
  }
}

std::vector<int> PiecewiseAffineMap::domains_containing(const Point& p) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < domains_.size(); ++i) {
    if (domains_[i].contains(p, tol_.eps_geo)) out.push_back(static_cast<int>(i));
  }
  if (out.empty() && ambient_ == Ambient::Torus) {
    // seam points may need wrapped copies
    for (int dx = -1; dx <= 1 && out.empty(); ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        const Point q = p + Vec2(dx, dy);
        for (std::size_t i = 0; i < domains_.size(); ++i) {
          if (domains_[i].contains(q, tol_.eps_geo)) out.push_back(static_cast<int>(i));
        }
        if (!out.empty()) break;
      }
    }
  }
  return out;
}

Point PiecewiseAffineMap::wrap(const Point& p) const {
  if (ambient_ != Ambient::Torus) return p;
  auto w = [](double x) {
    double r = x - std::floor(x);
    if (r > 1.0 - 1e-9) r = 0.0;
    if (r < 1e-15) r = 0.0;
    return r;
  };
  return {w(p.x()), w(p.y())};
}

std::vector<Point> PiecewiseAffineMap::forward(const Point& p) const {
  std::vector<Point> out;
  auto push_unique = [&](const Point& q) {
    for (const auto& r : out) {
      if ((r - q).norm() <= 10 * tol_.eps_geo) return;
    }
    out.push_back(q);
  };
  for (std::size_t i = 0; i < domains_.size(); ++i) {
    Point q = p;
    if (ambient_ == Ambient::Torus && !domains_[i].contains(q, tol_.eps_geo)) {
      bool found = false;
      for (int dx = -1; dx <= 1 && !found; ++dx) {
        for (int dy = -1; dy <= 1 && !found; ++dy) {
          const Point cand = p + Vec2(dx, dy);
          if (domains_[i].contains(cand, tol_.eps_geo)) {
            q = cand;
            found = true;
          }
        }
      }
      if (!found) continue;
    } else if (!domains_[i].contains(q, tol_.eps_geo)) {
      continue;
    }
    push_unique(wrap(branches_[i].apply(q)));
  }
  return out;
}

std::vector<Point> PiecewiseAffineMap::inverse(const Point& p) const {
  std::vector<Point> out;
  auto push_unique = [&](const Point& q) {
    for (const auto& r : out) {
      if ((r - q).norm() <= 10 * tol_.eps_geo) return;
    }
    out.push_back(q);
  };
  for (std::size_t i = 0; i < images_.size(); ++i) {
    Point q = p;
    bool inside = images_[i].contains(q, tol_.eps_geo);
    if (!inside && ambient_ == Ambient::Torus) {
      for (int dx = -1; dx <= 1 && !inside; ++dx) {
        for (int dy = -1; dy <= 1 && !inside; ++dy) {
          const Point cand = p + Vec2(dx, dy);
          if (images_[i].contains(cand, tol_.eps_geo)) {
            q = cand;
            inside = true;
          }
        }
      }
    }
    if (!inside) continue;
    push_unique(wrap(branches_[i].apply_inverse(q)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Builtins and loading

PiecewiseAffineMap make_baker3(const Tolerances& tol) {
  std::vector<ConvexPolygon> domains;
  std::vector<AffineBranch> branches;
  for (int i = 0; i < 3; ++i) {
    domains.push_back(ConvexPolygon::rectangle(i / 3.0, 0.0, (i + 1) / 3.0, 1.0));
    AffineBranch b;
    b.linear << 3.0, 0.0, 0.0, 1.0 / 3.0;
    b.offset = Vec2(-i, i / 3.0);
    branches.push_back(b);
  }
  return PiecewiseAffineMap("baker3", Ambient::UnitSquare, std::move(domains), std::move(branches),
                            Cone::from_angle_deg(90.0, 10.0), Cone::from_angle_deg(0.0, 10.0),
                            {true, true}, tol);
}

PiecewiseAffineMap make_baker2u(double beta, const Tolerances& tol) {
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidInput("baker2u: beta must lie in (0,1)");
  std::vector<ConvexPolygon> domains;
  std::vector<AffineBranch> branches;
  domains.push_back(ConvexPolygon::rectangle(0.0, 0.0, beta, 1.0));
  AffineBranch b0;
  b0.linear << 1.0 / beta, 0.0, 0.0, beta;
  b0.offset = Vec2(0.0, 0.0);
  branches.push_back(b0);
  domains.push_back(ConvexPolygon::rectangle(beta, 0.0, 1.0, 1.0));
  AffineBranch b1;
  b1.linear << 1.0 / (1.0 - beta), 0.0, 0.0, 1.0 - beta;
  b1.offset = Vec2(-beta / (1.0 - beta), beta);
  branches.push_back(b1);
  std::ostringstream name;
  name << "baker2u:" << beta;
  return PiecewiseAffineMap(name.str(), Ambient::UnitSquare, std::move(domains), std::move(branches),
                            Cone::from_angle_deg(90.0, 10.0), Cone::from_angle_deg(0.0, 10.0),
                            {true, true}, tol);
}

namespace {

// Cuts (domains, branches) of a torus map along mod-1 seams so that every
// branch maps its convex domain into the fundamental domain.
void recut_torus_branches(std::vector<ConvexPolygon>& domains, std::vector<AffineBranch>& branches,
                          const Tolerances& tol) {
  std::vector<ConvexPolygon> new_domains;
  std::vector<AffineBranch> new_branches;
  const ConvexPolygon square = ConvexPolygon::unit_square();
  for (std::size_t i = 0; i < domains.size(); ++i) {
    const Mat2& M = branches[i].linear;
    const Vec2& off = branches[i].offset;
    const ConvexPolygon image = domains[i].affine_image(M, off);
    Vec2 lo, hi;
    image.bounding_box(lo, hi);
    for (int tx = static_cast<int>(std::floor(lo.x() - 0.5)); tx <= static_cast<int>(std::ceil(hi.x() + 0.5)); ++tx) {
      for (int ty = static_cast<int>(std::floor(lo.y() - 0.5)); ty <= static_cast<int>(std::ceil(hi.y() + 0.5)); ++ty) {
        const Vec2 t(tx, ty);
        ConvexPolygon clipped = image.intersect(
            ConvexPolygon::rectangle(tx, ty, tx + 1.0, ty + 1.0), tol);
        if (clipped.empty() || clipped.area() < 1e-12) continue;
        // pull the clipped image back to get the convex subdomain
        const Mat2 Minv = M.inverse();
        ConvexPolygon piece = clipped.affine_image(Minv, -Minv * off);
        if (piece.empty() || piece.area() < 1e-12) continue;
        AffineBranch nb;
        nb.linear = M;
        nb.offset = off - t;
        new_domains.push_back(std::move(piece));
        new_branches.push_back(nb);
      }
    }
  }
  // deterministic order
  std::vector<std::size_t> idx(new_domains.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const Point ca = new_domains[a].centroid(), cb = new_domains[b].centroid();
    if (ca.x() != cb.x()) return ca.x() < cb.x();
    return ca.y() < cb.y();
  });
  std::vector<ConvexPolygon> d2;
  std::vector<AffineBranch> b2;
  for (auto i : idx) {
    d2.push_back(std::move(new_domains[i]));
    b2.push_back(new_branches[i]);
  }
  domains = std::move(d2);
  branches = std::move(b2);
}

}  // namespace

PiecewiseAffineMap make_cat(const Tolerances& tol) {
  std::vector<ConvexPolygon> domains{ConvexPolygon::unit_square()};
  AffineBranch b;
  b.linear << 2.0, 1.0, 1.0, 1.0;
  b.offset = Vec2::Zero();
  std::vector<AffineBranch> branches{b};
  recut_torus_branches(domains, branches, tol);

  const double sqrt5 = std::sqrt(5.0);
  const Vec2 unstable_dir = Vec2(1.0, (sqrt5 - 1.0) / 2.0).normalized();
  const Vec2 stable_dir = Vec2(1.0, -(1.0 + sqrt5) / 2.0).normalized();
  return PiecewiseAffineMap("cat", Ambient::Torus, std::move(domains), std::move(branches),
                            Cone(stable_dir, 10.0 * kPi / 180.0),
                            Cone(unstable_dir, 10.0 * kPi / 180.0), {true, true}, tol);
}

std::vector<std::pair<std::string, std::string>> list_builtins() {
  return {
      {"baker3", "3-branch baker map: T(x,y) = (3x - i, (y + i)/3) on vertical thirds"},
      {"baker2u:<beta>", "2-branch unbalanced baker map, e.g. baker2u:0.4"},
      {"cat", "hyperbolic toral automorphism [[2,1],[1,1]] mod 1, pre-cut along mod-1 seams"},
  };
}

PiecewiseAffineMap load_map_from_json(const std::string& json_text, const Tolerances& tol) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    throw InvalidInput(std::string("map config: JSON parse error: ") + e.what());
  }
  try {
    const std::string name = j.value("name", "custom");
    const std::string amb = j.value("ambient", "unit_square");
    Ambient ambient = Ambient::UnitSquare;
    if (amb == "torus") {
      ambient = Ambient::Torus;
    } else if (amb != "unit_square") {
      throw InvalidInput("map config: ambient must be unit_square or torus");
    }
    std::vector<ConvexPolygon> domains;
    for (const auto& poly : j.at("domains")) {
      std::vector<Point> verts;
      for (const auto& v : poly) verts.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
      domains.emplace_back(std::move(verts), tol);
    }
    std::vector<AffineBranch> branches(domains.size());
    for (const auto& bj : j.at("branches")) {
      const int d = bj.at("domain").get<int>();
      if (d < 0 || d >= static_cast<int>(domains.size())) {
        throw InvalidInput("map config: branch domain index out of range");
      }
      AffineBranch b;
      b.domain_index = d;
      const auto& lin = bj.at("linear");
      b.linear << lin.at(0).at(0).get<double>(), lin.at(0).at(1).get<double>(),
          lin.at(1).at(0).get<double>(), lin.at(1).at(1).get<double>();
      b.offset = Vec2(bj.at("offset").at(0).get<double>(), bj.at("offset").at(1).get<double>());
      branches[d] = b;
    }
    const auto& cones = j.at("cones");
    const double hw = cones.value("half_width_deg", 10.0);
    Cone stable = Cone::from_angle_deg(cones.at("stable_axis_deg").get<double>(), hw);
    Cone unstable = Cone::from_angle_deg(cones.at("unstable_axis_deg").get<double>(), hw);
    MapDeclarations decl;
    if (j.contains("declarations")) {
      decl.mixing = j["declarations"].value("mixing", false);
      decl.smooth_srb = j["declarations"].value("smooth_srb", false);
    }
    if (ambient == Ambient::Torus) recut_torus_branches(domains, branches, tol);
    return PiecewiseAffineMap(name, ambient, std::move(domains), std::move(branches), stable,
                              unstable, decl, tol);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("map config: missing or malformed field: ") + e.what());
  }
}

PiecewiseAffineMap load_map(const std::string& name_or_path, const Tolerances& tol) {
  if (name_or_path == "baker3") return make_baker3(tol);
  if (name_or_path == "cat") return make_cat(tol);
  if (name_or_path.rfind("baker2u:", 0) == 0) {
    const double beta = std::stod(name_or_path.substr(8));
    return make_baker2u(beta, tol);
  }
  std::ifstream in(name_or_path);
  if (!in) throw InvalidInput("load_map: unknown builtin and unreadable path: " + name_or_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_map_from_json(ss.str(), tol);
}

// ---------------------------------------------------------------------------
// Certificates

void cone_image_norm_extrema(const Mat2& M, const Cone& cone, double& min_norm, double& max_norm) {
  const Mat2 G = M.transpose() * M;
  const double mean = 0.5 * (G(0, 0) + G(1, 1));
  const double a = 0.5 * (G(0, 0) - G(1, 1));
  const double b = G(0, 1);
  const double R = std::hypot(a, b);
  const double phi = std::atan2(b, a);
  const double t0 = cone.axis_angle() - cone.half_width;
  const double t1 = cone.axis_angle() + cone.half_width;
  auto f = [&](double th) { return mean + R * std::cos(2.0 * th - phi); };
  double fmin = std::min(f(t0), f(t1));
  double fmax = std::max(f(t0), f(t1));
  // interior critical points: 2 th - phi = k pi
  for (int k = -4; k <= 4; ++k) {
    const double th = 0.5 * (phi + k * kPi);
    if (th > t0 && th < t1) {
      fmin = std::min(fmin, f(th));
      fmax = std::max(fmax, f(th));
    }
  }
  min_norm = std::sqrt(std::max(fmin, 0.0));
  max_norm = std::sqrt(std::max(fmax, 0.0));
}

namespace {

// Angular slack of the image of `cone` under M inside `target`; positive
// means strictly inside.  Boundary rays plus a few interior rays are mapped.
double cone_invariance_margin(const Mat2& M, const Cone& cone, const Cone& target) {
  double margin = 1e300;
  for (int i = -2; i <= 2; ++i) {
    const double th = cone.axis_angle() + cone.half_width * (i / 2.0);
    const Vec2 v(std::cos(th), std::sin(th));
    margin = std::min(margin, target.angular_margin(M * v));
  }
  return margin;
}

}  // namespace

HyperbolicityCert hyperbolicity_certificate(const PiecewiseAffineMap& map) {
  HyperbolicityCert cert;
  double lam_u = 1e300, lam_s = 1e300, kap = 1e300, kap_hi = 0.0;
  double lam_axis = 1e300, kap_axis = 0.0;
  double margin = 1e300;
  const Cone& cu = map.unstable_cone();
  const Cone& cs = map.stable_cone();
  for (const auto& b : map.branches()) {
    double mn, mx;
    cone_image_norm_extrema(b.linear, cu, mn, mx);
    lam_u = std::min(lam_u, mn);
    const Mat2 inv = b.linear.inverse();
    cone_image_norm_extrema(inv, cs, mn, mx);
    lam_s = std::min(lam_s, mn);
    cone_image_norm_extrema(b.linear, cs, mn, mx);
    kap = std::min(kap, mn);
    kap_hi = std::max(kap_hi, mx);
    lam_axis = std::min(lam_axis, (b.linear * cu.axis).norm());
    kap_axis = std::max(kap_axis, (b.linear * cs.axis).norm());
    margin = std::min(margin, cone_invariance_margin(b.linear, cu, cu));
    margin = std::min(margin, cone_invariance_margin(inv, cs, cs));
  }
  cert.Lambda = std::min(lam_u, lam_s);
  cert.kappa = kap;
  cert.kappa_strongest = kap_hi;
  cert.lambda_axis = lam_axis;
  cert.kappa_axis = kap_axis;
  cert.invariance_margin_rad = margin;
  cert.unstable_invariant = cert.stable_invariant = (margin > 0.0);
  cert.C_e = 1.0;  // affine branches, Lambda already the cone infimum
  cert.C_d = 0.0;  // affine branches have constant Jacobians
  if (!cert.certified()) {
    throw CertificationFailure("hyperbolicity certificate failed for map " + map.name() +
                               " (Lambda=" + std::to_string(cert.Lambda) +
                               ", kappa=" + std::to_string(cert.kappa) +
                               ", margin=" + std::to_string(margin) + ")");
  }
  return cert;
}

// ---------------------------------------------------------------------------
// Segment dynamics primitives shared by the certificate and curve modules

std::vector<Segment> one_step_preimage_components(const PiecewiseAffineMap& map, const Segment& s) {
  std::vector<Segment> out;
  for (std::size_t b = 0; b < map.branches().size(); ++b) {
    auto piece = map.images()[b].clip_segment(s, map.tol());
    if (!piece) continue;
    const auto& br = map.branches()[b];
    Segment pre(br.apply_inverse(piece->a), br.apply_inverse(piece->b), s.origin + 1);
    if (pre.length() > map.tol().eps_geo) out.push_back(pre);
  }
  return out;
}

std::vector<Segment> pullback_segments(const PiecewiseAffineMap& map, const std::vector<Segment>& segs) {
  std::vector<Segment> out;
  for (const auto& s : segs) {
    auto pieces = one_step_preimage_components(map, s);
    out.insert(out.end(), pieces.begin(), pieces.end());
  }
  return out;
}

std::vector<Segment> pushforward_segments(const PiecewiseAffineMap& map, const std::vector<Segment>& segs) {
  std::vector<Segment> out;
  for (const auto& s : segs) {
    for (std::size_t b = 0; b < map.branches().size(); ++b) {
      auto piece = map.domains()[b].clip_segment(s, map.tol());
      if (!piece) continue;
      const auto& br = map.branches()[b];
      Segment img(br.apply(piece->a), br.apply(piece->b), s.origin + 1);
      if (img.length() > map.tol().eps_geo) out.push_back(img);
    }
  }
  return out;
}

std::vector<Segment> stable_segment_grid(const PiecewiseAffineMap& map, int lattice_n, double delta0) {
  std::vector<Segment> out;
  const Vec2 dir = map.stable_cone().axis;
  for (int i = 0; i < lattice_n; ++i) {
    for (int j = 0; j < lattice_n; ++j) {
      const Point mid((i + 0.5) / lattice_n, (j + 0.5) / lattice_n);
      Segment s(mid - 0.5 * delta0 * dir, mid + 0.5 * delta0 * dir, 0);
      auto clipped = map.ambient_polygon().clip_segment(s, map.tol());
      if (!clipped) continue;
      if (clipped->length() < delta0 / 3.0) continue;
      out.push_back(*clipped);
    }
  }
  return out;
}

ComplexityCert complexity_certificate(const PiecewiseAffineMap& map, const HyperbolicityCert& hyp,
                                      double delta0, const std::vector<double>& alpha0_grid,
                                      int n_max) {
  ComplexityCert cert;
  cert.delta0 = delta0;

  // K(n): census of curve coincidences in S_n^+ and S_n^-  (torus censuses use
  // wrapped copies so seam crossings are seen)
  const bool torus = (map.ambient() == Ambient::Torus);
  auto census_max = [&](std::vector<Segment> segs) {
    if (torus) {
      std::vector<Segment> copies = segs;
      for (const auto& s : segs) {
        for (int dx = -1; dx <= 1; ++dx) {
          for (int dy = -1; dy <= 1; ++dy) {
            if (dx == 0 && dy == 0) continue;
            copies.emplace_back(s.a + Vec2(dx, dy), s.b + Vec2(dx, dy), s.origin);
          }
        }
      }
      auto census = vertex_multiplicity_census(copies, map.tol());
      return census.max_multiplicity;
    }
    return vertex_multiplicity_census(segs, map.tol()).max_multiplicity;
  };

  std::vector<Segment> sp = map.s_plus();
  std::vector<Segment> sm = map.s_minus();
  std::vector<Segment> acc_p = sp, acc_m = sm;
  cert.K_of_n.resize(n_max);
  for (int n = 1; n <= n_max; ++n) {
    if (n > 1) {
      sp = pullback_segments(map, sp);
      sm = pushforward_segments(map, sm);
      acc_p.insert(acc_p.end(), sp.begin(), sp.end());
      acc_m.insert(acc_m.end(), sm.begin(), sm.end());
    }
    cert.K_of_n[n - 1] = std::max(census_max(acc_p), census_max(acc_m));
  }

  // K_1(delta0) and K_m over a deterministic stable-segment grid
  const auto grid = stable_segment_grid(map, 15, delta0);
  cert.K_m.assign(n_max, 1);
  for (const auto& w : grid) {
    std::vector<Segment> pieces{w};
    for (int m = 1; m <= n_max; ++m) {
      pieces = pullback_segments(map, pieces);
      cert.K_m[m - 1] = std::max<int>(cert.K_m[m - 1], static_cast<int>(pieces.size()));
      if (pieces.size() > 4096) break;  // enough to dominate the certificate
    }
  }
  cert.K1_delta0 = cert.K_m.empty() ? 1 : cert.K_m[0];

  // (P1) search over the alpha0 grid
  cert.best_margin = 0.0;
  int best_n0 = 0;
  double best_alpha = 0.0, best_rho = 1e300;
  for (double a : alpha0_grid) {
    const double base = hyp.Lambda * std::pow(hyp.kappa, a);
    if (base <= 1.0) continue;
    for (int n = 1; n <= n_max; ++n) {
      const double lhs = std::pow(base, n);
      const double margin = lhs / cert.K_of_n[n - 1];
      cert.best_margin = std::max(cert.best_margin, margin);
      if (margin > 1.0) {
        // rho = K1 * Lambda^{-1} * kappa^{-alpha0}
        const double rho_val = cert.K1_delta0 / hyp.Lambda * std::pow(hyp.kappa, -a);
        if (best_n0 == 0 || n < best_n0 || (n == best_n0 && rho_val < best_rho)) {
          best_n0 = n;
          best_alpha = a;
          best_rho = rho_val;
        }
        break;
      }
    }
  }
  if (best_n0 > 0) {
    cert.p1_holds = true;
    cert.n0 = best_n0;
    cert.alpha0 = best_alpha;
    cert.rho = best_rho;
  } else {
    cert.p1_holds = false;
    cert.n0 = 0;
    cert.alpha0 = alpha0_grid.empty() ? 0.0 : alpha0_grid.front();
    cert.rho = cert.K1_delta0 / hyp.Lambda * std::pow(hyp.kappa, -cert.alpha0);
  }

  // least iterate m with K_m Lambda^{-m} kappa^{-alpha0 m} < 1, using the
  // short-segment bound K_m <= K(m) + 1 (valid once delta0 is small enough;
  // the grid values cert.K_m at the given delta0 stay available as diagnostics)
  cert.min_iterate_m = 0;
  for (int m = 1; m <= n_max; ++m) {
    const double rho_m = (cert.K_of_n[m - 1] + 1) * std::pow(hyp.Lambda, -m) *
                         std::pow(hyp.kappa, -cert.alpha0 * m);
    if (rho_m < 1.0) {
      cert.min_iterate_m = m;
      break;
    }
  }
  return cert;
}

double stable_jacobian(const PiecewiseAffineMap& map, int branch_index) {
  const auto& b = map.branches().at(branch_index);
  return (b.linear * map.stable_cone().axis).norm();
}

}  // namespace hypent
