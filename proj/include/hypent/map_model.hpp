#ifndef HYPENT_MAP_MODEL_HPP
#define HYPENT_MAP_MODEL_HPP

#include <string>
#include <vector>

#include "hypent/geom2d.hpp"

namespace hypent {

enum class Ambient { UnitSquare, Torus };

/// One affine branch T(x) = linear * x + offset on its convex domain.
struct AffineBranch {
  int domain_index = 0;
  Mat2 linear = Mat2::Identity();
  Vec2 offset = Vec2::Zero();

  Vec2 apply(const Vec2& p) const { return linear * p + offset; }
  Vec2 apply_inverse(const Vec2& p) const { return linear.inverse() * (p - offset); }
};

struct MapDeclarations {
  bool mixing = false;      // (topological mixing, declared per map)
  bool smooth_srb = false;  // smooth SRB measure, declared per map
};

/// Certified hyperbolicity data.  `Lambda` and `kappa` are exact extrema of
/// |Mv|/|v| over the cone's angular interval (closed-form for a quadratic
/// form on the circle); `lambda_axis`/`kappa_axis` are the rates on the cone
/// axis itself, which coincide with the eigen-rates for the builtin maps.
struct HyperbolicityCert {
  double Lambda = 0.0;        // min expansion over unstable cone and of DT^{-1} over stable cone
  double kappa = 0.0;         // inf |DT v|/|v| over the stable cone
  double kappa_strongest = 0.0;  // sup over the stable cone, for diagnostics
  double lambda_axis = 0.0;
  double kappa_axis = 0.0;
  bool unstable_invariant = false;
  bool stable_invariant = false;
  double invariance_margin_rad = 0.0;  // minimal angular slack of mapped cone rays
  double C_e = 0.0;                    // |T^{-n}W| >= C_e Lambda^n |W|; 1 for affine branches
  double C_d = 0.0;                    // distortion constant; exactly 0 for affine branches
  bool certified() const { return Lambda > 1.0 && kappa > 0.0 && kappa < 1.0 && unstable_invariant && stable_invariant; }
};

/// Complexity certificate for condition (P1) and the one-step contraction
/// coefficient rho = K1 / (Lambda kappa^{alpha0}).
struct ComplexityCert {
  std::vector<int> K_of_n;    // K(1..n_max), census of S_n^+/S_n^- crossings
  int K1_delta0 = 0;          // max #components of T^{-1}W over the segment grid
  double delta0 = 0.0;
  double alpha0 = 0.0;
  int n0 = 0;                 // smallest iterate certifying (P1) on the grid
  double rho = 0.0;           // K1 * Lambda^{-1} * kappa^{-alpha0}
  int min_iterate_m = 0;      // least m with K_m Lambda^{-m} kappa^{-alpha0 m} < 1 (0 = none found)
  std::vector<int> K_m;       // grid #components of T^{-m}W, m = 1..n_max
  bool p1_holds = false;
  double best_margin = 0.0;   // largest (Lambda kappa^a)^n / K(n) found (diagnostic)
};

class PiecewiseAffineMap {
 public:
  PiecewiseAffineMap() = default;
  PiecewiseAffineMap(std::string name, Ambient ambient, std::vector<ConvexPolygon> domains,
                     std::vector<AffineBranch> branches, Cone stable_cone, Cone unstable_cone,
                     MapDeclarations decl, const Tolerances& tol = {});

  const std::string& name() const { return name_; }
  Ambient ambient() const { return ambient_; }
  const std::vector<ConvexPolygon>& domains() const { return domains_; }
  const std::vector<AffineBranch>& branches() const { return branches_; }
  const std::vector<ConvexPolygon>& images() const { return images_; }  // M_i^- = T(M_i^+)
  const Cone& stable_cone() const { return stable_cone_; }
  const Cone& unstable_cone() const { return unstable_cone_; }
  const std::vector<Segment>& s_plus() const { return s_plus_; }    // interior singularity curves of T
  const std::vector<Segment>& s_minus() const { return s_minus_; }  // interior singularity curves of T^{-1}
  const MapDeclarations& declarations() const { return decl_; }
  const Tolerances& tol() const { return tol_; }

  ConvexPolygon ambient_polygon() const { return ConvexPolygon::unit_square(); }
  double ambient_diameter() const { return std::sqrt(2.0); }

  /// Indices of branches whose closed domain contains p.
  std::vector<int> domains_containing(const Point& p) const;

  /// Image set of p (multi-valued within eps_geo of S^+, one per adjacent branch).
  std::vector<Point> forward(const Point& p) const;

  /// Preimage set of p (multi-valued within eps_geo of S^-).
  std::vector<Point> inverse(const Point& p) const;

  /// Wraps a torus point into the fundamental domain [0,1)^2 (identity on the square).
  Point wrap(const Point& p) const;

 private:
  void validate();
  void compute_singularity_sets();

  std::string name_;
  Ambient ambient_ = Ambient::UnitSquare;
  std::vector<ConvexPolygon> domains_;
  std::vector<AffineBranch> branches_;
  std::vector<ConvexPolygon> images_;
  Cone stable_cone_, unstable_cone_;
  std::vector<Segment> s_plus_, s_minus_;
  MapDeclarations decl_;
  Tolerances tol_;
};

/// Parses a map-definition document (JSON text, see README for the schema).
PiecewiseAffineMap load_map_from_json(const std::string& json_text, const Tolerances& tol = {});

/// Loads a builtin by name ("baker3", "cat", "baker2u:<beta>") or a config
/// file path.
PiecewiseAffineMap load_map(const std::string& name_or_path, const Tolerances& tol = {});

std::vector<std::pair<std::string, std::string>> list_builtins();

PiecewiseAffineMap make_baker3(const Tolerances& tol = {});
PiecewiseAffineMap make_baker2u(double beta, const Tolerances& tol = {});
PiecewiseAffineMap make_cat(const Tolerances& tol = {});

/// Maximal connected components of T^{-1}(s) for a straight segment s
/// (cut where s crosses S^-), plus the bulk pullback/pushforward helpers
/// used for singularity-set iterates.
std::vector<Segment> one_step_preimage_components(const PiecewiseAffineMap& map, const Segment& s);
std::vector<Segment> pullback_segments(const PiecewiseAffineMap& map, const std::vector<Segment>& segs);
std::vector<Segment> pushforward_segments(const PiecewiseAffineMap& map, const std::vector<Segment>& segs);

/// Deterministic lattice of stable segments (midpoints on an n x n lattice,
/// direction = stable cone axis, length delta0, trimmed to the ambient).
std::vector<Segment> stable_segment_grid(const PiecewiseAffineMap& map, int lattice_n, double delta0);

/// Exact extrema of |Mv| over unit v in the cone's angular interval.
void cone_image_norm_extrema(const Mat2& M, const Cone& cone, double& min_norm, double& max_norm);

HyperbolicityCert hyperbolicity_certificate(const PiecewiseAffineMap& map);

ComplexityCert complexity_certificate(const PiecewiseAffineMap& map, const HyperbolicityCert& hyp,
                                      double delta0, const std::vector<double>& alpha0_grid,
                                      int n_max);

/// Stable Jacobian of the branch containing a cell: contraction rate of the
/// branch matrix along the stable cone axis (exact when every branch shares
/// the stable eigendirection, as all builtins do).
double stable_jacobian(const PiecewiseAffineMap& map, int branch_index);

}  // namespace hypent

#endif  // HYPENT_MAP_MODEL_HPP
