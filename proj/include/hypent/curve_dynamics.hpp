#ifndef HYPENT_CURVE_DYNAMICS_HPP
#define HYPENT_CURVE_DYNAMICS_HPP

#include <cstdint>
#include <vector>

#include "hypent/map_model.hpp"

namespace hypent {

/// Straight stable curve: direction inside the stable cone, length <= delta0.
struct StableSegment {
  Segment geom;
  double length() const { return geom.length(); }
};

struct FragmentPiece {
  Segment geom;
  double length = 0.0;
  int parent = -1;         // index into the previous generation
  bool never_long = false; // all ancestors (and the piece itself) shorter than delta/3
};

struct Generation {
  std::vector<FragmentPiece> pieces;
  std::int64_t count() const { return static_cast<std::int64_t>(pieces.size()); }
  std::int64_t count_long = 0;        // length >= delta/3
  std::int64_t count_never_long = 0;  // the I_n family
  double total_length = 0.0;
};

/// Generations G_1..G_n of T^{-n}W: cut at S^- crossings, long pieces
/// subdivided into equal parts of length in [delta/2, delta].
struct FragmentationReport {
  StableSegment origin;
  double delta = 0.0;
  std::vector<Generation> generations;  // index g-1 holds G_g
};

FragmentationReport fragment(const PiecewiseAffineMap& map, const StableSegment& W, int n,
                             double delta);

struct GrowthBoundRow {
  int n = 0;
  std::int64_t max_never_long = 0;  // max #I_n over samples
  double max_g_over_m = 0.0;        // max #G_n / #M_0^n
  double max_sum_ratio = 0.0;       // max of sum (|W_i|/|W|)^{1/p}
  bool bound_a_holds = false;       // #I_n <= K1^n for every sample
};

struct GrowthBoundReport {
  std::vector<GrowthBoundRow> rows;  // n = 1..n_max
  double C_b = 0.0;                  // implied constant of #G_n <= C delta0^{-1} #M_0^n
  double C_c = 0.0;                  // implied constant of the 1/p-sum bound
  double C_d = 0.0;                  // implied constant of #M_0^n >= C delta0 Lambda^n
  bool all_bounds_hold = false;
};

GrowthBoundReport growth_bound_checks(const PiecewiseAffineMap& map,
                                      const std::vector<Segment>& samples, int n_max, double delta0,
                                      double p, int K1, const std::vector<std::int64_t>& m0_counts,
                                      double Lambda, double kappa);

struct LongFractionRow {
  double delta = 0.0;
  int n = 0;
  double min_fraction = 0.0;  // min over samples of #L_n / #G_n
};

struct LongFractionScan {
  std::vector<LongFractionRow> table;
  double delta1 = 0.0;  // certified scale (0 when none certified)
  int n1 = 0;           // smallest n with fraction >= 2/3 for all n in [n1, n_max]
  bool certified = false;
  double best_fraction = 0.0;
};

LongFractionScan long_fraction_scan(const PiecewiseAffineMap& map,
                                    const std::vector<double>& delta_grid, int n_max,
                                    int lattice_n);

struct OneStepExpansion {
  double rho_hat = 0.0;  // sup over sampled W of sum (|W|/|V_i|)^q |TV_i|/|W|
  Segment maximizer;
  bool contracting = false;  // rho_hat < 1
  double rho_hat_adversarial = 0.0;  // same sup including segments straddling S^- vertices
};

OneStepExpansion one_step_expansion(const PiecewiseAffineMap& map, double delta0, double q,
                                    int lattice_n);

struct UniformGrowthCheck {
  double c_lo = 1e300;  // min over samples/n of |T^{-n}W| e^{-n h*}
  double c_hi = 0.0;    // max of the same
  double C_bar = 0.0;   // min(c_lo, 1/c_hi)
};

UniformGrowthCheck uniform_growth_check(const PiecewiseAffineMap& map, double hstar, double delta1,
                                        int n_lo, int n_hi, int lattice_n);

/// Total length of T^{-n}W computed analytically from per-branch expansion
/// factors, with no subdivision; the independent route for the length
/// conservation check.
double pullback_length_analytic(const PiecewiseAffineMap& map, const Segment& W, int n);

}  // namespace hypent

#endif  // HYPENT_CURVE_DYNAMICS_HPP
