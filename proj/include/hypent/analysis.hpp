#ifndef HYPENT_ANALYSIS_HPP
#define HYPENT_ANALYSIS_HPP

#include <functional>
#include <string>
#include <vector>

#include "hypent/spectral.hpp"

namespace hypent {

/// Adapted metric: Euclidean distance when x and y share a closed domain,
/// 10 diam(M) otherwise.
double bar_distance(const PiecewiseAffineMap& map, const Point& x, const Point& y);

/// Scalar observable given by a small expression descriptor:
///   "const:<v>", "poly:<a>,<b>" (x^a y^b), "cos2pi:<kx>,<ky>", "sin2pi:<kx>,<ky>",
/// plus the shorthands "1", "x", "y".
struct Observable {
  std::string descriptor;
  std::function<double(const Point&)> f;
  double holder_q = 1.0;
  double operator()(const Point& p) const { return f(p); }
};

Observable parse_observable(const std::string& descriptor);

struct CorrelationRow {
  int n = 0;
  double value = 0.0;  // |C(n)|
};

struct CorrelationReport {
  std::vector<CorrelationRow> table;  // n = 0..n_max
  double gamma = 0.0;                 // fitted decay rate over the decreasing range
  int fit_lo = 0, fit_hi = 0;
  bool truncated = false;       // range cut at the noise floor
  bool immediate_decay = false; // every C(n >= 1) already below the floor
};

inline constexpr double kCorrelationFloor = 1e-12;

CorrelationReport correlation_decay(const UlamOperator& op, const DiscreteMeasure& mme,
                                    const Observable& phi, const Observable& psi, int n_max);

struct BowenBallQuery {
  Point center;
  int n = 0;
  double eps = 0.0;
};

struct BowenBallResult {
  BowenBallQuery query;
  double mass_lower = 0.0, mass_upper = 0.0, mass_estimate = 0.0;
  bool inconclusive = false;  // bracket gap > 50% of the upper bound
};

struct BowenScaling {
  Point center;
  double eps = 0.0;
  std::vector<BowenBallResult> per_n;  // n = 0..n_max
  double slope = 0.0;                  // regression of -log(mass) over n >= 1
};

/// Mass of the backward Bowen ball B_n(x, eps) under the discrete measure,
/// bracketed by whole cells and estimated by area fractions.  The ball is
/// built exactly as a union of convex polygons; the eps-disk enters as a
/// regular 64-gon.
BowenScaling bowen_ball_scaling(const PiecewiseAffineMap& map, const UlamOperator& op,
                                const DiscreteMeasure& mme, const Point& center, int n_max,
                                double eps);

/// Deterministic centers whose backward orbits keep clear of the
/// singularity set (rejection by distance, seeded generator).
std::vector<Point> sample_bowen_centers(const PiecewiseAffineMap& map, int count, int n_max,
                                        double min_clearance, std::uint64_t seed);

/// Common slope over a batch of queries (per-center intercepts): the mean of
/// the per-center regression slopes.  Single-center slopes carry an O(1/n)
/// oscillation from the window position inside its cylinder; pooling
/// averages it out.
double pooled_bowen_slope(const std::vector<BowenScaling>& batch);

struct NeighborhoodRow {
  double eps = 0.0;
  double lower = 0.0, upper = 0.0, estimate = 0.0;
};

struct NeighborhoodReport {
  Sign sign = Sign::Plus;
  std::vector<NeighborhoodRow> rows;
  double exponent = 0.0;  // log-log slope of estimate vs eps
  bool positive = false;
  bool refine_suggested = false;  // some bracket gap exceeded 50%
};

NeighborhoodReport singularity_neighborhood(const PiecewiseAffineMap& map, const UlamOperator& op,
                                            const DiscreteMeasure& mme, Sign sign,
                                            const std::vector<double>& eps_list);

struct PeriodicCensus {
  int n = 0;
  std::int64_t fixed_count = 0;  // #Fix(T^n), boundary points deduplicated
  std::int64_t prime_count = 0;  // points of prime period n
  std::vector<Point> representatives;  // one point per prime-period-n orbit
};

std::vector<PeriodicCensus> count_periodic(const PiecewiseAffineMap& map, int n_max,
                                           std::int64_t cell_cap = kDefaultCellCap);

/// Total-variation distance between mu and its pushforward through the
/// unweighted kernel.  This transports volume, so it vanishes (up to
/// discretization) exactly when the measure has volume-proportional
/// conditionals, as for the builtin maps whose mme equals Lebesgue.
double invariance_residual(const UlamOperator& op, const DiscreteMeasure& mme);

/// Total-variation distance between mu and its image under the eigen-chain
/// kernel Q[i|j] = A[i][j] l_i / (lambda l_j); zero at eigen-convergence for
/// the product measure of any map.
double chain_invariance_residual(const UlamOperator& op, const EigenPair& right,
                                 const EigenPair& left, const DiscreteMeasure& mme);

double shannon_entropy(const std::vector<double>& masses);

struct EntropyEstimate {
  std::vector<double> H;         // H_n over M_{-k}^{k+n}, n = 0..n_max
  std::vector<double> H_over_n;  // H_n / n, n = 1..n_max
  double rate = 0.0;             // per-step conditional entropy (the slope of H_n)
  bool sandwich_ok = false;      // H_n <= log #M_{-k}^{k+n} wherever counts fit the cap
  int sandwich_checked = 0;
};

/// Shannon entropy of the measure over the refinements M_{-k}^{k+n}, via the
/// stationary chain of the eigen-pair (exact for Markov partitions): the
/// transition kernel is the h-transform Q[i|j] = A[i][j] l_i / (lambda l_j).
EntropyEstimate entropy_estimate(const PiecewiseAffineMap& map, const UlamOperator& op,
                                 const EigenPair& right, const EigenPair& left,
                                 const DiscreteMeasure& mme, int n_max,
                                 std::int64_t cell_cap = kDefaultCellCap);

}  // namespace hypent

#endif  // HYPENT_ANALYSIS_HPP
