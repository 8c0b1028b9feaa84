#ifndef HYPENT_PARTITION_DYNAMICS_HPP
#define HYPENT_PARTITION_DYNAMICS_HPP

#include <cstdint>
#include <vector>

#include "hypent/map_model.hpp"

namespace hypent {

enum class Sign { Plus, Minus };

/// S_n^+ = union of T^{-i} S^+ (i < n), S_n^- = union of T^i S^- (i < n).
struct SingularCurveSet {
  int n = 0;
  Sign sign = Sign::Plus;
  std::vector<Segment> segments;  // iterate recorded in Segment::origin
};

/// Cells of M_{-k}^n, the maximal connected components of
/// M \ (S_n^+ union S_k^-).  Under the convex-affine restriction each cell is
/// convex, so cells are enumerated exactly by itinerary clipping.
struct PartitionRefinement {
  int k = 0, n = 0;
  std::vector<ConvexPolygon> cells;
  std::vector<int> first_branch;        // forward branch of each cell (n >= 1)
  std::vector<Mat2> backward_linear;    // composed T^k restricted to the cell
  std::vector<Vec2> backward_offset;    //   (identity when k = 0)
  std::size_t count = 0;
  long isolated_points = -1;            // vertex-census proxy; -1 = not computed
  std::vector<double> stable_diam, unstable_diam;
};

struct HstarEstimate {
  std::vector<std::int64_t> counts;  // #M_0^n for n = 1..n_max
  double hstar = 0.0;                // least-squares slope of log counts on the window
  int fit_lo = 0, fit_hi = 0;        // window [fit_lo, fit_hi] in n
  double fit_residual = 0.0;         // max |log count - fit| over the window
  double C_sharp_lo = 0.0, C_sharp_hi = 0.0;  // bounds of counts * e^{-n hstar}
  double c1 = 0.0;                   // supermultiplicativity constant
};

struct PartitionCountChecks {
  std::int64_t interior_classes = 0;   // # of P-ring_k^n classes (itinerary classes)
  std::int64_t components = 0;         // # M_{-k}^{k+n} cells
  bool refinement_inequality = false;  // classes <= components
  std::int64_t disconnected_classes = 0;
  long isolated_census = -1;
  std::int64_t isolated_bound = 0;     // 2 (#S^- + #S^+) sum_j #M_0^j
  bool isolated_within_bound = false;
};

/// Default memory guard for cell enumeration.
inline constexpr std::int64_t kDefaultCellCap = 5'000'000;

/// Uniform-grid spatial index over a cell family, for point location and
/// bbox-overlap candidate queries.
class CellIndex {
 public:
  explicit CellIndex(const std::vector<ConvexPolygon>& cells);

  /// Index of the cell whose closure contains p (first hit), or -1.
  int locate(const Point& p, double eps_geo = 1e-12) const;

  /// Indices of cells whose bounding box overlaps [lo, hi].
  void overlap_candidates(const Vec2& lo, const Vec2& hi, std::vector<int>& out) const;

 private:
  const std::vector<ConvexPolygon>* cells_;
  int grid_ = 1;
  Vec2 lo_, size_;
  std::vector<std::vector<int>> buckets_;
};

SingularCurveSet singular_set(const PiecewiseAffineMap& map, int n, Sign sign);

/// M_0^n cell together with the composed affine map T^n restricted to it.
struct TrackedCell {
  ConvexPolygon poly;
  Mat2 M = Mat2::Identity();
  Vec2 v = Vec2::Zero();
};

/// Cells of M_0^n with T^n|_cell = M x + v, built by one tracked pullback
/// step per level (used for periodic-orbit solves and Bowen-ball flows).
std::vector<TrackedCell> forward_cells_tracked(const PiecewiseAffineMap& map, int n,
                                               std::int64_t cell_cap = kDefaultCellCap);

PartitionRefinement refine(const PiecewiseAffineMap& map, int k, int n,
                           std::int64_t cell_cap = kDefaultCellCap);

/// #M_0^n for n = 1..n_max.  When the cap is hit the sequence is truncated
/// and `capped` (if given) is set.
std::vector<std::int64_t> count_sequence(const PiecewiseAffineMap& map, int n_max,
                                         std::int64_t cell_cap = kDefaultCellCap,
                                         bool* capped = nullptr);

/// #M_{-n}^0 via the mirror (pushforward) recursion; used as an independent
/// route for the time-symmetry check.
std::vector<std::int64_t> count_sequence_backward(const PiecewiseAffineMap& map, int n_max,
                                                  std::int64_t cell_cap = kDefaultCellCap);

HstarEstimate estimate_hstar(const std::vector<std::int64_t>& counts, int fit_lo, int fit_hi);

PartitionCountChecks partition_count_checks(const PiecewiseAffineMap& map, int k, int n,
                                       std::int64_t cell_cap = kDefaultCellCap);

}  // namespace hypent

#endif  // HYPENT_PARTITION_DYNAMICS_HPP
