#ifndef HYPENT_SPECTRAL_HPP
#define HYPENT_SPECTRAL_HPP

#include <Eigen/Sparse>
#include <cstdint>
#include <string>
#include <vector>

#include "hypent/partition_dynamics.hpp"

namespace hypent {

using SparseMat = Eigen::SparseMatrix<double>;

/// Finite-dimensional surrogate of the weighted transfer operator on the
/// cells of M_{-k}^k.  A[i][j] = (1/J^s T on cell j) * Area(C_j cap T^{-1} C_i)
/// / Area(C_j); P is the same without the weight (column-stochastic).
struct UlamOperator {
  int depth = 0;
  PartitionRefinement cells;
  SparseMat A;                      // weighted
  SparseMat P;                      // unweighted transition fractions
  std::vector<double> js_of_cell;   // J^s T per cell (constant per branch)
  double max_column_defect = 0.0;   // worst |column sum of P - 1|
  std::size_t size() const { return cells.count; }
};

enum class EigMode { Power, Cesaro };

struct Normalization {
  enum Tag { Probability, EigenNormalized } tag = Probability;
};

struct DiscreteMeasure {
  std::vector<double> masses;
  int depth = 0;
  Normalization::Tag tag = Normalization::Probability;
  double total() const {
    double s = 0;
    for (double m : masses) s += m;
    return s;
  }
};

struct EigenPair {
  double lambda = 0.0;
  DiscreteMeasure vec;
  double residual = 0.0;  // ||A v - lambda v||_1 / lambda
  int iterations = 0;
  bool converged = false;
};

/// Assembly is parallel over columns when threads > 1; per-chunk outputs are
/// concatenated in column order, so results are identical at any thread count.
UlamOperator build_ulam(const PiecewiseAffineMap& map, int depth,
                        std::int64_t cell_cap = kDefaultCellCap, int threads = 1);

EigenPair leading_right(const UlamOperator& op, EigMode mode, double tol, int max_iter = 20000);

/// Left eigenvector of A (right eigenvector of A^T), seeded with a strictly
/// positive measure; Lebesgue cell masses stand in for the SRB seed.
EigenPair leading_left(const UlamOperator& op, const DiscreteMeasure& seed, double tol,
                       int max_iter = 20000);

DiscreteMeasure lebesgue_masses(const UlamOperator& op);

/// Product measure mu*_i = nu_i * nutilde_i / sum_j nu_j nutilde_j.
DiscreteMeasure build_mme(const DiscreteMeasure& right, const DiscreteMeasure& left);

struct SpectralGap {
  double ratio = 0.0;  // |lambda_2| / lambda_1
  double residual = 0.0;
  bool converged = false;
};

SpectralGap spectral_gap(const UlamOperator& op, const EigenPair& right, const EigenPair& left,
                         int max_iter = 5000);

/// Pushforward of cell masses through the unweighted kernel: (P mu).
DiscreteMeasure push_forward(const UlamOperator& op, const DiscreteMeasure& mu);

/// Writes the weighted operator in coordinate-list text form (row col value).
void write_coo(const UlamOperator& op, const std::string& path);

}  // namespace hypent

#endif  // HYPENT_SPECTRAL_HPP
