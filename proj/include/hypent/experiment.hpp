#ifndef HYPENT_EXPERIMENT_HPP
#define HYPENT_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "hypent/analysis.hpp"
#include "hypent/curve_dynamics.hpp"

namespace hypent {

/// Thrown for malformed experiment requests (bad name, bad parameters).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class ExperimentKind {
  Counts,
  Hstar,
  Growth,
  OneStep,
  Spectrum,
  Mme,
  Correlations,
  Bowen,
  Periodic,
  Neighborhood,
  FullReport,
};

ExperimentKind parse_experiment(const std::string& name);

struct ExperimentSpec {
  std::string map_ref = "baker3";  // builtin name or config path
  ExperimentKind kind = ExperimentKind::Counts;
  int n_max = 8;
  int depth = 4;
  double delta0 = 0.3;
  double q = 1.0;
  double tol = 1e-10;
  std::int64_t cell_cap = kDefaultCellCap;
  int lattice = 10;                  // segment/center grids are lattice x lattice
  double eps = 0.1;                  // bowen radius
  std::string phi = "cos2pi:1,0";
  std::string psi = "cos2pi:1,0";
  std::vector<double> eps_list{0.004, 0.01, 0.04, 0.1};
  std::string out_dir;               // empty: no files written
  int threads = 1;
  std::uint64_t rng_seed = 20260810ULL;
};

/// Serializable result bundle: spec echo, per-section results, pass/fail
/// ledger, wall clock.  `to_json()` is the canonical form written to
/// report.json.
struct ExperimentReport {
  ExperimentSpec spec;
  std::string map_name;
  bool all_passed = true;
  double wall_seconds = 0.0;
  std::string json;  // full serialized report
};

ExperimentReport run(const ExperimentSpec& spec);

/// Three routes to the same number: h* from the count fit, log of the Ulam
/// leading eigenvalue, and the entropy rate of the eigen-chain.
struct EstimatorComparison {
  double hstar_fit = 0.0;
  double log_lambda = 0.0;
  double entropy_rate = 0.0;
  double max_pairwise_diff = 0.0;
  bool pass = false;  // all pairwise diffs < 0.05
};

EstimatorComparison compare_estimators(const PiecewiseAffineMap& map, int n_max, int depth,
                                       std::int64_t cell_cap = kDefaultCellCap);

std::string version_string();

}  // namespace hypent

#endif  // HYPENT_EXPERIMENT_HPP
