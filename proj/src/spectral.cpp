#include "hypent/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

namespace hypent {

namespace {

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

UlamOperator build_ulam(const PiecewiseAffineMap& map, int depth, std::int64_t cell_cap,
                        int threads) {
  UlamOperator op;
  op.depth = depth;
  if (depth == 0) {
    // degenerate single-cell operator, useful as the rank-1 edge case
    op.cells.k = op.cells.n = 0;
    op.cells.cells = {map.ambient_polygon()};
    op.cells.count = 1;
    op.cells.first_branch = {-1};
    op.js_of_cell = {1.0};
    op.A = SparseMat(1, 1);
    op.P = SparseMat(1, 1);
    op.A.insert(0, 0) = 1.0;
    op.P.insert(0, 0) = 1.0;
    op.A.makeCompressed();
    op.P.makeCompressed();
    return op;
  }

  op.cells = refine(map, depth, depth, cell_cap);
  const auto& cells = op.cells.cells;
  const int n = static_cast<int>(cells.size());
  op.js_of_cell.resize(n);

  CellIndex index(cells);
  op.max_column_defect = 0.0;

  struct ChunkOut {
    std::vector<Eigen::Triplet<double>> trip_a, trip_p;
    double max_defect = 0.0;
    std::string error;
  };

  auto process_range = [&](int j0, int j1, ChunkOut& out) {
    std::vector<int> candidates;
    for (int j = j0; j < j1; ++j) {
      const int b = op.cells.first_branch[j];
      if (b < 0) {
        out.error = "build_ulam: cell without a forward branch";
        return;
      }
      op.js_of_cell[j] = stable_jacobian(map, b);
      const auto& br = map.branches()[b];
      const ConvexPolygon image = cells[j].affine_image(br.linear, br.offset);
      const double image_area = image.area();
      Vec2 lo, hi;
      image.bounding_box(lo, hi);
      index.overlap_candidates(lo, hi, candidates);
      double covered = 0.0;
      std::vector<std::pair<int, double>> overlaps;
      for (int i : candidates) {
        const ConvexPolygon inter = image.intersect(cells[i], map.tol());
        if (inter.empty()) continue;
        const double w = inter.area();
        if (w < 1e-15 * image_area) continue;
        covered += w;
        overlaps.emplace_back(i, w);
      }
      // tiny clipped slivers (below eps_area) are dropped inside the kernel,
      // so normalize by the covered area; the defect stays as a diagnostic
      const double defect = std::abs(covered - image_area);
      out.max_defect = std::max(out.max_defect, defect / image_area);
      if (defect > 1e-8 * image_area && defect > 1e-12) {
        out.error = "build_ulam: area accounting failed on cell " + std::to_string(j) +
                    " (defect " + std::to_string(defect) + ")";
        return;
      }
      for (const auto& [i, w] : overlaps) {
        const double frac = w / covered;
        out.trip_p.emplace_back(i, j, frac);
        out.trip_a.emplace_back(i, j, frac / op.js_of_cell[j]);
      }
    }
  };

  const int nthreads = std::max(1, std::min(threads, n));
  std::vector<ChunkOut> chunks(nthreads);
  if (nthreads == 1) {
    process_range(0, n, chunks[0]);
  } else {
    std::vector<std::thread> workers;
    const int stride = (n + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      const int j0 = t * stride;
      const int j1 = std::min(n, j0 + stride);
      workers.emplace_back([&, j0, j1, t]() { process_range(j0, j1, chunks[t]); });
    }
    for (auto& w : workers) w.join();
  }

  std::vector<Eigen::Triplet<double>> trip_a, trip_p;
  for (auto& c : chunks) {
    if (!c.error.empty()) throw CertificationFailure(c.error);
    op.max_column_defect = std::max(op.max_column_defect, c.max_defect);
    trip_a.insert(trip_a.end(), c.trip_a.begin(), c.trip_a.end());
    trip_p.insert(trip_p.end(), c.trip_p.begin(), c.trip_p.end());
  }
  op.A = SparseMat(n, n);
  op.P = SparseMat(n, n);
  op.A.setFromTriplets(trip_a.begin(), trip_a.end());
  op.P.setFromTriplets(trip_p.begin(), trip_p.end());
  op.A.makeCompressed();
  op.P.makeCompressed();
  return op;
}

namespace {

EigenPair iterate_leading(const SparseMat& A, Eigen::VectorXd v, EigMode mode, double tol,
                          int max_iter) {
  EigenPair out;
  const Eigen::Index n = A.rows();
  v /= v.lpNorm<1>();
  // Cesaro mode averages the normalized iterates over a tail window: the
  // full average only converges like 1/n, so the accumulation restarts at
  // dyadic times (same limit, geometric rate).
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
  int acc_count = 0;
  int next_restart = 4;
  double lambda = 1.0;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd w = A * v;
    lambda = w.lpNorm<1>();  // v >= 0, ||v||_1 = 1
    if (lambda <= 0.0) {
      out.converged = false;
      out.iterations = it;
      return out;
    }
    if (mode == EigMode::Power) {
      const double resid = (w - lambda * v).lpNorm<1>() / lambda;
      v = w / lambda;
      out.lambda = lambda;
      out.residual = resid;
      out.iterations = it;
      if (resid < tol) {
        out.converged = true;
        break;
      }
    } else {
      v = w / lambda;
      if (it == next_restart) {
        acc.setZero();
        acc_count = 0;
        next_restart *= 2;
      }
      acc += v;
      ++acc_count;
      out.iterations = it;
      if (acc_count >= 4 && it % 4 == 0) {
        Eigen::VectorXd avg = acc / acc.lpNorm<1>();
        Eigen::VectorXd check = A * avg;
        const double lam = check.lpNorm<1>();
        const double resid = (check - lam * avg).lpNorm<1>() / lam;
        if (resid < tol || it + 4 > max_iter) {
          v = avg;
          out.lambda = lam;
          out.residual = resid;
          out.converged = resid < tol;
          break;
        }
      }
    }
  }
  v /= v.lpNorm<1>();
  out.vec.masses = to_std(v);
  out.vec.tag = Normalization::Probability;
  return out;
}

}  // namespace

EigenPair leading_right(const UlamOperator& op, EigMode mode, double tol, int max_iter) {
  if (tol <= 0.0) throw InvalidInput("leading_right: tol must be positive");
  Eigen::VectorXd v = Eigen::VectorXd::Ones(op.A.rows());
  EigenPair out = iterate_leading(op.A, v, mode, tol, max_iter);
  out.vec.depth = op.depth;
  return out;
}

EigenPair leading_left(const UlamOperator& op, const DiscreteMeasure& seed, double tol,
                       int max_iter) {
  if (tol <= 0.0) throw InvalidInput("leading_left: tol must be positive");
  if (seed.masses.size() != op.size()) throw InvalidInput("leading_left: seed size mismatch");
  Eigen::VectorXd v = to_vec(seed.masses);
  if (v.minCoeff() < 0.0 || v.lpNorm<1>() <= 0.0) {
    throw InvalidInput("leading_left: seed must be nonnegative and nonzero");
  }
  const SparseMat At = SparseMat(op.A.transpose());
  EigenPair out = iterate_leading(At, v, EigMode::Power, tol, max_iter);
  out.vec.depth = op.depth;
  return out;
}

DiscreteMeasure lebesgue_masses(const UlamOperator& op) {
  DiscreteMeasure mu;
  mu.depth = op.depth;
  mu.masses.reserve(op.size());
  double total = 0.0;
  for (const auto& c : op.cells.cells) {
    mu.masses.push_back(c.area());
    total += mu.masses.back();
  }
  for (auto& m : mu.masses) m /= total;
  return mu;
}

DiscreteMeasure build_mme(const DiscreteMeasure& right, const DiscreteMeasure& left) {
  if (right.masses.size() != left.masses.size() || right.depth != left.depth) {
    throw InvalidInput("build_mme: eigenvector depth mismatch");
  }
  double pairing = 0.0;
  for (std::size_t i = 0; i < right.masses.size(); ++i) pairing += right.masses[i] * left.masses[i];
  if (pairing < 1e-14) {
    throw CertificationFailure("build_mme: degenerate seed, pairing <nu0, nutilde0> is zero");
  }
  DiscreteMeasure mu;
  mu.depth = right.depth;
  mu.tag = Normalization::Probability;
  mu.masses.resize(right.masses.size());
  for (std::size_t i = 0; i < right.masses.size(); ++i) {
    mu.masses[i] = right.masses[i] * left.masses[i] / pairing;
  }
  return mu;
}

SpectralGap spectral_gap(const UlamOperator& op, const EigenPair& right, const EigenPair& left,
                         int max_iter) {
  SpectralGap gap;
  const Eigen::Index n = op.A.rows();
  if (n <= 1) {
    gap.ratio = 0.0;
    gap.converged = true;
    return gap;
  }
  const Eigen::VectorXd r = to_vec(right.vec.masses);
  const Eigen::VectorXd l = to_vec(left.vec.masses);
  const double pairing = l.dot(r);
  const double lambda = right.lambda;

  // deflated operator B v = A v - lambda r (l . v) / (l . r)
  auto apply_deflated = [&](const Eigen::VectorXd& v) {
    return (op.A * v - (lambda * (l.dot(v)) / pairing) * r).eval();
  };

  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = std::cos(2.0 * M_PI * (i + 0.37) / n);
  v -= (l.dot(v) / pairing) * r;
  double nv = v.norm();
  if (nv == 0.0) return gap;
  v /= nv;

  // |lambda_2| from the norm growth of the deflated iteration; a windowed
  // geometric mean keeps complex pairs (oscillating growth) stable
  const int window = 24;
  std::vector<double> log_growth;
  double geo_prev = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = apply_deflated(v);
    const double g = w.norm();
    if (g < 1e-280) {
      gap.ratio = 0.0;
      gap.converged = true;
      return gap;
    }
    v = w / g;
    // periodic re-projection against the leading pair fights round-off drift
    if (it % 16 == 15) {
      v -= (l.dot(v) / pairing) * r;
      v /= v.norm();
    }
    log_growth.push_back(std::log(g));
    if (static_cast<int>(log_growth.size()) >= 2 * window) {
      double s = 0.0;
      for (int k = 0; k < window; ++k) s += log_growth[log_growth.size() - 1 - k];
      const double geo = s / window;
      const double ratio_est = std::exp(geo) / lambda;
      // a ratio at rounding-noise scale means the deflated spectrum is
      // effectively zero (nilpotent remainder); report it as converged
      if (ratio_est < 1e-6 ||
          (it > 2 * window && std::abs(geo - geo_prev) < 1e-7 * std::max(1.0, std::abs(geo)))) {
        gap.ratio = ratio_est;
        gap.residual = std::abs(geo - geo_prev);
        gap.converged = true;
        return gap;
      }
      geo_prev = geo;
    }
  }
  double s = 0.0;
  int m = std::min<std::size_t>(window, log_growth.size());
  for (int k = 0; k < m; ++k) s += log_growth[log_growth.size() - 1 - k];
  gap.ratio = std::exp(s / std::max(1, m)) / lambda;
  gap.residual = 1.0;
  gap.converged = false;
  return gap;
}

DiscreteMeasure push_forward(const UlamOperator& op, const DiscreteMeasure& mu) {
  if (mu.masses.size() != op.size()) throw InvalidInput("push_forward: size mismatch");
  DiscreteMeasure out;
  out.depth = mu.depth;
  out.tag = mu.tag;
  out.masses = to_std(op.P * to_vec(mu.masses));
  return out;
}

void write_coo(const UlamOperator& op, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InvalidInput("write_coo: cannot open " + path);
  f.precision(17);
  for (int k = 0; k < op.A.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(op.A, k); it; ++it) {
      f << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
}

}  // namespace hypent
