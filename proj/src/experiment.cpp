#include "hypent/experiment.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace hypent {

using nlohmann::json;

std::string version_string() { return "hypent 0.1.0"; }

ExperimentKind parse_experiment(const std::string& name) {
  if (name == "counts") return ExperimentKind::Counts;
  if (name == "hstar") return ExperimentKind::Hstar;
  if (name == "growth") return ExperimentKind::Growth;
  if (name == "onestep") return ExperimentKind::OneStep;
  if (name == "spectrum") return ExperimentKind::Spectrum;
  if (name == "mme") return ExperimentKind::Mme;
  if (name == "correlations") return ExperimentKind::Correlations;
  if (name == "bowen") return ExperimentKind::Bowen;
  if (name == "periodic") return ExperimentKind::Periodic;
  if (name == "neighborhood") return ExperimentKind::Neighborhood;
  if (name == "full-report") return ExperimentKind::FullReport;
  throw ConfigError("unknown experiment '" + name + "'");
}

namespace {

std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Counts: return "counts";
    case ExperimentKind::Hstar: return "hstar";
    case ExperimentKind::Growth: return "growth";
    case ExperimentKind::OneStep: return "onestep";
    case ExperimentKind::Spectrum: return "spectrum";
    case ExperimentKind::Mme: return "mme";
    case ExperimentKind::Correlations: return "correlations";
    case ExperimentKind::Bowen: return "bowen";
    case ExperimentKind::Periodic: return "periodic";
    case ExperimentKind::Neighborhood: return "neighborhood";
    case ExperimentKind::FullReport: return "full-report";
  }
  return "?";
}

json spec_to_json(const ExperimentSpec& s) {
  return json{{"map", s.map_ref},
              {"experiment", kind_name(s.kind)},
              {"n_max", s.n_max},
              {"depth", s.depth},
              {"delta0", s.delta0},
              {"q", s.q},
              {"tol", s.tol},
              {"cell_cap", s.cell_cap},
              {"lattice", s.lattice},
              {"eps", s.eps},
              {"phi", s.phi},
              {"psi", s.psi},
              {"eps_list", s.eps_list},
              {"out_dir", s.out_dir},
              {"threads", s.threads},
              {"rng_seed", s.rng_seed}};
}

struct CsvFile {
  std::string name;
  std::string content;
};

struct Bundle {
  json sections = json::object();
  std::vector<CsvFile> files;
  bool passed = true;

  void require(bool ok, const std::string& what) {
    sections["checks"].push_back(json{{"check", what}, {"pass", ok}});
    passed = passed && ok;
  }
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

struct MmeData {
  UlamOperator op;
  EigenPair right, left;
  DiscreteMeasure mme;
};

MmeData compute_mme(const PiecewiseAffineMap& map, const ExperimentSpec& spec) {
  MmeData d;
  d.op = build_ulam(map, spec.depth, spec.cell_cap, spec.threads);
  d.right = leading_right(d.op, EigMode::Power, spec.tol);
  d.left = leading_left(d.op, lebesgue_masses(d.op), spec.tol);
  d.mme = build_mme(d.right.vec, d.left.vec);
  return d;
}

void section_counts(const PiecewiseAffineMap& map, const ExperimentSpec& spec, Bundle& b) {
  bool capped = false;
  auto counts = count_sequence(map, spec.n_max, spec.cell_cap, &capped);
  const int lo = std::max(1, static_cast<int>(counts.size()) / 2);
  const int hi = static_cast<int>(counts.size());
  json sec;
  sec["counts"] = counts;
  sec["capped"] = capped;
  HstarEstimate est;
  const bool fit_ok = hi - lo + 1 >= 4;
  if (fit_ok) {
    est = estimate_hstar(counts, lo, hi);
    sec["hstar"] = est.hstar;
    sec["fit_window"] = {est.fit_lo, est.fit_hi};
    sec["fit_residual"] = est.fit_residual;
    sec["C_sharp_lo"] = est.C_sharp_lo;
    sec["C_sharp_hi"] = est.C_sharp_hi;
    sec["c1"] = est.c1;
  }
  std::ostringstream csv;
  csv << "n,count,log_count,fit_residual\n";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double logc = std::log(static_cast<double>(counts[i]));
    csv << (i + 1) << ',' << counts[i] << ',' << fmt(logc) << ','
        << fmt(fit_ok ? est.fit_residual : 0.0) << '\n';
  }
  b.files.push_back({"counts.csv", csv.str()});
  bool monotone = true;
  for (std::size_t i = 1; i < counts.size(); ++i) monotone = monotone && counts[i] >= counts[i - 1];
  b.require(monotone, "counts monotone nondecreasing");
  if (fit_ok) b.require(est.c1 > 0.0, "supermultiplicativity constant positive");
  b.sections[kind_name(ExperimentKind::Counts)] = sec;
  if (fit_ok) {
    b.files.push_back({"hstar.json", sec.dump(2) + "\n"});
  }
}

void section_growth(const PiecewiseAffineMap& map, const ExperimentSpec& spec, Bundle& b) {
  auto hyp = hyperbolicity_certificate(map);
  auto cert = complexity_certificate(map, hyp, spec.delta0, {0.05, 0.1, 0.2, 0.3}, std::min(spec.n_max, 6));
  auto counts = count_sequence(map, spec.n_max, spec.cell_cap);
  auto samples = stable_segment_grid(map, spec.lattice, spec.delta0);
  auto rep = growth_bound_checks(map, samples, spec.n_max, spec.delta0, 1.0, cert.K1_delta0,
                                 counts, hyp.Lambda, hyp.kappa);
  auto scan = long_fraction_scan(map, {spec.delta0, spec.delta0 / 2, spec.delta0 / 4},
                                 std::min(spec.n_max, 8), spec.lattice);
  json sec;
  sec["K1"] = cert.K1_delta0;
  sec["K_of_n"] = cert.K_of_n;
  sec["rho"] = cert.rho;
  sec["p1_holds"] = cert.p1_holds;
  sec["n0"] = cert.n0;
  sec["alpha0"] = cert.alpha0;
  sec["min_iterate_m"] = cert.min_iterate_m;
  sec["C_b"] = rep.C_b;
  sec["C_c"] = rep.C_c;
  sec["C_d"] = rep.C_d;
  sec["long_fraction_certified"] = scan.certified;
  sec["delta1"] = scan.delta1;
  sec["n1"] = scan.n1;
  std::ostringstream csv;
  csv << "n,max_never_long,max_G_over_M,max_sum_ratio,bound_a\n";
  for (const auto& row : rep.rows) {
    csv << row.n << ',' << row.max_never_long << ',' << fmt(row.max_g_over_m) << ','
        << fmt(row.max_sum_ratio) << ',' << (row.bound_a_holds ? 1 : 0) << '\n';
  }
  b.files.push_back({"growth.csv", csv.str()});
  std::ostringstream csv2;
  csv2 << "delta,n,min_long_fraction\n";
  for (const auto& row : scan.table) {
    csv2 << fmt(row.delta) << ',' << row.n << ',' << fmt(row.min_fraction) << '\n';
  }
  b.files.push_back({"long_fraction.csv", csv2.str()});
  if (!samples.empty()) {
    // per-generation table for a representative segment
    auto frag = fragment(map, StableSegment{samples[samples.size() / 2]}, spec.n_max, spec.delta0);
    std::ostringstream csv3;
    csv3 << "n,count_G,count_L,count_I,total_length,long_fraction\n";
    for (int n = 1; n <= spec.n_max; ++n) {
      const auto& gen = frag.generations[n - 1];
      const double frac = gen.count() ? static_cast<double>(gen.count_long) / gen.count() : 0.0;
      csv3 << n << ',' << gen.count() << ',' << gen.count_long << ',' << gen.count_never_long
           << ',' << fmt(gen.total_length) << ',' << fmt(frac) << '\n';
    }
    b.files.push_back({"fragmentation.csv", csv3.str()});
  }
  b.require(rep.all_bounds_hold, "never-long counts bounded by K1^n");
  b.require(scan.certified, "long fraction >= 2/3 certified at some (delta1, n1)");
  b.sections["growth"] = sec;
}

void section_onestep(const PiecewiseAffineMap& map, const ExperimentSpec& spec, Bundle& b) {
  auto res = one_step_expansion(map, spec.delta0, spec.q, spec.lattice);
  json sec;
  sec["rho_hat"] = res.rho_hat;
  sec["rho_hat_adversarial"] = res.rho_hat_adversarial;
  sec["contracting"] = res.contracting;
  sec["maximizer"] = {res.maximizer.a.x(), res.maximizer.a.y(), res.maximizer.b.x(),
                      res.maximizer.b.y()};
  b.require(res.contracting, "one-step expansion sum below 1 on the grid");
  b.sections["onestep"] = sec;
}

void section_spectrum(const ExperimentSpec& spec, Bundle& b, MmeData& d) {
  auto cesaro = leading_right(d.op, EigMode::Cesaro, std::max(spec.tol, 1e-9));
  auto gap = spectral_gap(d.op, d.right, d.left);
  json sec;
  sec["cells"] = d.op.size();
  sec["lambda_right"] = d.right.lambda;
  sec["lambda_left"] = d.left.lambda;
  sec["lambda_cesaro"] = cesaro.lambda;
  sec["residual_right"] = d.right.residual;
  sec["residual_left"] = d.left.residual;
  sec["gap_ratio"] = gap.ratio;
  sec["gap_converged"] = gap.converged;
  sec["max_column_defect"] = d.op.max_column_defect;
  b.require(d.right.converged && d.left.converged, "power iterations converged");
  b.require(std::abs(d.right.lambda - d.left.lambda) <= 2 * spec.tol * d.right.lambda + 2 * spec.tol,
            "left/right eigenvalues agree within 2 tol");
  b.require(std::abs(cesaro.lambda - d.right.lambda) <=
                10 * std::max(spec.tol, 1e-9) * d.right.lambda,
            "power and cesaro modes agree");
  b.require(d.op.max_column_defect < 1e-10, "unweighted kernel column-stochastic");
  b.sections["spectrum"] = sec;

  std::ostringstream coo;
  coo << std::setprecision(17);
  for (int k = 0; k < d.op.A.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(d.op.A, k); it; ++it) {
      coo << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
  b.files.push_back({"ulam.coo", coo.str()});
}

void section_mme(Bundle& b, MmeData& d) {
  const double kernel_residual = invariance_residual(d.op, d.mme);
  const double chain_residual = chain_invariance_residual(d.op, d.right, d.left, d.mme);
  json sec;
  sec["pairing_depth"] = d.mme.depth;
  // volume-kernel pushforward: small exactly when the mme has Lebesgue
  // conditionals; otherwise it measures the mme-vs-volume transport gap
  sec["kernel_tv_residual"] = kernel_residual;
  sec["chain_tv_residual"] = chain_residual;
  sec["mass_total"] = d.mme.total();
  b.require(std::abs(d.mme.total() - 1.0) < 1e-12, "mme is a probability measure");
  b.require(chain_residual < 1e-2, "mme stationary under the eigen-chain kernel");
  b.sections["mme"] = sec;

  std::ostringstream csv;
  csv << "cell_id,centroid_x,centroid_y,mass\n";
  for (std::size_t i = 0; i < d.mme.masses.size(); ++i) {
    const Point c = d.op.cells.cells[i].centroid();
    csv << i << ',' << fmt(c.x()) << ',' << fmt(c.y()) << ',' << fmt(d.mme.masses[i]) << '\n';
  }
  b.files.push_back({"measure_mme.csv", csv.str()});
}

void section_correlations(const ExperimentSpec& spec, Bundle& b, MmeData& d) {
  auto phi = parse_observable(spec.phi);
  auto psi = parse_observable(spec.psi);
  auto rep = correlation_decay(d.op, d.mme, phi, psi, spec.n_max);
  json sec;
  sec["phi"] = spec.phi;
  sec["psi"] = spec.psi;
  sec["gamma"] = rep.gamma;
  sec["immediate_decay"] = rep.immediate_decay;
  sec["truncated"] = rep.truncated;
  std::ostringstream csv;
  csv << "n,correlation\n";
  for (const auto& row : rep.table) csv << row.n << ',' << fmt(row.value) << '\n';
  b.files.push_back({"correlations.csv", csv.str()});
  b.require(rep.gamma > 0.0 || rep.table[0].value < 1e-14,
            "fitted decay rate positive (or identically zero correlations)");
  b.sections["correlations"] = sec;
}

void section_bowen(const PiecewiseAffineMap& map, const ExperimentSpec& spec, Bundle& b,
                   MmeData& d) {
  auto centers = sample_bowen_centers(map, 10, spec.n_max, 1e-3, spec.rng_seed);
  std::vector<BowenScaling> batch;
  std::ostringstream csv;
  csv << "center_x,center_y,n,mass_lower,mass_estimate,mass_upper,inconclusive\n";
  for (const auto& c : centers) {
    batch.push_back(bowen_ball_scaling(map, d.op, d.mme, c, spec.n_max, spec.eps));
    for (const auto& res : batch.back().per_n) {
      csv << fmt(c.x()) << ',' << fmt(c.y()) << ',' << res.query.n << ',' << fmt(res.mass_lower)
          << ',' << fmt(res.mass_estimate) << ',' << fmt(res.mass_upper) << ','
          << (res.inconclusive ? 1 : 0) << '\n';
    }
  }
  const double pooled = pooled_bowen_slope(batch);
  json sec;
  sec["eps"] = spec.eps;
  sec["pooled_slope"] = pooled;
  json slopes = json::array();
  for (const auto& s : batch) slopes.push_back(s.slope);
  sec["per_center_slopes"] = slopes;
  b.files.push_back({"bowen.csv", csv.str()});
  b.require(pooled > 0.0, "bowen masses decay");
  b.sections["bowen"] = sec;
}

void section_periodic(const PiecewiseAffineMap& map, const ExperimentSpec& spec, Bundle& b) {
  auto census = count_periodic(map, spec.n_max, spec.cell_cap);
  json sec = json::array();
  std::ostringstream csv;
  csv << "n,fixed_count,prime_count\n";
  bool sane = true;
  for (const auto& row : census) {
    sec.push_back(json{{"n", row.n}, {"fixed", row.fixed_count}, {"prime", row.prime_count}});
    csv << row.n << ',' << row.fixed_count << ',' << row.prime_count << '\n';
    sane = sane && row.fixed_count >= row.prime_count && row.prime_count >= 0;
  }
  b.files.push_back({"periodic.csv", csv.str()});
  b.require(sane, "prime counts consistent with fixed counts");
  b.sections["periodic"] = sec;
}

void section_neighborhood(const PiecewiseAffineMap& map, const ExperimentSpec& spec, Bundle& b,
                          MmeData& d) {
  json sec;
  std::ostringstream csv;
  csv << "sign,eps,mass_lower,mass_estimate,mass_upper\n";
  for (Sign sign : {Sign::Plus, Sign::Minus}) {
    auto rep = singularity_neighborhood(map, d.op, d.mme, sign, spec.eps_list);
    const char* tag = sign == Sign::Plus ? "plus" : "minus";
    sec[tag] = json{{"exponent", rep.exponent},
                    {"positive", rep.positive},
                    {"refine_suggested", rep.refine_suggested}};
    for (const auto& row : rep.rows) {
      csv << tag << ',' << fmt(row.eps) << ',' << fmt(row.lower) << ',' << fmt(row.estimate) << ','
          << fmt(row.upper) << '\n';
    }
    b.require(rep.positive, std::string("neighborhood mass exponent positive (") + tag + ")");
  }
  b.files.push_back({"neighborhood.csv", csv.str()});
  b.sections["neighborhood"] = sec;
}

}  // namespace

EstimatorComparison compare_estimators(const PiecewiseAffineMap& map, int n_max, int depth,
                                       std::int64_t cell_cap) {
  EstimatorComparison cmp;
  auto counts = count_sequence(map, n_max, cell_cap);
  auto est = estimate_hstar(counts, std::max(1, n_max / 2), n_max);
  cmp.hstar_fit = est.hstar;

  auto op = build_ulam(map, depth, cell_cap);
  auto right = leading_right(op, EigMode::Power, 1e-10);
  auto left = leading_left(op, lebesgue_masses(op), 1e-10);
  cmp.log_lambda = std::log(right.lambda);

  auto mme = build_mme(right.vec, left.vec);
  auto ent = entropy_estimate(map, op, right, left, mme, n_max, cell_cap);
  cmp.entropy_rate = ent.rate;

  cmp.max_pairwise_diff = std::max({std::abs(cmp.hstar_fit - cmp.log_lambda),
                                    std::abs(cmp.hstar_fit - cmp.entropy_rate),
                                    std::abs(cmp.log_lambda - cmp.entropy_rate)});
  cmp.pass = cmp.max_pairwise_diff < 0.05;
  return cmp;
}

ExperimentReport run(const ExperimentSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  if (spec.n_max < 1) throw ConfigError("n_max must be >= 1");
  if (spec.depth < 0) throw ConfigError("depth must be >= 0");
  if (spec.threads < 1) throw ConfigError("threads must be >= 1");
  auto map = load_map(spec.map_ref);

  Bundle b;
  const bool needs_measure =
      spec.kind == ExperimentKind::Spectrum || spec.kind == ExperimentKind::Mme ||
      spec.kind == ExperimentKind::Correlations || spec.kind == ExperimentKind::Bowen ||
      spec.kind == ExperimentKind::Neighborhood || spec.kind == ExperimentKind::FullReport;
  MmeData data;
  if (needs_measure) data = compute_mme(map, spec);

  switch (spec.kind) {
    case ExperimentKind::Counts:
    case ExperimentKind::Hstar:
      section_counts(map, spec, b);
      break;
    case ExperimentKind::Growth:
      section_growth(map, spec, b);
      break;
    case ExperimentKind::OneStep:
      section_onestep(map, spec, b);
      break;
    case ExperimentKind::Spectrum:
      section_spectrum(spec, b, data);
      break;
    case ExperimentKind::Mme:
      section_mme(b, data);
      break;
    case ExperimentKind::Correlations:
      section_correlations(spec, b, data);
      break;
    case ExperimentKind::Bowen:
      section_bowen(map, spec, b, data);
      break;
    case ExperimentKind::Periodic:
      section_periodic(map, spec, b);
      break;
    case ExperimentKind::Neighborhood:
      section_neighborhood(map, spec, b, data);
      break;
    case ExperimentKind::FullReport:
      section_counts(map, spec, b);
      section_spectrum(spec, b, data);
      section_mme(b, data);
      section_correlations(spec, b, data);
      section_periodic(map, spec, b);
      break;
  }

  ExperimentReport rep;
  rep.spec = spec;
  rep.map_name = map.name();
  rep.all_passed = b.passed;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json j;
  j["version"] = version_string();
  j["spec"] = spec_to_json(spec);
  j["map"] = map.name();
  j["sections"] = b.sections;
  j["passed"] = b.passed;
  j["wall_seconds"] = rep.wall_seconds;
  rep.json = j.dump(2) + "\n";

  if (!spec.out_dir.empty()) {
    std::filesystem::create_directories(spec.out_dir);
    for (const auto& f : b.files) {
      std::ofstream out(std::filesystem::path(spec.out_dir) / f.name, std::ios::binary);
      out << f.content;
    }
    std::ofstream out(std::filesystem::path(spec.out_dir) / "report.json", std::ios::binary);
    out << rep.json;
  }
  return rep;
}

}  // namespace hypent
