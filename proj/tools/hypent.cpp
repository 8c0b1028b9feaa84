#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "hypent/experiment.hpp"

namespace {

// exit codes: 0 ok, 1 checks failed, 2 config error, 3 cap exceeded,
// 4 certification failure, 5 invalid input
constexpr int kExitChecksFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCap = 3;
constexpr int kExitCertification = 4;
constexpr int kExitInvalid = 5;

int run_and_report(const hypent::ExperimentSpec& spec) {
  auto report = hypent::run(spec);
  std::cout << report.json;
  return report.all_passed ? 0 : kExitChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypent: entropy, transfer-operator spectra and the measure of "
               "maximal entropy for piecewise-affine hyperbolic maps"};
  app.require_subcommand(1);

  hypent::ExperimentSpec spec;
  std::string experiment;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--map", spec.map_ref, "builtin name (baker3, cat, baker2u:<beta>) or config path");
    sub->add_option("--n-max", spec.n_max, "largest iterate");
    sub->add_option("--depth", spec.depth, "Ulam refinement depth k (cells of M_{-k}^k)");
    sub->add_option("--delta0", spec.delta0, "stable-segment length scale");
    sub->add_option("--q", spec.q, "one-step expansion exponent in (0,1]");
    sub->add_option("--tol", spec.tol, "eigen iteration tolerance");
    sub->add_option("--eps", spec.eps, "bowen ball radius");
    sub->add_option("--phi", spec.phi, "observable descriptor for correlations");
    sub->add_option("--psi", spec.psi, "second observable descriptor");
    sub->add_option("--lattice", spec.lattice, "segment/center lattice size");
    sub->add_option("--cap", spec.cell_cap, "cell count cap");
    sub->add_option("--out", spec.out_dir, "output directory for CSV/JSON artifacts");
    sub->add_option("--threads", spec.threads, "worker threads (default 1, reproducible)");
    sub->add_option("--seed", spec.rng_seed, "seed for sampled diagnostics");
  };

  for (const char* name : {"counts", "hstar", "growth", "onestep", "spectrum", "mme",
                           "correlations", "bowen", "periodic", "neighborhood", "full-report"}) {
    auto* sub = app.add_subcommand(name);
    add_common(sub);
    sub->callback([&, name]() { experiment = name; });
  }

  auto* list = app.add_subcommand("list", "list builtin maps");
  list->callback([&]() { experiment = "list"; });

  auto* compare = app.add_subcommand("compare", "h* fit vs log(lambda) vs entropy rate");
  add_common(compare);
  compare->callback([&]() { experiment = "compare"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (experiment == "list") {
      for (const auto& [name, desc] : hypent::list_builtins()) {
        std::cout << name << "  -  " << desc << "\n";
      }
      return 0;
    }
    if (experiment == "compare") {
      auto map = hypent::load_map(spec.map_ref);
      auto cmp = hypent::compare_estimators(map, spec.n_max, spec.depth, spec.cell_cap);
      std::printf("hstar_fit      %.10f\n", cmp.hstar_fit);
      std::printf("log_lambda     %.10f\n", cmp.log_lambda);
      std::printf("entropy_rate   %.10f\n", cmp.entropy_rate);
      std::printf("max_diff       %.3e\n", cmp.max_pairwise_diff);
      std::printf("pass           %s\n", cmp.pass ? "yes" : "no");
      return cmp.pass ? 0 : kExitChecksFailed;
    }
    spec.kind = hypent::parse_experiment(experiment);
    return run_and_report(spec);
  } catch (const hypent::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const hypent::CapExceeded& e) {
    std::cerr << "cap exceeded: " << e.what() << "\n";
    return kExitCap;
  } catch (const hypent::CertificationFailure& e) {
    std::cerr << "certification failure: " << e.what() << "\n";
    return kExitCertification;
  } catch (const hypent::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}
