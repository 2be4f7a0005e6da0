// Command-line front end: generate instances, run verification suites, emit
// text or JSON reports.  Exit codes: 0 all checks pass, 1 check failure,
// 2 input error.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>

#include "morita/json_io.hpp"
#include "morita/suites.hpp"

namespace {

using namespace morita;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("MORITA_LAB_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      return 1;
    }
  }
  return 1;
}

void print_report_text(std::ostream& os, const Report& rep) {
  for (const auto& e : rep.entries) {
    os << (e.pass ? "[PASS] " : "[FAIL] ") << e.check << "  residual=" << e.residual
       << "  tol=" << e.tolerance << "  (" << e.ref << ")\n";
  }
  os << (rep.pass() ? "all checks passed" : "CHECK FAILURES PRESENT") << "\n";
}

void emit(const Report& rep, const std::string& format, const std::string& out_path) {
  if (format == "json") {
    json j = report_to_json(rep);
    if (out_path.empty()) {
      std::cout << j.dump(2) << "\n";
    } else {
      write_json_file(out_path, j);
    }
  } else {
    if (out_path.empty()) {
      print_report_text(std::cout, rep);
    } else {
      std::ostringstream os;
      print_report_text(os, rep);
      std::ofstream f(out_path);
      f << os.str();
    }
  }
}

int cmd_gen(const std::string& preset, const std::string& scenario_path, std::uint64_t seed,
            const std::string& out_path) {
  Scenario scenario;
  if (!scenario_path.empty()) {
    scenario = scenario_from_json(read_json_file(scenario_path));
  } else {
    scenario = preset_scenario(preset.empty() ? "corner-m2" : preset, seed);
  }
  if (seed != 0) scenario.seed = seed;
  Bundle bundle = generate(scenario);
  Report rep = validate_pair(bundle.pair);
  std::string path = out_path.empty() ? bundle.name + ".bundle.json" : out_path;
  write_json_file(path, bundle_to_json(bundle));
  std::cout << "bundle " << bundle.name << " written to " << path << "\n";
  print_report_text(std::cout, rep);
  return rep.pass() ? 0 : 1;
}

int cmd_verify(const std::string& bundle_path, std::vector<std::string> suites, double tol,
               std::uint64_t seed, const std::string& format, const std::string& out_path) {
  json bundle_json = read_json_file(bundle_path);  // missing/malformed file: input error
  Bundle bundle;
  try {
    bundle = bundle_from_json(bundle_json);
  } catch (const std::exception& e) {
    // A parseable bundle that fails re-validation is a check failure.
    std::cerr << "bundle validation failure: " << e.what() << "\n";
    return 1;
  }
  if (suites.empty() || (suites.size() == 1 && suites[0] == "all")) suites = suite_names();
  for (const auto& s : suites) {
    auto names = suite_names();
    if (std::find(names.begin(), names.end(), s) == names.end()) {
      throw CLI::ValidationError("unknown suite: " + s);
    }
  }
  SuiteOptions opt;
  opt.tol = tol;
  opt.seed = seed ? seed : bundle.scenario.seed;
  Report rep = run_suites(suites, bundle, opt);
  emit(rep, format, out_path);
  return rep.pass() ? 0 : 1;
}

int cmd_demo(const std::string& weights, const std::string& format,
             const std::string& out_path) {
  // Weighted-trace walkthrough on scalars inside the 2x2 matrix algebra.
  double h1 = 2.0 / 3.0, h2 = 1.0 / 3.0;
  if (!weights.empty()) {
    std::istringstream ss(weights);
    char comma = 0;
    if (!(ss >> h1 >> comma >> h2) || comma != ',') {
      throw CLI::ValidationError("--h expects two comma-separated weights");
    }
  }
  Scenario scenario = preset_scenario("corner-m2", 1);
  Bundle base = generate(scenario);
  const Inclusion& inc = base.inclusion;
  BimoduleMap E = trace_conditional_expectation(inc);
  Mat h = Mat::Zero(2, 2);
  h(0, 0) = h1;
  h(1, 1) = h2;
  BimoduleMap phi = BimoduleMap::from_action(
      inc.large, inc.small, [&](const Mat& c) { return E.apply(inc.large.project(h * c)); });

  Report rep{"demo-weighted-trace"};
  StarAlgebra K = relative_commutant(inc);
  rep.add("demo.phi_bimodule", bimodule_residual(inc, phi), kAlgebraicTol,
          "the weighted trace is a bimodule map");

  if (std::abs(h1) > 1e-12 && std::abs(h2) > 1e-12) {
    Mat h_inv = Mat::Zero(2, 2);
    h_inv(0, 0) = 1.0 / h1;
    h_inv(1, 1) = 1.0 / h2;
    QuasiBasis qb = shift_quasi_basis_left(construct_for_ce(inc, E), h_inv);
    rep.merge(verify_quasi_basis(inc.large, phi, qb));

    ModularAutomorphism theta = theta_from_quasibasis(K, phi, qb);
    rep.merge(check_modular_condition(phi, theta));
    rep.merge(solve_modular_uniqueness(phi, theta));
    double oracle = 0.0;
    for (const Mat& x : K.basis()) {
      Mat want = h * x * h_inv;
      oracle = std::max(oracle, (theta.apply(x) - want).norm());
    }
    rep.add("demo.theta_oracle", oracle, kAlgebraicTol,
            "theta is conjugation by the weight");
    {
      Mat e12 = Mat::Zero(2, 2);
      e12(0, 1) = 1.0;
      Mat img = theta.apply(e12);
      std::cout << "theta scales the (1,2) matrix unit by " << img(0, 1).real() << " (weights "
                << h1 << "," << h2 << ")\n";
    }
    CornerRealization cr = corner_realization(base.pair);
    rep.merge(conjugation_check(cr, phi, qb));
    ShiftedMaps shifts = shifted_maps(cr, phi, h);
    rep.merge(shifts.report);
  }
  emit(rep, format, out_path);
  return rep.pass() ? 0 : 1;
}

int cmd_report(const std::string& in_path) {
  json j = read_json_file(in_path);
  Report rep;
  rep.name = j.value("bundle", "");
  for (const auto& c : j.at("checks")) {
    rep.entries.push_back({c.at("check").get<std::string>(), c.at("residual").get<double>(),
                           c.at("tolerance").get<double>(), c.at("pass").get<bool>(),
                           c.value("ref", "")});
  }
  std::cout << "bundle: " << rep.name << "\n";
  print_report_text(std::cout, rep);
  return rep.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transfer of bimodule maps across Morita-equivalent inclusions"};
  app.require_subcommand(1);

  std::string preset, scenario_path, bundle_path, out_path, format = "text", weights, in_path;
  std::vector<std::string> suites;
  std::uint64_t seed = 0;
  double tol = morita::kAlgebraicTol;

  auto* gen = app.add_subcommand("gen", "generate an instance bundle");
  gen->add_option("--preset", preset, "one of: trivial corner-m2 corner-diag weighted-trace chain-m2");
  gen->add_option("--scenario", scenario_path, "scenario JSON path");
  gen->add_option("--seed", seed, "seed override (default MORITA_LAB_SEED or 1)");
  gen->add_option("--out", out_path, "output bundle path");

  auto* verify = app.add_subcommand("verify", "run verification suites on a bundle");
  verify->add_option("--bundle", bundle_path, "bundle JSON path")->required();
  verify->add_option("--suite", suites, "suites to run (or 'all')")->delimiter(',');
  verify->add_option("--tol", tol, "base tolerance override")
      ->check(CLI::Range(1e-15, 1.0));
  verify->add_option("--seed", seed, "sampling seed");
  verify->add_option("--format", format, "text|json")->check(CLI::IsMember({"text", "json"}));
  verify->add_option("--out", out_path, "report output path");

  auto* demo = app.add_subcommand("demo", "weighted-trace walkthrough");
  demo->set_help_flag("--help", "print help");
  demo->add_option("--h", weights, "two comma-separated weights, e.g. 0.9,0.1");
  demo->add_option("--format", format, "text|json")->check(CLI::IsMember({"text", "json"}));
  demo->add_option("--out", out_path, "report output path");

  auto* report = app.add_subcommand("report", "pretty-print a JSON report");
  report->add_option("--in", in_path, "report JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (seed == 0) seed = default_seed();
    if (gen->parsed()) return cmd_gen(preset, scenario_path, seed, out_path);
    if (verify->parsed()) return cmd_verify(bundle_path, suites, tol, seed, format, out_path);
    if (demo->parsed()) return cmd_demo(weights, format, out_path);
    if (report->parsed()) return cmd_report(in_path);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
