#pragma once

#include <string>
#include <vector>

#include "morita/generator.hpp"
#include "morita/modular.hpp"

namespace morita {

// Verification suites over one generated bundle.  `tol` rescales the base
// algebraic tolerance (default 1e-9); sampling sizes stay fixed.
struct SuiteOptions {
  double tol = kAlgebraicTol;
  int samples = 200;
  std::uint64_t seed = 1;
};

std::vector<std::string> suite_names();  // construction corner properties quasibasis modular composition

Report run_suite(const std::string& name, const Bundle& bundle, const SuiteOptions& opt);
Report run_suites(const std::vector<std::string>& names, const Bundle& bundle,
                  const SuiteOptions& opt);

Report suite_construction(const Bundle& bundle, const SuiteOptions& opt);
Report suite_corner(const Bundle& bundle, const SuiteOptions& opt);
Report suite_properties(const Bundle& bundle, const SuiteOptions& opt);
Report suite_quasibasis(const Bundle& bundle, const SuiteOptions& opt);
Report suite_modular(const Bundle& bundle, const SuiteOptions& opt);
Report suite_composition(const Bundle& bundle, const SuiteOptions& opt);

}  // namespace morita
