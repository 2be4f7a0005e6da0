#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "morita/quasibasis.hpp"

namespace morita {

enum class MapKind { trace_ce, weighted_trace, random_bimodule, shifted };

std::string to_string(MapKind kind);
MapKind map_kind_from_string(const std::string& s);

// Seeded construction recipe: A is the block-diagonal multimatrix algebra
// given by (dim, multiplicity) blocks inside the full matrix algebra C, the
// corner projection p in M_n(A) follows the per-slot rank pattern, and the
// map is one of the four kinds.  `conjugate` roughens the embedding by a
// seeded unitary.
struct Scenario {
  std::uint64_t seed = 1;
  std::vector<std::pair<int, int>> a_blocks = {{1, 2}};  // (block dim, multiplicity)
  int n = 2;
  std::vector<int> projection_ranks = {1, 0};  // per slot: how many central summands enter p
  MapKind map_kind = MapKind::trace_ce;
  bool conjugate = false;

  int ambient_dim() const;
};

struct Bundle {
  std::string name;
  Scenario scenario;
  Inclusion inclusion;  // equals pair.left
  EquivalencePair pair;
  BimoduleMap phi;
  std::optional<QuasiBasis> qb;
};

// Reproducible bundle; the pair and map are validated before return.
Bundle generate(const Scenario& scenario);

// Random element of the solution space of phi(a c a') = a phi(c) a'.
// Seed zero yields the zero map.
BimoduleMap random_bimodule_map(const Inclusion& inc, std::uint64_t seed);

// Dimension of the bimodule-map solution space.
int bimodule_map_space_dim(const Inclusion& inc);

// A seeded positive invertible element of the relative commutant, unit norm.
Mat random_commutant_positive(const Inclusion& inc, std::uint64_t seed);

// Named recipes used by the CLI: trivial, corner-m2, corner-diag,
// weighted-trace, chain-m2.
std::vector<std::string> preset_names();
Scenario preset_scenario(const std::string& name, std::uint64_t seed);

// The instance battery used by the acceptance suite.
std::vector<Scenario> standard_scenarios();

}  // namespace morita
