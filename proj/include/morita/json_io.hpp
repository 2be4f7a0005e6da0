#pragma once

#include <json.hpp>

#include <string>

#include "morita/generator.hpp"
#include "morita/report.hpp"

namespace morita {

using json = nlohmann::json;

// Matrix wire format: {"rows": r, "cols": c, "data": [[re, im], ...]} row-major.
json matrix_to_json(const Mat& m);
Mat matrix_from_json(const json& j);

// Algebra: {"ambient_dim": N, "basis": [Matrix, ...]}.  The unit is recovered
// on ingest by solving u b = b u = b over the span, and all algebra
// invariants are re-validated.
json algebra_to_json(const StarAlgebra& alg);
StarAlgebra algebra_from_json(const json& j);

// Inclusion: {"A": Algebra, "C": Algebra}.
json inclusion_to_json(const Inclusion& inc);
Inclusion inclusion_from_json(const json& j);

// Pair: {"left": Inclusion, "right": Inclusion, "Y_basis": [...], "X_basis": [...]}.
json pair_to_json(const EquivalencePair& pair);
EquivalencePair pair_from_json(const json& j);

json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const json& j);

// Bundle: {"schema": 1, "name", "scenario", "pair",
//          "phi": {"source": "C", "target": "A", "coeffs": Matrix},
//          "quasi_basis": {"pairs": [[M, M], ...], "owner_map": "phi"}? }
// Map endpoints are named against the bundle: "A", "B", "C", "D".
json bundle_to_json(const Bundle& bundle);
Bundle bundle_from_json(const json& j);

json report_to_json(const Report& rep);

void write_json_file(const std::string& path, const json& j);
json read_json_file(const std::string& path);

}  // namespace morita
