#include "morita/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace morita {

json matrix_to_json(const Mat& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      data.push_back({m(i, j).real(), m(i, j).imag()});
    }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Mat matrix_from_json(const json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  const auto& data = j.at("data");
  if (rows <= 0 || cols <= 0 || static_cast<int>(data.size()) != rows * cols) {
    throw std::invalid_argument("matrix_from_json: inconsistent dimensions");
  }
  Mat m(rows, cols);
  int k = 0;
  for (int i = 0; i < rows; ++i)
    for (int jj = 0; jj < cols; ++jj) {
      const auto& entry = data.at(k++);
      m(i, jj) = cplx(entry.at(0).get<double>(), entry.at(1).get<double>());
    }
  if (!all_finite(m)) throw std::invalid_argument("matrix_from_json: non-finite entry");
  return m;
}

json algebra_to_json(const StarAlgebra& alg) {
  json basis = json::array();
  for (const Mat& b : alg.basis()) basis.push_back(matrix_to_json(b));
  return json{{"ambient_dim", alg.ambient_dim()}, {"basis", std::move(basis)}};
}

StarAlgebra algebra_from_json(const json& j) {
  const int N = j.at("ambient_dim").get<int>();
  std::vector<Mat> basis;
  for (const auto& bj : j.at("basis")) basis.push_back(matrix_from_json(bj));
  if (basis.empty()) throw std::invalid_argument("algebra_from_json: empty basis");
  // Recover the unit: solve u b_i = b_i u = b_i over the span.
  const int d = static_cast<int>(basis.size());
  Mat system(static_cast<Eigen::Index>(2 * d) * N * N, d);
  CVec rhs(static_cast<Eigen::Index>(2 * d) * N * N);
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < d; ++k) {
      system.block(static_cast<Eigen::Index>(2 * i) * N * N, k, N * N, 1) =
          flatten(basis[k] * basis[i]);
      system.block(static_cast<Eigen::Index>(2 * i + 1) * N * N, k, N * N, 1) =
          flatten(basis[i] * basis[k]);
    }
    rhs.segment(static_cast<Eigen::Index>(2 * i) * N * N, N * N) = flatten(basis[i]);
    rhs.segment(static_cast<Eigen::Index>(2 * i + 1) * N * N, N * N) = flatten(basis[i]);
  }
  auto ls = solve_least_squares(system, rhs);
  if (ls.residual > kAlgebraicTol * std::sqrt(static_cast<double>(d))) {
    throw std::invalid_argument("algebra_from_json: no unit found in the span");
  }
  Mat unit = Mat::Zero(N, N);
  for (int k = 0; k < d; ++k) unit += ls.solution(k, 0) * basis[k];
  return StarAlgebra::from_span(basis, unit);
}

json inclusion_to_json(const Inclusion& inc) {
  return json{{"A", algebra_to_json(inc.small)}, {"C", algebra_to_json(inc.large)}};
}

Inclusion inclusion_from_json(const json& j) {
  return Inclusion(algebra_from_json(j.at("A")), algebra_from_json(j.at("C")));
}

json pair_to_json(const EquivalencePair& pair) {
  json y = json::array(), x = json::array();
  for (const Mat& m : pair.Y.basis()) y.push_back(matrix_to_json(m));
  for (const Mat& m : pair.X.basis()) x.push_back(matrix_to_json(m));
  return json{{"left", inclusion_to_json(pair.left)},
              {"right", inclusion_to_json(pair.right)},
              {"Y_basis", std::move(y)},
              {"X_basis", std::move(x)}};
}

EquivalencePair pair_from_json(const json& j) {
  EquivalencePair pair;
  pair.left = inclusion_from_json(j.at("left"));
  pair.right = inclusion_from_json(j.at("right"));
  std::vector<Mat> y, x;
  for (const auto& mj : j.at("Y_basis")) y.push_back(matrix_from_json(mj));
  for (const auto& mj : j.at("X_basis")) x.push_back(matrix_from_json(mj));
  if (y.empty() || x.empty()) throw std::invalid_argument("pair_from_json: empty module basis");
  pair.Y = MatSpan::from_spanning(pair.P(), pair.Q(), y);
  pair.X = MatSpan::from_spanning(pair.P(), pair.Q(), x);
  Report rep = validate_pair(pair);
  if (!rep.pass()) throw std::invalid_argument("pair_from_json: pair failed validation");
  return pair;
}

json scenario_to_json(const Scenario& s) {
  json blocks = json::array();
  for (auto [d, mu] : s.a_blocks) blocks.push_back({d, mu});
  return json{{"seed", s.seed},          {"a_blocks", std::move(blocks)},
              {"n", s.n},                {"projection_ranks", s.projection_ranks},
              {"map_kind", to_string(s.map_kind)}, {"conjugate", s.conjugate}};
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.a_blocks.clear();
  for (const auto& b : j.at("a_blocks")) {
    s.a_blocks.emplace_back(b.at(0).get<int>(), b.at(1).get<int>());
  }
  s.n = j.at("n").get<int>();
  s.projection_ranks = j.at("projection_ranks").get<std::vector<int>>();
  s.map_kind = map_kind_from_string(j.at("map_kind").get<std::string>());
  s.conjugate = j.value("conjugate", false);
  return s;
}

json bundle_to_json(const Bundle& bundle) {
  json j{{"schema", 1},
         {"name", bundle.name},
         {"scenario", scenario_to_json(bundle.scenario)},
         {"pair", pair_to_json(bundle.pair)},
         {"phi",
          {{"source", "C"}, {"target", "A"}, {"coeffs", matrix_to_json(bundle.phi.coeffs)}}}};
  if (bundle.qb) {
    json pairs = json::array();
    for (const auto& [u, v] : bundle.qb->pairs) {
      pairs.push_back({matrix_to_json(u), matrix_to_json(v)});
    }
    j["quasi_basis"] = {{"pairs", std::move(pairs)}, {"owner_map", "phi"}};
  }
  return j;
}

Bundle bundle_from_json(const json& j) {
  Bundle bundle;
  if (j.value("schema", 0) != 1) throw std::invalid_argument("bundle: unsupported schema");
  bundle.name = j.at("name").get<std::string>();
  bundle.scenario = scenario_from_json(j.at("scenario"));
  bundle.pair = pair_from_json(j.at("pair"));
  bundle.inclusion = bundle.pair.left;

  const auto& pj = j.at("phi");
  auto resolve = [&](const std::string& name) -> const StarAlgebra& {
    if (name == "A") return bundle.pair.left.small;
    if (name == "C") return bundle.pair.left.large;
    if (name == "B") return bundle.pair.right.small;
    if (name == "D") return bundle.pair.right.large;
    throw std::invalid_argument("bundle: unknown algebra name " + name);
  };
  const StarAlgebra& source = resolve(pj.at("source").get<std::string>());
  const StarAlgebra& target = resolve(pj.at("target").get<std::string>());
  Mat coeffs = matrix_from_json(pj.at("coeffs"));
  if (coeffs.rows() != target.dim() || coeffs.cols() != source.dim()) {
    throw std::invalid_argument("bundle: map coefficients have wrong shape");
  }
  bundle.phi = BimoduleMap{source, target, std::move(coeffs)};
  if (bimodule_residual(bundle.inclusion, bundle.phi) > kAlgebraicTol) {
    throw std::invalid_argument("bundle: map failed bimodule validation");
  }
  if (j.contains("quasi_basis")) {
    QuasiBasis qb;
    for (const auto& pr : j.at("quasi_basis").at("pairs")) {
      qb.pairs.emplace_back(matrix_from_json(pr.at(0)), matrix_from_json(pr.at(1)));
    }
    Report rep = verify_quasi_basis(bundle.pair.left.large, bundle.phi, qb);
    if (!rep.pass()) throw std::invalid_argument("bundle: quasi-basis failed verification");
    bundle.qb = std::move(qb);
  }
  return bundle;
}

json report_to_json(const Report& rep) {
  json checks = json::array();
  for (const auto& e : rep.entries) {
    checks.push_back({{"check", e.check},
                      {"residual", e.residual},
                      {"tolerance", e.tolerance},
                      {"pass", e.pass},
                      {"ref", e.ref}});
  }
  return json{
      {"schema", 1}, {"bundle", rep.name}, {"checks", std::move(checks)}, {"pass", rep.pass()}};
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open: " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace morita
