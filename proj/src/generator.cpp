#include "morita/generator.hpp"

#include <random>
#include <stdexcept>

namespace morita {

namespace {

CVec random_coords(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  CVec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = cplx(gauss(rng), gauss(rng));
  return v;
}

// Unitary from a seeded skew-adjoint element of the algebra span.
Mat random_unitary_in(const StarAlgebra& alg, std::mt19937_64& rng) {
  Mat g = alg.from_coords(random_coords(rng, alg.dim()));
  Mat h = (g + g.adjoint().eval()) / 2.0;
  h /= std::max(1.0, operator_norm(h));
  // exp(i h) restricted to the unit's range, identity elsewhere.
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  Eigen::VectorXcd phase(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < phase.size(); ++k) {
    phase(k) = std::exp(cplx(0.0, es.eigenvalues()(k)));
  }
  Mat u = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
  const Mat& unit = alg.unit();
  Mat amb = Mat::Identity(unit.rows(), unit.cols());
  return unit * u * unit + (amb - unit);
}

}  // namespace

std::string to_string(MapKind kind) {
  switch (kind) {
    case MapKind::trace_ce: return "trace_ce";
    case MapKind::weighted_trace: return "weighted_trace";
    case MapKind::random_bimodule: return "random_bimodule";
    case MapKind::shifted: return "shifted";
  }
  return "trace_ce";
}

MapKind map_kind_from_string(const std::string& s) {
  if (s == "trace_ce") return MapKind::trace_ce;
  if (s == "weighted_trace") return MapKind::weighted_trace;
  if (s == "random_bimodule") return MapKind::random_bimodule;
  if (s == "shifted") return MapKind::shifted;
  throw std::invalid_argument("unknown map kind: " + s);
}

int Scenario::ambient_dim() const {
  int m = 0;
  for (auto [d, mu] : a_blocks) m += d * mu;
  return m;
}

int bimodule_map_space_dim(const Inclusion& inc) {
  const StarAlgebra& A = inc.small;
  const StarAlgebra& C = inc.large;
  const int dA = A.dim(), dC = C.dim();
  std::vector<Mat> rows;
  auto side_matrix = [&](const MatSpan& span, const Mat& a, const Mat& a2) {
    Mat m(span.dim(), span.dim());
    for (int j = 0; j < span.dim(); ++j) m.col(j) = span.coords(a * span.basis()[j] * a2);
    return m;
  };
  for (const Mat& a : A.basis())
    for (const Mat& a2 : A.basis()) {
      Mat mc = side_matrix(C.span(), a, a2);
      Mat ma = side_matrix(A.span(), a, a2);
      rows.push_back(kron(mc.transpose(), Mat::Identity(dA, dA)) -
                     kron(Mat::Identity(dC, dC), ma));
    }
  Eigen::Index total = 0;
  for (const Mat& r : rows) total += r.rows();
  Mat system(total, static_cast<Eigen::Index>(dA) * dC);
  Eigen::Index at = 0;
  for (const Mat& r : rows) {
    system.block(at, 0, r.rows(), r.cols()) = r;
    at += r.rows();
  }
  return static_cast<int>(nullspace(system, 1.0).size());
}

BimoduleMap random_bimodule_map(const Inclusion& inc, std::uint64_t seed) {
  const StarAlgebra& A = inc.small;
  const StarAlgebra& C = inc.large;
  const int dA = A.dim(), dC = C.dim();
  std::vector<Mat> rows;
  auto side_matrix = [&](const MatSpan& span, const Mat& a, const Mat& a2) {
    Mat m(span.dim(), span.dim());
    for (int j = 0; j < span.dim(); ++j) m.col(j) = span.coords(a * span.basis()[j] * a2);
    return m;
  };
  for (const Mat& a : A.basis())
    for (const Mat& a2 : A.basis()) {
      Mat mc = side_matrix(C.span(), a, a2);
      Mat ma = side_matrix(A.span(), a, a2);
      rows.push_back(kron(mc.transpose(), Mat::Identity(dA, dA)) -
                     kron(Mat::Identity(dC, dC), ma));
    }
  Eigen::Index total = 0;
  for (const Mat& r : rows) total += r.rows();
  Mat system(total, static_cast<Eigen::Index>(dA) * dC);
  Eigen::Index at = 0;
  for (const Mat& r : rows) {
    system.block(at, 0, r.rows(), r.cols()) = r;
    at += r.rows();
  }
  std::vector<Mat> kernel = nullspace(system, 1.0);
  Mat coeffs = Mat::Zero(dA, dC);
  if (!kernel.empty() && seed != 0) {
    std::mt19937_64 rng(seed);
    CVec v = CVec::Zero(static_cast<Eigen::Index>(dA) * dC);
    for (const Mat& k : kernel) v += cplx(std::normal_distribution<double>(0.0, 1.0)(rng),
                                          std::normal_distribution<double>(0.0, 1.0)(rng)) *
                                     k.col(0);
    if (v.norm() > 1e-14) v /= v.norm();
    for (int j = 0; j < dC; ++j) coeffs.col(j) = v.segment(static_cast<Eigen::Index>(j) * dA, dA);
  }
  BimoduleMap phi{C, A, std::move(coeffs)};
  if (bimodule_residual(inc, phi) > kAlgebraicTol) {
    throw std::runtime_error("random_bimodule_map: sampled map failed validation");
  }
  return phi;
}

Mat random_commutant_positive(const Inclusion& inc, std::uint64_t seed) {
  StarAlgebra K = relative_commutant(inc);
  std::mt19937_64 rng(seed ^ 0xc0ffee);
  Mat w = K.from_coords(random_coords(rng, K.dim()));
  Mat h = w.adjoint() * w + 0.2 * K.unit();
  h = K.project(h);
  h /= operator_norm(h);
  return h;
}

Bundle generate(const Scenario& scenario) {
  const int m = scenario.ambient_dim();
  if (m <= 0 || m * scenario.n > 64) {
    throw std::invalid_argument("generate: ambient dimension out of range");
  }
  if (static_cast<int>(scenario.projection_ranks.size()) != scenario.n) {
    throw std::invalid_argument("generate: projection rank pattern must have n entries");
  }
  std::mt19937_64 rng(scenario.seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);

  // C = M_m; A = block-diagonal multimatrix algebra inside it.
  StarAlgebra C;
  {
    std::vector<Mat> full;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        Mat e = Mat::Zero(m, m);
        e(i, j) = 1.0;
        full.push_back(e);
      }
    C = StarAlgebra::from_span(full, Mat::Identity(m, m));
  }
  std::vector<Mat> gens;
  std::vector<Mat> centrals;  // minimal central projections of A, one per block
  {
    int offset = 0;
    for (auto [d, mu] : scenario.a_blocks) {
      if (d < 1 || mu < 1) throw std::invalid_argument("generate: bad block spec");
      // generators of M_d spread over the multiplicity copies
      for (int r = 0; r + 1 < d; ++r) {
        Mat g = Mat::Zero(m, m);
        for (int c = 0; c < mu; ++c) {
          int base = offset + c * d;
          g(base + r, base + r + 1) = 1.0;
        }
        gens.push_back(g);
      }
      Mat z = Mat::Zero(m, m);
      for (int c = 0; c < mu; ++c)
        for (int r = 0; r < d; ++r) z(offset + c * d + r, offset + c * d + r) = 1.0;
      gens.push_back(z);
      centrals.push_back(z);
      offset += d * mu;
    }
  }
  StarAlgebra A = StarAlgebra::from_generators(m, gens);
  if (scenario.conjugate) {
    Mat u = random_unitary_in(C, rng);
    std::vector<Mat> moved;
    for (const Mat& a : A.basis()) moved.push_back(u * a * u.adjoint());
    A = StarAlgebra::from_span(moved, Mat::Identity(m, m));
    for (Mat& z : centrals) z = u * z * u.adjoint();
  }
  Inclusion inc(A, C);

  // Projection in M_n(A) following the per-slot rank pattern, roughened by a
  // seeded unitary of M_n(A).
  const int L = static_cast<int>(scenario.a_blocks.size());
  StarAlgebra MnA = matrix_amplification(A, scenario.n);
  Mat q = Mat::Zero(static_cast<Eigen::Index>(m) * scenario.n,
                    static_cast<Eigen::Index>(m) * scenario.n);
  for (int slot = 0; slot < scenario.n; ++slot) {
    int r = scenario.projection_ranks[slot];
    if (r < 0 || r > L) throw std::invalid_argument("generate: rank out of range");
    Mat qs = Mat::Zero(m, m);
    for (int k = 0; k < r; ++k) qs += centrals[k];
    Mat slot_unit = Mat::Zero(scenario.n, scenario.n);
    slot_unit(slot, slot) = 1.0;
    q += kron(slot_unit, qs);
  }
  Mat u = random_unitary_in(MnA, rng);
  Mat p = u * q * u.adjoint();
  p = MnA.project((p + p.adjoint().eval()) / 2.0);

  EquivalencePair pair = make_corner_pair(inc, scenario.n, p);

  Bundle bundle;
  bundle.scenario = scenario;
  bundle.inclusion = inc;
  bundle.pair = pair;
  bundle.name = "seed" + std::to_string(scenario.seed) + "-" + to_string(scenario.map_kind);

  switch (scenario.map_kind) {
    case MapKind::trace_ce: {
      bundle.phi = trace_conditional_expectation(inc);
      bundle.qb = construct_for_ce(inc, bundle.phi);
      break;
    }
    case MapKind::weighted_trace: {
      BimoduleMap E = trace_conditional_expectation(inc);
      Mat h = random_commutant_positive(inc, scenario.seed);
      bundle.phi = BimoduleMap::from_action(
          inc.large, inc.small, [&](const Mat& c) { return E.apply(inc.large.project(h * c)); });
      QuasiBasis base = construct_for_ce(inc, E);
      StarAlgebra K = relative_commutant(inc);
      Mat h_inv = K.project(h.completeOrthogonalDecomposition().pseudoInverse());
      bundle.qb = shift_quasi_basis_left(base, h_inv);
      break;
    }
    case MapKind::shifted: {
      BimoduleMap E = trace_conditional_expectation(inc);
      Mat h = random_commutant_positive(inc, scenario.seed + 17);
      bundle.phi = BimoduleMap::from_action(
          inc.large, inc.small, [&](const Mat& c) { return E.apply(inc.large.project(c * h)); });
      QuasiBasis base = construct_for_ce(inc, E);
      StarAlgebra K = relative_commutant(inc);
      Mat h_inv = K.project(h.completeOrthogonalDecomposition().pseudoInverse());
      bundle.qb = shift_quasi_basis_right(base, h_inv);
      break;
    }
    case MapKind::random_bimodule: {
      bundle.phi = random_bimodule_map(inc, scenario.seed);
      break;
    }
  }
  if (bimodule_residual(inc, bundle.phi) > kAlgebraicTol) {
    throw std::runtime_error("generate: map failed bimodule validation");
  }
  if (bundle.qb) {
    Report rep = verify_quasi_basis(inc.large, bundle.phi, *bundle.qb);
    if (!rep.pass()) throw std::runtime_error("generate: quasi-basis failed verification");
  }
  return bundle;
}

std::vector<std::string> preset_names() {
  return {"trivial", "corner-m2", "corner-diag", "weighted-trace", "chain-m2"};
}

Scenario preset_scenario(const std::string& name, std::uint64_t seed) {
  Scenario s;
  s.seed = seed;
  if (name == "trivial") {
    s.a_blocks = {{1, 1}, {1, 1}};
    s.n = 1;
    s.projection_ranks = {2};
    s.map_kind = MapKind::trace_ce;
  } else if (name == "corner-m2") {
    s.a_blocks = {{1, 2}};
    s.n = 2;
    s.projection_ranks = {1, 0};
    s.map_kind = MapKind::trace_ce;
  } else if (name == "corner-diag") {
    s.a_blocks = {{1, 1}, {1, 1}};
    s.n = 2;
    s.projection_ranks = {2, 1};
    s.map_kind = MapKind::trace_ce;
  } else if (name == "weighted-trace") {
    s.a_blocks = {{1, 2}};
    s.n = 2;
    s.projection_ranks = {1, 0};
    s.map_kind = MapKind::weighted_trace;
  } else if (name == "chain-m2") {
    s.a_blocks = {{1, 2}};
    s.n = 2;
    s.projection_ranks = {1, 0};
    s.map_kind = MapKind::random_bimodule;
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  return s;
}

std::vector<Scenario> standard_scenarios() {
  std::vector<Scenario> out;
  std::uint64_t seed = 1;
  auto push = [&](std::vector<std::pair<int, int>> blocks, int n, std::vector<int> ranks,
                  MapKind kind, bool conj) {
    Scenario s;
    s.seed = seed++;
    s.a_blocks = std::move(blocks);
    s.n = n;
    s.projection_ranks = std::move(ranks);
    s.map_kind = kind;
    s.conjugate = conj;
    out.push_back(std::move(s));
  };
  for (MapKind kind :
       {MapKind::trace_ce, MapKind::weighted_trace, MapKind::random_bimodule, MapKind::shifted}) {
    push({{1, 2}}, 1, {1}, kind, false);
    push({{1, 2}}, 2, {1, 0}, kind, false);
    push({{1, 1}, {1, 1}}, 2, {2, 1}, kind, false);
    push({{1, 1}, {1, 1}}, 2, {2, 0}, kind, true);
    push({{2, 1}}, 2, {1, 1}, kind, false);
    push({{1, 1}, {2, 1}}, 2, {2, 1}, kind, true);
  }
  return out;
}

}  // namespace morita
