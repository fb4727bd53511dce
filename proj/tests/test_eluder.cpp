#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <functional>
#include <random>

#include "ocp/eluder.hpp"
#include "ocp/system.hpp"
#include "support/oracles.hpp"

using namespace ocp;

namespace {

std::vector<Index> flat_all(const Shape& s) {
  std::vector<Index> out;
  for (Index i = 0; i < s.size(); ++i) out.push_back(i);
  return out;
}

// Longest independent sequence by trying every ordered selection (n <= 6).
int brute_longest(int n, const std::function<bool(int, const std::vector<int>&)>& independent) {
  int best = 0;
  std::vector<int> seq;
  std::vector<bool> used(std::size_t(n), false);
  std::function<void()> grow = [&]() {
    best = std::max(best, int(seq.size()));
    for (int e = 0; e < n; ++e) {
      if (used[std::size_t(e)] || !independent(e, seq)) continue;
      used[std::size_t(e)] = true;
      seq.push_back(e);
      grow();
      seq.pop_back();
      used[std::size_t(e)] = false;
    }
  };
  grow();
  return best;
}

MatrixXd gather(const MatrixXd& m, const std::vector<int>& rows) {
  MatrixXd out(Index(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(Index(i)) = m.row(rows[i]);
  return out;
}

MatrixXd random_rank(std::mt19937_64& rng, int rows, int cols, int rank) {
  std::uniform_int_distribution<int> u(-3, 3);
  MatrixXd a(rows, rank), b(rank, cols);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = u(rng);
  for (Index i = 0; i < b.size(); ++i) b.data()[i] = u(rng);
  return a * b;
}

}  // namespace

TEST_CASE("rank helpers") {
  MatrixXd m(3, 3);
  m << 1, 2, 3, 2, 4, 6, 0, 1, 1;
  CHECK(numerical_rank(m) == 2);
  CHECK(numerical_rank(MatrixXd::Zero(2, 2)) == 0);
  RowVectorXd v(3);
  v << 1, 3, 4;
  CHECK(in_row_span(v, m));
  v << 0, 0, 1;
  CHECK_FALSE(in_row_span(v, m));
}

TEST_CASE("dependence: closed cases") {
  const Shape s{1, 2, 1};
  VectorXd q0(2), q1(2);
  q0 << 0.0, 0.0;
  q1 << 0.0, 1.0;
  const DependenceOracle fin = DependenceOracle::finite(FiniteClass(s, {q0, q1}));
  CHECK_FALSE(fin.dependent(1, {}));
  const std::vector<Index> pred{0};
  CHECK_FALSE(fin.dependent(1, pred));  // members agree at 0, differ at 1
  CHECK(fin.dependent(0, {}) );         // no pair differs at 0

  MatrixXd phi(2, 2);
  phi << 1.0, 2.0, 1.0, 2.0;
  const DependenceOracle lin = DependenceOracle::linear(s, phi);
  CHECK(lin.dependent(1, pred));
  CHECK_FALSE(lin.dependent(1, {}));
  CHECK(is_dependent({0, 1, 0}, std::vector<Triple>{{0, 0, 0}}, lin));
}

TEST_CASE("dependence does not depend on predecessor order") {
  std::mt19937_64 rng(41);
  const Shape s{3, 2, 2};
  const DependenceOracle lin = DependenceOracle::linear(s, random_rank(rng, int(s.size()), 6, 4));
  std::vector<VectorXd> members;
  std::uniform_int_distribution<int> u(0, 2);
  for (int m = 0; m < 8; ++m) {
    VectorXd q(s.size());
    for (Index i = 0; i < q.size(); ++i) q[i] = u(rng) + 0.1 * m;
    members.push_back(q);
  }
  const DependenceOracle fin = DependenceOracle::finite(FiniteClass(s, members));
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Index> pred = flat_all(s);
    std::shuffle(pred.begin(), pred.end(), rng);
    pred.resize(std::size_t(1 + trial % 6));
    const Index z = Index(trial) % s.size();
    std::vector<Index> shuffled = pred;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(lin.dependent(z, pred) == lin.dependent(z, shuffled));
    CHECK(fin.dependent(z, pred) == fin.dependent(z, shuffled));
  }
}

TEST_CASE("tabular dimension is |S||A|H") {
  const Shape s{2, 2, 2};
  const auto domain = all_triples(s);
  CHECK(eluder_dimension_exact(domain, DependenceOracle::tabular(s)).dimension == 8);
  CHECK(eluder_dimension_greedy(domain, DependenceOracle::tabular(s)).dimension == 8);
}

TEST_CASE("empty domain has dimension 0") {
  const DependenceOracle o = DependenceOracle::tabular(Shape{1, 1, 1});
  CHECK(eluder_dimension_exact({}, o).dimension == 0);
  CHECK(eluder_dimension_greedy({}, o).dimension == 0);
}

TEST_CASE("finite classes: at most m - 1, monotone under inclusion, greedy below exact") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> u(0, 1);
  for (int trial = 0; trial < 25; ++trial) {
    const Shape s{2, 2, 2};
    std::vector<VectorXd> members;
    while (members.size() < 6) {
      VectorXd q(s.size());
      for (Index i = 0; i < q.size(); ++i) q[i] = u(rng);
      if (std::find(members.begin(), members.end(), q) == members.end()) members.push_back(q);
    }
    const auto domain = all_triples(s);
    std::vector<int> dims;
    for (std::size_t m = 2; m <= members.size(); ++m) {
      const FiniteClass cls(s, std::vector<VectorXd>(members.begin(), members.begin() + long(m)));
      const DependenceOracle o = DependenceOracle::finite(cls);
      const EluderResult exact = eluder_dimension_exact(domain, o);
      CHECK(exact.dimension <= int(m) - 1);
      CHECK(eluder_dimension_greedy(domain, o).dimension <= exact.dimension);
      CHECK(int(exact.witness.size()) == exact.dimension);
      dims.push_back(exact.dimension);
    }
    CHECK(std::is_sorted(dims.begin(), dims.end()));
  }
}

TEST_CASE("linear span: dimension is the rank, greedy equals exact") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const Shape s{3, 2, 2};
    const int r = 1 + trial % 5;
    const MatrixXd phi = random_rank(rng, int(s.size()), 6, r);
    const int rank = int(Eigen::FullPivLU<MatrixXd>(phi).rank());
    const DependenceOracle o = DependenceOracle::linear(s, phi);
    const auto domain = all_triples(s);
    const EluderResult exact = eluder_dimension_exact(domain, o);
    CHECK(exact.dimension == rank);
    CHECK(eluder_dimension_greedy(domain, o).dimension == rank);
    // The witness is an independent sequence.
    std::vector<Index> seen;
    for (const Triple& z : exact.witness) {
      CHECK_FALSE(o.dependent(s.flat(z), seen));
      seen.push_back(s.flat(z));
    }
  }
}

TEST_CASE("adversary features have dimension K") {
  for (int k = 1; k <= 3; ++k) {
    const Shape s{2 * k, 2, 1};
    const DependenceOracle o = DependenceOracle::linear(s, adversary_features(k, 1));
    CHECK(eluder_dimension_exact(all_triples(s), o).dimension == k);
  }
  for (int h = 2; h <= 4; ++h) {
    const Shape s{6, 2, h};
    CHECK(eluder_dimension_greedy(all_triples(s), DependenceOracle::linear(s, adversary_features(3, h))).dimension ==
          3);
  }
}

TEST_CASE("polytope classes use the affine hull") {
  const Shape s{2, 2, 1};
  const MatrixXd phi = MatrixXd::Identity(4, 4);
  lp::PolyhedronXd p(4);
  for (int k = 0; k < 4; ++k) {
    RowVectorXd e = RowVectorXd::Zero(4);
    e[k] = 1.0;
    p.add_row(e, 1.0);
    p.add_row(-e, 1.0);
  }
  const auto domain = all_triples(s);
  CHECK(eluder_dimension_exact(domain, DependenceOracle::polytope(LinearParametricClass(FeatureMap{s, phi}, p)))
            .dimension == 4);
  RowVectorXd sum = RowVectorXd::Ones(4);
  p.add_equality(sum, 0.0);
  CHECK(eluder_dimension_exact(domain, DependenceOracle::polytope(LinearParametricClass(FeatureMap{s, phi}, p)))
            .dimension == 3);
}

TEST_CASE("exact search refuses large domains") {
  const Shape s{4, 2, 2};
  CHECK_THROWS_AS(eluder_dimension_exact(all_triples(s), DependenceOracle::tabular(s)), BudgetExceeded);
}

TEST_CASE("method tags") {
  CHECK(parse_dependence_method("linear") == DependenceOracle::Method::linear);
  CHECK(parse_dependence_method("finite") == DependenceOracle::Method::finite);
  CHECK(parse_dependence_method("sparse") == DependenceOracle::Method::sparse);
  CHECK_THROWS_AS(parse_dependence_method("quadratic"), std::invalid_argument);
}

TEST_CASE("sparse dependence matches the index-set search") {
  std::mt19937_64 rng(44);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Shape s{6, 1, 1};
    MatrixXd phi(6, 4);
    for (Index i = 0; i < phi.size(); ++i) phi.data()[i] = g(rng);
    if (trial % 3 == 0) phi.row(5) = phi.row(0) + phi.row(1);
    const DependenceOracle o = DependenceOracle::sparse(s, {phi, 1});
    std::vector<int> all{0, 1, 2, 3, 4, 5};
    std::shuffle(all.begin(), all.end(), rng);
    const std::vector<int> pred(all.begin(), all.begin() + 2);
    for (int z : {all[2], all[3], 5}) {
      const std::vector<Index> p{pred[0], pred[1]};
      CHECK(o.dependent(z, p) == !oracle::sparse_independent(phi.row(z), gather(phi, pred), 1));
    }
  }
}

TEST_CASE("l-rank closed forms") {
  std::mt19937_64 rng(45);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    MatrixXd phi(6, 4);
    for (Index i = 0; i < phi.size(); ++i) phi.data()[i] = g(rng);
    REQUIRE(is_l_full_rank(phi, 2));
    CHECK(l_rank(phi, 2) == 2);
    CHECK(sparse_eluder_dimension({phi, 1}) == 2);
    CHECK(sparse_eluder_dimension({phi, 1}, 3) == 6);
    CHECK(l_rank(phi, 4) == int(Eigen::FullPivLU<MatrixXd>(phi).rank()));
    CHECK(sparse_eluder_dimension({phi, 2}) == 4);
  }
  MatrixXd degenerate(4, 4);
  degenerate << 1, 0, 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1;
  CHECK_FALSE(is_l_full_rank(degenerate, 2));
}

TEST_CASE("a duplicated row never extends an l-independent sequence") {
  std::mt19937_64 rng(46);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    MatrixXd phi(5, 4);
    for (Index i = 0; i < phi.size(); ++i) phi.data()[i] = g(rng);
    phi.row(4) = phi.row(1);
    for (int l : {1, 2, 4}) {
      CHECK_FALSE(l_independent(phi.row(4), phi.topRows(2), l));
      CHECK(l_rank(phi, l) == l_rank(MatrixXd(phi.topRows(4)), l));
    }
  }
}

TEST_CASE("sparse dimension agrees with exhaustive sequence search") {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 5;
    MatrixXd phi(n, 4);
    for (Index i = 0; i < phi.size(); ++i) phi.data()[i] = g(rng);
    if (trial % 2) phi.row(3) = 2.0 * phi.row(2);
    const Shape s{n, 1, 1};
    const int via_oracle = eluder_dimension_exact(all_triples(s), DependenceOracle::sparse(s, {phi, 1})).dimension;
    const int brute = brute_longest(n, [&](int e, const std::vector<int>& seq) {
      if (seq.empty()) return phi.row(e).cwiseAbs().maxCoeff() > 1e-9;
      return oracle::sparse_independent(phi.row(e), gather(phi, seq), 1);
    });
    CHECK(via_oracle == brute);
    CHECK(sparse_eluder_dimension({phi, 1}) == brute);
  }
}
