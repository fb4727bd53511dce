#include "ocp/eluder.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace ocp {

Index numerical_rank(const Eigen::Ref<const MatrixXd>& m) {
  if (m.size() == 0) return 0;
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0;
  Eigen::FullPivLU<MatrixXd> lu(m);
  lu.setThreshold(kRankTolerance);  // relative to the first pivot, which is max |entry|
  return lu.rank();
}

bool in_row_span(const Eigen::Ref<const RowVectorXd>& v, const Eigen::Ref<const MatrixXd>& rows) {
  if (rows.rows() == 0) return v.cwiseAbs().maxCoeff() <= kRankTolerance;
  MatrixXd stacked(rows.rows() + 1, rows.cols());
  stacked.topRows(rows.rows()) = rows;
  stacked.bottomRows(1) = v;
  return numerical_rank(stacked) == numerical_rank(rows);
}

namespace {

MatrixXd gather_rows(const MatrixXd& m, std::span<const Index> idx) {
  MatrixXd out(static_cast<Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = m.row(idx[i]);
  return out;
}

std::int64_t choose(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Calls f on every k-subset of {0..n-1} in lexicographic order until f returns true.
template <typename F>
bool any_subset(int n, int k, F&& f) {
  std::vector<Index> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    if (f(std::span<const Index>(idx))) return true;
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return false;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

MatrixXd gather_cols(const Eigen::Ref<const MatrixXd>& m, std::span<const Index> idx) {
  MatrixXd out(m.rows(), static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Index>(j)) = m.col(idx[j]);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

DependenceOracle DependenceOracle::linear(const Shape& shape, MatrixXd phi) {
  if (phi.rows() != shape.size()) throw std::invalid_argument("DependenceOracle: need one feature row per triple");
  DependenceOracle o(Method::linear, shape);
  o.phi_ = std::move(phi);
  return o;
}

DependenceOracle DependenceOracle::tabular(const Shape& shape) {
  return linear(shape, MatrixXd::Identity(shape.size(), shape.size()));
}

DependenceOracle DependenceOracle::polytope(const LinearParametricClass& cls) {
  const MatrixXd eq = implied_equalities(cls.base);
  const Index d = cls.param_dim();
  if (eq.rows() == 0) return linear(cls.features.shape, cls.features.phi);
  Eigen::FullPivLU<MatrixXd> lu(eq);
  lu.setThreshold(kRankTolerance);
  if (lu.rank() == d) throw std::invalid_argument("DependenceOracle: polytope is a single point");
  const MatrixXd directions = lu.kernel();
  return linear(cls.features.shape, cls.features.phi * directions);
}

DependenceOracle DependenceOracle::finite(const FiniteClass& cls) {
  DependenceOracle o(Method::finite, cls.shape);
  o.members_ = cls.members;
  return o;
}

DependenceOracle DependenceOracle::sparse(const Shape& shape, SparseClassSpec spec) {
  if (spec.phi.rows() != shape.size()) throw std::invalid_argument("DependenceOracle: need one feature row per triple");
  if (spec.k0 < 1 || 2 * spec.k0 > spec.phi.cols())
    throw std::invalid_argument("DependenceOracle: sparse class needs 1 <= k0 and 2 k0 <= K");
  DependenceOracle o(Method::sparse, shape);
  o.phi_ = std::move(spec.phi);
  o.k0_ = spec.k0;
  return o;
}

bool DependenceOracle::dependent(Index z, std::span<const Index> preds) const {
  switch (method_) {
    case Method::linear:
      return in_row_span(phi_.row(z), gather_rows(phi_, preds));
    case Method::sparse:
      return !l_independent(phi_.row(z), gather_rows(phi_, preds), 2 * k0_);
    case Method::finite: {
      const double tol = kFiniteTolerance;
      for (std::size_t i = 0; i < members_.size(); ++i) {
        for (std::size_t j = i + 1; j < members_.size(); ++j) {
          const auto& p = members_[i];
          const auto& q = members_[j];
          const bool agree = std::all_of(preds.begin(), preds.end(),
                                         [&](Index y) { return std::abs(p[y] - q[y]) <= tol; });
          if (agree && std::abs(p[z] - q[z]) > tol) return false;
        }
      }
      return true;
    }
  }
  return true;
}

DependenceOracle::Method parse_dependence_method(const std::string& tag) {
  if (tag == "linear") return DependenceOracle::Method::linear;
  if (tag == "finite") return DependenceOracle::Method::finite;
  if (tag == "sparse") return DependenceOracle::Method::sparse;
  throw std::invalid_argument("unsupported dependence method '" + tag + "'");
}

bool is_dependent(const Triple& z, std::span<const Triple> predecessors, const DependenceOracle& oracle) {
  const Shape& s = oracle.shape();
  std::vector<Index> flat;
  flat.reserve(predecessors.size());
  for (const auto& y : predecessors) flat.push_back(s.flat(y));
  return oracle.dependent(s.flat(z), flat);
}

std::vector<Triple> all_triples(const Shape& shape) {
  std::vector<Triple> out;
  out.reserve(static_cast<std::size_t>(shape.size()));
  for (Index i = 0; i < shape.size(); ++i) out.push_back(shape.triple(i));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Longest independent sequence over n items; independent(e, mask) says whether
// item e is independent of the item set `mask`. Dependence is order-free, so a
// sequence is valid iff each prefix set is reachable by adding one independent item.
template <typename Independent>
std::vector<int> longest_sequence(int n, Independent&& independent) {
  const std::uint32_t full = (n == 0) ? 0u : ((1u << n) - 1u);
  std::vector<signed char> parent(std::size_t(full) + 1, -1);
  std::vector<bool> reachable(std::size_t(full) + 1, false);
  reachable[0] = true;
  std::uint32_t best = 0;
  for (std::uint32_t mask = 1; mask <= full && full != 0; ++mask) {
    for (int e = 0; e < n; ++e) {
      if (!(mask & (1u << e))) continue;
      const std::uint32_t rest = mask & ~(1u << e);
      if (!reachable[rest]) continue;
      if (independent(e, rest)) {
        reachable[mask] = true;
        parent[mask] = static_cast<signed char>(e);
        break;
      }
    }
    if (reachable[mask] && std::popcount(mask) > std::popcount(best)) best = mask;
  }
  std::vector<int> seq;
  for (std::uint32_t m = best; m != 0; m &= ~(1u << parent[m])) seq.push_back(parent[m]);
  std::reverse(seq.begin(), seq.end());
  return seq;
}

}  // namespace

EluderResult eluder_dimension_exact(std::span<const Triple> domain, const DependenceOracle& oracle) {
  const int n = static_cast<int>(domain.size());
  if (n > kExactDomainBudget)
    throw BudgetExceeded("eluder_dimension_exact: domain of " + std::to_string(n) +
                         " exceeds the exhaustive budget of " + std::to_string(kExactDomainBudget));
  const Shape& s = oracle.shape();
  std::vector<Index> flat;
  for (const auto& z : domain) flat.push_back(s.flat(z));
  std::vector<Index> preds;
  const auto seq = longest_sequence(n, [&](int e, std::uint32_t mask) {
    preds.clear();
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) preds.push_back(flat[i]);
    return !oracle.dependent(flat[e], preds);
  });
  EluderResult r;
  r.dimension = static_cast<int>(seq.size());
  for (int e : seq) r.witness.push_back(domain[e]);
  return r;
}

EluderResult eluder_dimension_greedy(std::span<const Triple> domain, const DependenceOracle& oracle) {
  const Shape& s = oracle.shape();
  EluderResult r;
  std::vector<Index> kept;
  for (const auto& z : domain) {
    if (!oracle.dependent(s.flat(z), kept)) {
      kept.push_back(s.flat(z));
      r.witness.push_back(z);
    }
  }
  r.dimension = static_cast<int>(kept.size());
  return r;
}

// ---------------------------------------------------------------------------

bool l_independent(const Eigen::Ref<const RowVectorXd>& v, const Eigen::Ref<const MatrixXd>& rows, int l) {
  const int k = static_cast<int>(v.size());
  if (l < 1 || l > k) throw std::invalid_argument("l_independent: need 1 <= l <= columns");
  if (choose(k, l) > kIndexSetBudget) throw BudgetExceeded("l_independent: too many index sets");
  const RowVectorXd vv = v;
  return any_subset(k, l, [&](std::span<const Index> cols) {
    RowVectorXd sub(l);
    for (int j = 0; j < l; ++j) sub[j] = vv[cols[j]];
    return !in_row_span(sub, gather_cols(rows, cols));
  });
}

int l_rank(const MatrixXd& phi, int l) {
  const int n = static_cast<int>(phi.rows());
  if (l < 1 || l > phi.cols()) throw std::invalid_argument("l_rank: need 1 <= l <= columns");
  if (n > kExactDomainBudget) throw BudgetExceeded("l_rank: too many rows for exhaustive search");
  if (choose(static_cast<int>(phi.cols()), l) > kIndexSetBudget)
    throw BudgetExceeded("l_rank: too many index sets");
  std::vector<Index> preds;
  const auto seq = longest_sequence(n, [&](int e, std::uint32_t mask) {
    preds.clear();
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) preds.push_back(i);
    return l_independent(phi.row(e), gather_rows(phi, preds), l);
  });
  return static_cast<int>(seq.size());
}

bool is_l_full_rank(const MatrixXd& phi, int l) {
  const int n = static_cast<int>(phi.rows());
  const int k = static_cast<int>(phi.cols());
  if (l < 1 || l > std::min(n, k)) throw std::invalid_argument("is_l_full_rank: need 1 <= l <= min(rows, cols)");
  if (choose(n, l) * choose(k, l) > 1'000'000) throw BudgetExceeded("is_l_full_rank: too many submatrices");
  const bool singular = any_subset(n, l, [&](std::span<const Index> rows) {
    const MatrixXd r = gather_rows(phi, rows);
    return any_subset(k, l, [&](std::span<const Index> cols) {
      return numerical_rank(gather_cols(r, cols)) < l;
    });
  });
  return !singular;
}

int sparse_eluder_dimension(const SparseClassSpec& spec, int horizon) {
  const Index n = spec.phi.rows();
  const Index k = spec.phi.cols();
  if (spec.k0 < 1 || 2 * spec.k0 > std::min(n, k))
    throw std::invalid_argument("sparse_eluder_dimension: need 1 <= k0 and 2 k0 <= min(rows, columns)");
  if (horizon < 1) throw std::invalid_argument("sparse_eluder_dimension: horizon must be positive");
  return l_rank(spec.phi, 2 * spec.k0) * horizon;
}

}  // namespace ocp
