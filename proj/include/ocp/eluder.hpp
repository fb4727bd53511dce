#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocp/hypothesis.hpp"
#include "ocp/types.hpp"

namespace ocp {

/// Search budgets for the exhaustive routines.
inline constexpr int kExactDomainBudget = 14;
inline constexpr std::int64_t kIndexSetBudget = 924;  // 12 choose 6

/// Relative rank tolerance against the largest entry.
inline constexpr double kRankTolerance = 1e-9;

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Q_0 = {Phi theta : ||theta||_0 <= k0}.
struct SparseClassSpec {
  MatrixXd phi;  // one row per element, K columns
  int k0 = 1;
};

/// Numerical rank with threshold kRankTolerance * max |entry|.
Index numerical_rank(const Eigen::Ref<const MatrixXd>& m);

/// Whether `v` lies in the row space of `rows`.
bool in_row_span(const Eigen::Ref<const RowVectorXd>& v, const Eigen::Ref<const MatrixXd>& rows);

/// Answers "is z dependent on this predecessor set" for one class, on flat indices.
class DependenceOracle {
 public:
  enum class Method { linear, finite, sparse };

  /// Q = span of the given feature columns.
  static DependenceOracle linear(const Shape& shape, MatrixXd phi);
  static DependenceOracle tabular(const Shape& shape);
  /// Linear class restricted to the affine hull of its base polyhedron.
  static DependenceOracle polytope(const LinearParametricClass& cls);
  static DependenceOracle finite(const FiniteClass& cls);
  static DependenceOracle sparse(const Shape& shape, SparseClassSpec spec);

  Method method() const { return method_; }
  const Shape& shape() const { return shape_; }

  bool dependent(Index z, std::span<const Index> predecessors) const;

 private:
  DependenceOracle(Method method, Shape shape) : method_(method), shape_(shape) {}

  Method method_;
  Shape shape_;
  MatrixXd phi_;
  std::vector<VectorXd> members_;
  int k0_ = 0;
};

/// Parses a method tag; throws std::invalid_argument on anything else.
DependenceOracle::Method parse_dependence_method(const std::string& tag);

bool is_dependent(const Triple& z, std::span<const Triple> predecessors, const DependenceOracle& oracle);

struct EluderResult {
  int dimension = 0;
  std::vector<Triple> witness;  // an independent sequence of that length
};

/// Longest sequence over `domain` with every element independent of its
/// predecessors, by exhaustive search over subsets. Throws BudgetExceeded when
/// the domain has more than kExactDomainBudget elements.
EluderResult eluder_dimension_exact(std::span<const Triple> domain, const DependenceOracle& oracle);

/// One pass over `domain`, keeping each element independent of those kept so far.
EluderResult eluder_dimension_greedy(std::span<const Triple> domain, const DependenceOracle& oracle);

/// Every triple of the shape in flat order.
std::vector<Triple> all_triples(const Shape& shape);

/// Whether some index set of size l makes v linearly independent of `rows`.
bool l_independent(const Eigen::Ref<const RowVectorXd>& v, const Eigen::Ref<const MatrixXd>& rows, int l);

/// Longest row sequence of phi with each row linearly l-independent of its predecessors.
int l_rank(const MatrixXd& phi, int l);

/// Every l x l submatrix of phi is nonsingular.
bool is_l_full_rank(const MatrixXd& phi, int l);

/// l_rank(phi, 2 k0) times the number of per-period copies.
int sparse_eluder_dimension(const SparseClassSpec& spec, int horizon = 1);

}  // namespace ocp
