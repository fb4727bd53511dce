#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "ocp/lp.hpp"
#include "ocp/types.hpp"

namespace ocp {

/// {Q : lower <= Q_t(x, a) <= upper}; `upper` is the constraint's priority key.
struct IntervalConstraint {
  Triple triple;
  ExtReal lower = ExtReal::neg_inf();
  ExtReal upper = ExtReal::pos_inf();
};

/// Append-only constraint list; position encodes recency.
class ConstraintSequence {
 public:
  ConstraintSequence() = default;

  void append(const IntervalConstraint& c);
  void append(std::span<const IntervalConstraint> cs) {
    for (const auto& c : cs) append(c);
  }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const IntervalConstraint& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  ConstraintSequence subsequence(std::span<const std::size_t> indices) const;

 private:
  std::vector<IntervalConstraint> items_;
};

/// Upper bounds closer than this fall into one priority class.
inline constexpr double kPriorityResolution = 1e-9;

/// Whether Q_C intersected with constraint `candidate` stays nonempty, where
/// Q_C is the base class cut by the constraints in `selected` (acceptance order).
using FeasibilityOracle =
    std::function<bool(std::span<const std::size_t> selected, std::size_t candidate)>;

/// Priority-ordered, conflict-skipping constraint selection.
///
/// Upper bounds are visited in ascending order with +inf last; within one upper
/// bound the sequence is scanned from the most recent constraint backwards and
/// a constraint is kept iff the oracle says the intersection stays nonempty.
/// Returns accepted indices in acceptance order.
std::vector<std::size_t> select_constraints(const ConstraintSequence& c,
                                            const FeasibilityOracle& feasible);

/// Q_t(x, a) = phi(z) . theta with one feature row per flat triple.
struct FeatureMap {
  Shape shape;
  MatrixXd phi;  // |Z| x d

  Index dim() const { return phi.cols(); }
  auto row(const Triple& z) const { return phi.row(shape.flat(z)); }
};

/// Appends phi . theta <= upper and -phi . theta <= -lower; infinite bounds emit no row.
void append_interval_rows(lp::PolyhedronXd& p, const Eigen::Ref<const RowVectorXd>& phi,
                          ExtReal lower, ExtReal upper);

/// Polyhedron under construction in which a row whose coefficients repeat an
/// existing row only tightens that row's bound. The point set is unchanged.
class FoldedPolyhedron {
 public:
  explicit FoldedPolyhedron(const lp::PolyhedronXd& base);

  void add(const Eigen::Ref<const RowVectorXd>& row, double bound);
  void add_interval(const Eigen::Ref<const RowVectorXd>& phi, ExtReal lower, ExtReal upper);

  /// Changes made after mark() can be undone by rollback().
  void mark();
  void rollback();

  const lp::PolyhedronXd& polyhedron() const { return p_; }

 private:
  static std::vector<double> key(const Eigen::Ref<const RowVectorXd>& row);

  lp::PolyhedronXd p_;
  std::map<std::vector<double>, Index> index_;
  std::vector<std::vector<double>> added_;
  std::vector<std::pair<Index, double>> undo_;
  Index rows_at_mark_ = 0;
};

/// Base polyhedron plus the rows of every constraint accepted by
/// select_constraints with an LP feasibility oracle.
lp::PolyhedronXd resolved_polyhedron(const lp::PolyhedronXd& base, const ConstraintSequence& c,
                                     const FeatureMap& features,
                                     const lp::LpOptions& options = {});

/// As above, also reporting the accepted indices.
lp::PolyhedronXd resolved_polyhedron(const lp::PolyhedronXd& base, const ConstraintSequence& c,
                                     const FeatureMap& features,
                                     std::vector<std::size_t>& accepted,
                                     const lp::LpOptions& options = {});

}  // namespace ocp
