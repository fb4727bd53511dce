#pragma once

#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ocp/constraints.hpp"
#include "ocp/lp.hpp"
#include "ocp/system.hpp"
#include "ocp/types.hpp"

namespace ocp {

/// Raised for hypothesis classes whose constrained sup is not LP-representable.
class UnsupportedClassError : public std::invalid_argument {
 public:
  explicit UnsupportedClassError(const std::string& kind)
      : std::invalid_argument("unsupported hypothesis class '" + kind +
                              "': constrained sup is not computable by this library") {}
};

/// Throws UnsupportedClassError for "sigmoid" and "quadratic".
void reject_unsupported_class(std::string_view kind);

/// A hypothesis class cut down to Q_C by a committed constraint sequence.
///
/// sup/inf are the optimistic and pessimistic values of Q_t(x, a) over Q_C.
/// commit() is the only mutator, so queries between commits see a fixed Q_C.
class HypothesisEngine {
 public:
  virtual ~HypothesisEngine() = default;

  virtual const Shape& shape() const = 0;

  /// Appends constraints to C and re-resolves Q_C.
  virtual void commit(std::span<const IntervalConstraint> constraints) = 0;

  /// Number of constraints committed so far (|C|).
  virtual std::size_t constraint_count() const = 0;

  virtual ExtReal sup(const Triple& z) const = 0;
  virtual ExtReal inf(const Triple& z) const = 0;

  /// inf over Q_C of max_a Q_t(state, a).
  virtual ExtReal inf_max(int state, int period) const = 0;

  /// Whether Q_C intersected with `c` is nonempty.
  virtual bool feasible(const IntervalConstraint& c) const = 0;

  /// sup over Q_C of max_a Q_t(state, a); sup and max commute.
  ExtReal sup_max(int state, int period) const;
};

// ---------------------------------------------------------------------------
// Linear-parametric classes: Q(z) = phi(z) . theta, theta in a base polyhedron.

struct LinearParametricClass {
  FeatureMap features;
  lp::PolyhedronXd base;

  LinearParametricClass(FeatureMap features, lp::PolyhedronXd base);

  Index param_dim() const { return features.dim(); }

  /// Whole space with one coordinate per triple.
  static LinearParametricClass tabular(const Shape& shape);
  /// span of the given feature columns.
  static LinearParametricClass span(const Shape& shape, MatrixXd phi);
  /// span of per-partition indicator functions.
  static LinearParametricClass indicators(const Shape& shape, const Partition& partition);
};

/// Generic engine: constraint selection with the LP feasibility oracle, then LPs
/// over the resolved polyhedron. Query results are cached until the next commit.
///
/// A commit whose constraints all meet the current resolved set is appended
/// without rerunning the selection: the selection over the longer sequence then
/// accepts exactly the old accepted set plus the new constraints.
class LinearEngine final : public HypothesisEngine {
 public:
  explicit LinearEngine(LinearParametricClass cls, lp::LpOptions options = {});

  const Shape& shape() const override { return cls_.features.shape; }
  void commit(std::span<const IntervalConstraint> constraints) override;
  std::size_t constraint_count() const override { return sequence_.size(); }
  ExtReal sup(const Triple& z) const override;
  ExtReal inf(const Triple& z) const override;
  ExtReal inf_max(int state, int period) const override;
  bool feasible(const IntervalConstraint& c) const override;

  const ConstraintSequence& constraints() const { return sequence_; }
  const lp::PolyhedronXd& resolved() const { return resolved_.polyhedron(); }
  /// Accepted positions in the sequence, ascending.
  const std::vector<std::size_t>& accepted() const { return accepted_; }
  const LinearParametricClass& hypothesis_class() const { return cls_; }

 private:
  const lp::Presolved<double>& presolved() const;
  void invalidate();

  LinearParametricClass cls_;
  lp::LpOptions options_;
  ConstraintSequence sequence_;
  FoldedPolyhedron resolved_;
  VectorXd witness_;  // a point of the resolved set
  std::vector<std::size_t> accepted_;
  mutable std::optional<lp::Presolved<double>> presolved_;
  mutable std::unordered_map<Index, ExtReal> sup_cache_;
  mutable std::unordered_map<Index, ExtReal> inf_cache_;
  mutable std::unordered_map<Index, ExtReal> inf_max_cache_;
};

// ---------------------------------------------------------------------------
// Finite classes.

struct FiniteClass {
  Shape shape;
  std::vector<VectorXd> members;  // each of length |Z|

  FiniteClass(Shape shape, std::vector<VectorXd> members);
};

/// Interval membership slack for surviving members.
inline constexpr double kFiniteTolerance = 1e-9;

class FiniteEngine final : public HypothesisEngine {
 public:
  explicit FiniteEngine(FiniteClass cls);

  const Shape& shape() const override { return cls_.shape; }
  void commit(std::span<const IntervalConstraint> constraints) override;
  std::size_t constraint_count() const override { return sequence_.size(); }
  ExtReal sup(const Triple& z) const override;
  ExtReal inf(const Triple& z) const override;
  ExtReal inf_max(int state, int period) const override;
  bool feasible(const IntervalConstraint& c) const override;

  const std::vector<std::size_t>& survivors() const { return survivors_; }
  const ConstraintSequence& constraints() const { return sequence_; }

 private:
  bool satisfies(std::size_t member, const IntervalConstraint& c) const;

  FiniteClass cls_;
  ConstraintSequence sequence_;
  std::vector<std::size_t> survivors_;
};

// ---------------------------------------------------------------------------
// State aggregation: Q_C is the box lower <= theta <= upper over partitions.

/// Per-partition interval state updated in place, one episode at a time.
///
/// Selection decomposes over partitions. Within one partition the first
/// accepted constraint carries the smallest upper bound, so the box's upper end
/// is that minimum and a constraint survives iff its lower end does not exceed
/// it. Lower ends above the current upper end can never return (the upper end
/// only decreases) and are dropped.
class AggregationClass final : public HypothesisEngine {
 public:
  AggregationClass(Shape shape, Partition partition, double feasibility_tol = 1e-7);

  const Shape& shape() const override { return shape_; }
  void commit(std::span<const IntervalConstraint> constraints) override;
  std::size_t constraint_count() const override { return committed_; }
  ExtReal sup(const Triple& z) const override { return upper_[partition_of(z)]; }
  ExtReal inf(const Triple& z) const override { return lower_[partition_of(z)]; }
  ExtReal inf_max(int state, int period) const override;
  bool feasible(const IntervalConstraint& c) const override;

  int partition_of(const Triple& z) const { return partition_.ids[shape_.flat(z)]; }
  int partitions() const { return partition_.count; }
  const Partition& partition() const { return partition_; }
  ExtReal lower(int k) const { return lower_[k]; }
  ExtReal upper(int k) const { return upper_[k]; }

 private:
  Shape shape_;
  Partition partition_;
  double tol_;
  std::vector<ExtReal> lower_;
  std::vector<ExtReal> upper_;
  std::vector<std::multiset<double>> live_lowers_;
  std::size_t committed_ = 0;
};

/// Applies one episode's constraints to the interval state.
void aggregation_fast_update(AggregationClass& cls, std::span<const IntervalConstraint> constraints);

// ---------------------------------------------------------------------------
// One-shot queries against a class and a constraint sequence.

ExtReal constrained_sup(const LinearParametricClass& cls, const ConstraintSequence& c, const Triple& z);
ExtReal constrained_inf(const LinearParametricClass& cls, const ConstraintSequence& c, const Triple& z);
ExtReal constrained_sup(const FiniteClass& cls, const ConstraintSequence& c, const Triple& z);
ExtReal constrained_inf(const FiniteClass& cls, const ConstraintSequence& c, const Triple& z);

// ---------------------------------------------------------------------------
// Polytope structure.

/// Rows of p that hold with equality at every point of p.
MatrixXd implied_equalities(const lp::PolyhedronXd& p, const lp::LpOptions& options = {});

/// Dimension of p's affine hull: dim minus the rank of the implied equalities.
Index polytope_dimension(const lp::PolyhedronXd& p, const lp::LpOptions& options = {});

}  // namespace ocp
