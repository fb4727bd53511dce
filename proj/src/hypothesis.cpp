#include "ocp/hypothesis.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ocp {

void reject_unsupported_class(std::string_view kind) {
  if (kind == "sigmoid" || kind == "quadratic") throw UnsupportedClassError(std::string(kind));
}

ExtReal HypothesisEngine::sup_max(int state, int period) const {
  ExtReal best = ExtReal::neg_inf();
  for (int a = 0; a < shape().actions; ++a) best = max(best, sup({state, a, period}));
  return best;
}

namespace {

ExtReal to_ext(const lp::LpOutcomeXd& out, bool maximize) {
  if (out.infeasible()) throw std::logic_error("hypothesis engine: resolved set is empty");
  if (out.unbounded()) return maximize ? ExtReal::pos_inf() : ExtReal::neg_inf();
  return out.value;
}

}  // namespace

// ---------------------------------------------------------------------------

LinearParametricClass::LinearParametricClass(FeatureMap f, lp::PolyhedronXd b)
    : features(std::move(f)), base(std::move(b)) {
  if (features.phi.rows() != features.shape.size())
    throw std::invalid_argument("LinearParametricClass: need one feature row per triple");
  if (base.dim() != features.dim())
    throw std::invalid_argument("LinearParametricClass: base polyhedron dimension mismatch");
  if (!features.phi.allFinite())
    throw std::invalid_argument("LinearParametricClass: features must be finite");
  if (!lp::lp_feasible(base)) throw std::invalid_argument("LinearParametricClass: empty base polyhedron");
}

LinearParametricClass LinearParametricClass::tabular(const Shape& shape) {
  return span(shape, MatrixXd::Identity(shape.size(), shape.size()));
}

LinearParametricClass LinearParametricClass::span(const Shape& shape, MatrixXd phi) {
  const Index d = phi.cols();
  return LinearParametricClass(FeatureMap{shape, std::move(phi)}, lp::PolyhedronXd(d));
}

LinearParametricClass LinearParametricClass::indicators(const Shape& shape, const Partition& partition) {
  partition.periods(shape);
  MatrixXd phi = MatrixXd::Zero(shape.size(), partition.count);
  for (Index i = 0; i < shape.size(); ++i) phi(i, partition.ids[i]) = 1.0;
  return span(shape, std::move(phi));
}

LinearEngine::LinearEngine(LinearParametricClass cls, lp::LpOptions options)
    : cls_(std::move(cls)), options_(options), resolved_(cls_.base) {
  witness_ = lp::lp_maximize(cls_.base, VectorXd(VectorXd::Zero(cls_.base.dim())), options_).point;
}

void LinearEngine::invalidate() {
  presolved_.reset();
  sup_cache_.clear();
  inf_cache_.clear();
  inf_max_cache_.clear();
}

const lp::Presolved<double>& LinearEngine::presolved() const {
  if (!presolved_) presolved_.emplace(resolved_.polyhedron(), options_);
  return *presolved_;
}

void LinearEngine::commit(std::span<const IntervalConstraint> constraints) {
  const std::size_t first = sequence_.size();
  sequence_.append(constraints);
  invalidate();
  const double tol = options_.feasibility_tol;
  resolved_.mark();
  bool at_witness = true;
  for (const auto& c : constraints) {
    const auto phi = cls_.features.row(c.triple);
    resolved_.add_interval(phi, c.lower, c.upper);
    const double v = phi.dot(witness_);
    at_witness = at_witness && v <= c.upper.value() + tol && v >= c.lower.value() - tol;
  }
  if (!at_witness) {
    const lp::LpOutcomeXd probe =
        lp::lp_maximize(resolved_.polyhedron(), VectorXd(VectorXd::Zero(cls_.features.dim())), options_);
    if (probe.infeasible()) {
      resolved_ = FoldedPolyhedron(resolved_polyhedron(cls_.base, sequence_, cls_.features, accepted_, options_));
      std::sort(accepted_.begin(), accepted_.end());
      witness_ = lp::lp_maximize(resolved_.polyhedron(), VectorXd(VectorXd::Zero(cls_.features.dim())), options_).point;
      return;
    }
    witness_ = probe.point;
  }
  for (std::size_t i = first; i < sequence_.size(); ++i) accepted_.push_back(i);
}

ExtReal LinearEngine::sup(const Triple& z) const {
  const Index key = shape().flat(z);
  if (auto it = sup_cache_.find(key); it != sup_cache_.end()) return it->second;
  const VectorXd c = cls_.features.row(z).transpose();
  const ExtReal v = to_ext(presolved().maximize(c), true);
  sup_cache_.emplace(key, v);
  return v;
}

ExtReal LinearEngine::inf(const Triple& z) const {
  const Index key = shape().flat(z);
  if (auto it = inf_cache_.find(key); it != inf_cache_.end()) return it->second;
  const VectorXd c = cls_.features.row(z).transpose();
  const ExtReal v = to_ext(presolved().minimize(c), false);
  inf_cache_.emplace(key, v);
  return v;
}

ExtReal LinearEngine::inf_max(int state, int period) const {
  const Index key = Index(period) * shape().states + state;
  if (auto it = inf_max_cache_.find(key); it != inf_max_cache_.end()) return it->second;
  // Epigraph form: min s over (theta, s) with phi(x, a, t) . theta <= s for every a.
  const Index d = cls_.features.dim();
  const int actions = shape().actions;
  const lp::Presolved<double>& pre = presolved();
  std::vector<Index> support;
  bool boxed = true;
  for (int act = 0; act < actions && boxed; ++act) {
    const auto phi = cls_.features.row({state, act, period});
    for (Index k = 0; k < d; ++k) {
      if (phi[k] == 0.0) continue;
      if (pre.coupled(k)) {
        boxed = false;
        break;
      }
      support.push_back(k);
    }
  }
  lp::PolyhedronXd epi;
  if (boxed) {
    // The features only touch box-bounded variables, so the other coordinates
    // drop out: the LP lives on the support plus s.
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    const Index n = static_cast<Index>(support.size());
    epi = lp::PolyhedronXd(n + 1);
    RowVectorXd row = RowVectorXd::Zero(n + 1);
    for (Index s = 0; s < n; ++s) {
      row.setZero();
      if (std::isfinite(pre.upper(support[s]))) {
        row[s] = 1.0;
        epi.add_row(row, pre.upper(support[s]));
      }
      if (std::isfinite(pre.lower(support[s]))) {
        row[s] = -1.0;
        epi.add_row(row, -pre.lower(support[s]));
      }
    }
    for (int act = 0; act < actions; ++act) {
      const auto phi = cls_.features.row({state, act, period});
      for (Index s = 0; s < n; ++s) row[s] = phi[support[s]];
      row[n] = -1.0;
      epi.add_row(row, 0.0);
    }
  } else {
    epi = lp::PolyhedronXd(d + 1);
    RowVectorXd row(d + 1);
    const auto& resolved = resolved_.polyhedron();
    const auto a = resolved.coefficients();
    const auto b = resolved.bounds();
    for (Index i = 0; i < resolved.rows(); ++i) {
      row.head(d) = a.row(i);
      row[d] = 0.0;
      epi.add_row(row, b[i]);
    }
    for (int act = 0; act < actions; ++act) {
      row.head(d) = cls_.features.row({state, act, period});
      row[d] = -1.0;
      epi.add_row(row, 0.0);
    }
  }
  VectorXd c = VectorXd::Zero(epi.dim());
  c[epi.dim() - 1] = 1.0;
  const ExtReal v = to_ext(lp::lp_minimize(epi, c, options_), false);
  inf_max_cache_.emplace(key, v);
  return v;
}

bool LinearEngine::feasible(const IntervalConstraint& c) const {
  lp::PolyhedronXd probe = resolved_.polyhedron();
  append_interval_rows(probe, cls_.features.row(c.triple), c.lower, c.upper);
  return lp::lp_feasible(probe, options_);
}

// ---------------------------------------------------------------------------

FiniteClass::FiniteClass(Shape s, std::vector<VectorXd> m) : shape(s), members(std::move(m)) {
  if (members.empty()) throw std::invalid_argument("FiniteClass: needs at least one member");
  for (const auto& q : members)
    if (q.size() != shape.size()) throw std::invalid_argument("FiniteClass: member length must be |Z|");
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::size_t j = i + 1; j < members.size(); ++j)
      if (members[i] == members[j]) throw std::invalid_argument("FiniteClass: members must be distinct");
}

FiniteEngine::FiniteEngine(FiniteClass cls) : cls_(std::move(cls)) {
  survivors_.resize(cls_.members.size());
  for (std::size_t i = 0; i < survivors_.size(); ++i) survivors_[i] = i;
}

bool FiniteEngine::satisfies(std::size_t member, const IntervalConstraint& c) const {
  const double v = cls_.members[member][cls_.shape.flat(c.triple)];
  return v >= c.lower.value() - kFiniteTolerance && v <= c.upper.value() + kFiniteTolerance;
}

void FiniteEngine::commit(std::span<const IntervalConstraint> constraints) {
  sequence_.append(constraints);
  std::vector<std::size_t> alive(cls_.members.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
  select_constraints(sequence_, [&](std::span<const std::size_t>, std::size_t tau) {
    std::vector<std::size_t> next;
    for (std::size_t m : alive)
      if (satisfies(m, sequence_[tau])) next.push_back(m);
    if (next.empty()) return false;
    alive = std::move(next);
    return true;
  });
  survivors_ = std::move(alive);
}

ExtReal FiniteEngine::sup(const Triple& z) const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t m : survivors_) best = std::max(best, cls_.members[m][cls_.shape.flat(z)]);
  return best;
}

ExtReal FiniteEngine::inf(const Triple& z) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m : survivors_) best = std::min(best, cls_.members[m][cls_.shape.flat(z)]);
  return best;
}

ExtReal FiniteEngine::inf_max(int state, int period) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m : survivors_) {
    double top = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < cls_.shape.actions; ++a)
      top = std::max(top, cls_.members[m][cls_.shape.flat({state, a, period})]);
    best = std::min(best, top);
  }
  return best;
}

bool FiniteEngine::feasible(const IntervalConstraint& c) const {
  return std::any_of(survivors_.begin(), survivors_.end(),
                     [&](std::size_t m) { return satisfies(m, c); });
}

// ---------------------------------------------------------------------------

AggregationClass::AggregationClass(Shape shape, Partition partition, double feasibility_tol)
    : shape_(shape),
      partition_(std::move(partition)),
      tol_(feasibility_tol),
      lower_(partition_.count, ExtReal::neg_inf()),
      upper_(partition_.count, ExtReal::pos_inf()),
      live_lowers_(partition_.count) {
  partition_.periods(shape_);
}

void AggregationClass::commit(std::span<const IntervalConstraint> constraints) {
  std::vector<bool> touched(partition_.count, false);
  for (const auto& c : constraints) {
    if (c.lower > c.upper) throw std::invalid_argument("IntervalConstraint: lower exceeds upper");
    const int k = partition_of(c.triple);
    upper_[k] = min(upper_[k], c.upper);
    live_lowers_[k].insert(c.lower.value());
    touched[k] = true;
    ++committed_;
  }
  for (int k = 0; k < partition_.count; ++k) {
    if (!touched[k]) continue;
    auto& lows = live_lowers_[k];
    lows.erase(lows.upper_bound(upper_[k].value() + tol_), lows.end());
    lower_[k] = lows.empty() ? ExtReal::neg_inf() : ExtReal(*lows.rbegin());
    lower_[k] = min(lower_[k], upper_[k]);
  }
}

ExtReal AggregationClass::inf_max(int state, int period) const {
  ExtReal best = ExtReal::neg_inf();
  for (int a = 0; a < shape_.actions; ++a) best = max(best, inf({state, a, period}));
  return best;
}

bool AggregationClass::feasible(const IntervalConstraint& c) const {
  const int k = partition_of(c.triple);
  return max(lower_[k], c.lower).value() <= min(upper_[k], c.upper).value() + tol_;
}

void aggregation_fast_update(AggregationClass& cls, std::span<const IntervalConstraint> constraints) {
  cls.commit(constraints);
}

// ---------------------------------------------------------------------------

ExtReal constrained_sup(const LinearParametricClass& cls, const ConstraintSequence& c, const Triple& z) {
  LinearEngine engine(cls);
  std::vector<IntervalConstraint> all(c.begin(), c.end());
  engine.commit(all);
  return engine.sup(z);
}

ExtReal constrained_inf(const LinearParametricClass& cls, const ConstraintSequence& c, const Triple& z) {
  LinearEngine engine(cls);
  std::vector<IntervalConstraint> all(c.begin(), c.end());
  engine.commit(all);
  return engine.inf(z);
}

ExtReal constrained_sup(const FiniteClass& cls, const ConstraintSequence& c, const Triple& z) {
  FiniteEngine engine(cls);
  std::vector<IntervalConstraint> all(c.begin(), c.end());
  engine.commit(all);
  return engine.sup(z);
}

ExtReal constrained_inf(const FiniteClass& cls, const ConstraintSequence& c, const Triple& z) {
  FiniteEngine engine(cls);
  std::vector<IntervalConstraint> all(c.begin(), c.end());
  engine.commit(all);
  return engine.inf(z);
}

// ---------------------------------------------------------------------------

MatrixXd implied_equalities(const lp::PolyhedronXd& p, const lp::LpOptions& options) {
  const auto a = p.coefficients();
  const auto b = p.bounds();
  std::vector<Index> rows;
  for (Index i = 0; i < p.rows(); ++i) {
    const lp::LpOutcomeXd low = lp::lp_minimize(p, VectorXd(a.row(i).transpose()), options);
    if (low.infeasible()) throw std::invalid_argument("implied_equalities: empty polyhedron");
    if (low.optimal() && low.value >= b[i] - options.feasibility_tol) rows.push_back(i);
  }
  MatrixXd eq(static_cast<Index>(rows.size()), p.dim());
  for (std::size_t r = 0; r < rows.size(); ++r) eq.row(static_cast<Index>(r)) = a.row(rows[r]);
  return eq;
}

Index polytope_dimension(const lp::PolyhedronXd& p, const lp::LpOptions& options) {
  const MatrixXd eq = implied_equalities(p, options);
  if (eq.rows() == 0) return p.dim();
  Eigen::FullPivLU<MatrixXd> lu(eq);
  lu.setThreshold(1e-9);
  return p.dim() - lu.rank();
}

}  // namespace ocp
