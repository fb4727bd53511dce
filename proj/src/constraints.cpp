#include "ocp/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace ocp {

void ConstraintSequence::append(const IntervalConstraint& c) {
  if (c.lower > c.upper) throw std::invalid_argument("IntervalConstraint: lower exceeds upper");
  items_.push_back(c);
}

ConstraintSequence ConstraintSequence::subsequence(std::span<const std::size_t> indices) const {
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  ConstraintSequence out;
  for (std::size_t i : sorted) out.append(items_.at(i));
  return out;
}

namespace {

double priority_key(ExtReal upper) {
  if (!upper.is_finite()) return upper.value();
  return std::round(upper.value() / kPriorityResolution);
}

}  // namespace

std::vector<std::size_t> select_constraints(const ConstraintSequence& c,
                                            const FeasibilityOracle& feasible) {
  std::vector<std::size_t> order(c.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> key(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) key[i] = priority_key(c[i].upper);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (key[a] != key[b]) return key[a] < key[b];
    return a > b;
  });

  std::vector<std::size_t> accepted;
  for (std::size_t tau : order)
    if (feasible(accepted, tau)) accepted.push_back(tau);
  return accepted;
}

void append_interval_rows(lp::PolyhedronXd& p, const Eigen::Ref<const RowVectorXd>& phi,
                          ExtReal lower, ExtReal upper) {
  if (upper.is_finite()) p.add_row(phi, upper.value());
  if (lower.is_finite()) p.add_row(-phi, -lower.value());
}

FoldedPolyhedron::FoldedPolyhedron(const lp::PolyhedronXd& base) : p_(base) {
  const auto a = p_.coefficients();
  for (Index i = 0; i < p_.rows(); ++i) index_.emplace(key(a.row(i)), i);
}

void FoldedPolyhedron::add(const Eigen::Ref<const RowVectorXd>& row, double bound) {
  auto [it, fresh] = index_.emplace(key(row), p_.rows());
  if (fresh) {
    p_.add_row(row, bound);
    added_.push_back(it->first);
  } else if (bound < p_.bounds()[it->second]) {
    undo_.emplace_back(it->second, p_.bounds()[it->second]);
    p_.set_bound(it->second, bound);
  }
}

void FoldedPolyhedron::add_interval(const Eigen::Ref<const RowVectorXd>& phi, ExtReal lower, ExtReal upper) {
  if (upper.is_finite()) add(phi, upper.value());
  if (lower.is_finite()) add(-phi, -lower.value());
}

void FoldedPolyhedron::mark() {
  rows_at_mark_ = p_.rows();
  added_.clear();
  undo_.clear();
}

void FoldedPolyhedron::rollback() {
  for (auto it = undo_.rbegin(); it != undo_.rend(); ++it) p_.set_bound(it->first, it->second);
  for (const auto& k : added_) index_.erase(k);
  p_.truncate(rows_at_mark_);
  mark();
}

std::vector<double> FoldedPolyhedron::key(const Eigen::Ref<const RowVectorXd>& row) {
  return std::vector<double>(row.data(), row.data() + row.size());
}

lp::PolyhedronXd resolved_polyhedron(const lp::PolyhedronXd& base, const ConstraintSequence& c,
                                     const FeatureMap& features,
                                     std::vector<std::size_t>& accepted,
                                     const lp::LpOptions& options) {
  if (base.dim() != features.dim())
    throw std::invalid_argument("resolved_polyhedron: base and feature dimensions differ");
  const VectorXd zero = VectorXd::Zero(base.dim());
  const lp::LpOutcomeXd start = lp::lp_maximize(base, zero, options);
  if (start.infeasible()) throw std::invalid_argument("resolved_polyhedron: base polyhedron is empty");

  FoldedPolyhedron working(base);
  VectorXd witness = start.point;  // some point of the current Q_C
  const double tol = options.feasibility_tol;

  accepted = select_constraints(c, [&](std::span<const std::size_t>, std::size_t tau) {
    const IntervalConstraint& con = c[tau];
    const auto phi = features.row(con.triple);
    const double at_witness = phi.dot(witness);
    working.mark();
    working.add_interval(phi, con.lower, con.upper);
    if (at_witness <= con.upper.value() + tol && at_witness >= con.lower.value() - tol) return true;
    const lp::LpOutcomeXd probe = lp::lp_maximize(working.polyhedron(), zero, options);
    if (probe.infeasible()) {
      working.rollback();
      return false;
    }
    witness = probe.point;
    return true;
  });
  return working.polyhedron();
}

lp::PolyhedronXd resolved_polyhedron(const lp::PolyhedronXd& base, const ConstraintSequence& c,
                                     const FeatureMap& features, const lp::LpOptions& options) {
  std::vector<std::size_t> accepted;
  return resolved_polyhedron(base, c, features, accepted, options);
}

}  // namespace ocp
