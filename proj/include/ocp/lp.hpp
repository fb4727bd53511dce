#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ocp/types.hpp"

namespace ocp::lp {

/// {theta in R^d : A theta <= b}. Rows are stored row-major so appending is cheap.
template <typename Scalar>
class Polyhedron {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = VecX<Scalar>;

  explicit Polyhedron(Index dim = 0) : dim_(dim) {}

  template <typename DerivedA, typename DerivedB>
  Polyhedron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b)
      : dim_(a.cols()) {
    if (a.rows() != b.size()) throw std::invalid_argument("Polyhedron: row count mismatch");
    for (Index i = 0; i < a.rows(); ++i) add_row(a.row(i), b[i]);
  }

  static Polyhedron whole_space(Index dim) { return Polyhedron(dim); }

  Index dim() const { return dim_; }
  Index rows() const { return static_cast<Index>(bounds_.size()); }

  Eigen::Map<const Matrix> coefficients() const {
    return Eigen::Map<const Matrix>(coeffs_.data(), rows(), dim_);
  }
  Eigen::Map<const Vector> bounds() const { return Eigen::Map<const Vector>(bounds_.data(), rows()); }

  /// Adds a . theta <= bound.
  template <typename Derived>
  void add_row(const Eigen::MatrixBase<Derived>& a, Scalar bound) {
    if (a.size() != dim_) throw std::invalid_argument("Polyhedron::add_row: dimension mismatch");
    if (!std::isfinite(static_cast<double>(bound)))
      throw std::invalid_argument("Polyhedron::add_row: bound must be finite");
    for (Index k = 0; k < dim_; ++k) {
      if (!std::isfinite(static_cast<double>(a(k))))
        throw std::invalid_argument("Polyhedron::add_row: coefficients must be finite");
      coeffs_.push_back(a(k));
    }
    bounds_.push_back(bound);
  }

  /// Adds a . theta = value as a pair of inequalities.
  template <typename Derived>
  void add_equality(const Eigen::MatrixBase<Derived>& a, Scalar value) {
    add_row(a, value);
    add_row(-a, -value);
  }

  void append(const Polyhedron& other) {
    if (other.dim_ != dim_) throw std::invalid_argument("Polyhedron::append: dimension mismatch");
    coeffs_.insert(coeffs_.end(), other.coeffs_.begin(), other.coeffs_.end());
    bounds_.insert(bounds_.end(), other.bounds_.begin(), other.bounds_.end());
  }

  /// Lowers the bound of an existing row.
  void set_bound(Index row, Scalar bound) {
    if (!std::isfinite(static_cast<double>(bound)))
      throw std::invalid_argument("Polyhedron::set_bound: bound must be finite");
    bounds_.at(static_cast<std::size_t>(row)) = bound;
  }

  void truncate(Index rows) {
    coeffs_.resize(static_cast<std::size_t>(rows * dim_));
    bounds_.resize(static_cast<std::size_t>(rows));
  }

  /// Largest row violation max_i (a_i . theta - b_i), or -inf without rows.
  Scalar max_violation(const Vector& theta) const {
    if (rows() == 0) return -std::numeric_limits<Scalar>::infinity();
    return (coefficients() * theta - bounds()).maxCoeff();
  }

  bool contains(const Vector& theta, Scalar tol) const { return max_violation(theta) <= tol; }

 private:
  Index dim_;
  std::vector<Scalar> coeffs_;
  std::vector<Scalar> bounds_;
};

enum class LpStatus { optimal, unbounded, infeasible };

/// Tri-state LP result. `point` is set for optimal outcomes; `ray` certifies
/// unboundedness (A ray <= 0, c . ray > 0 in the maximization sense).
template <typename Scalar>
struct LpOutcome {
  LpStatus status = LpStatus::infeasible;
  Scalar value = 0;
  VecX<Scalar> point;
  VecX<Scalar> ray;
  Index iterations = 0;

  bool optimal() const { return status == LpStatus::optimal; }
  bool unbounded() const { return status == LpStatus::unbounded; }
  bool infeasible() const { return status == LpStatus::infeasible; }
};

struct LpOptions {
  double feasibility_tol = 1e-7;
  double pivot_tol = 1e-10;
  double optimality_tol = 1e-9;
  // Singleton rows become variable bounds and variables untouched by the
  // remaining rows are optimized in closed form; the rest goes to the simplex.
  bool presolve = true;
  Index max_iterations = 1'000'000;
};

namespace detail {

/// Dense two-phase primal simplex with Bland's rule for
/// max c . theta  s.t.  A theta <= b, theta free.
///
/// Columns: theta+ (d) | theta- (d) | slacks (m) | artificials; last column is the rhs.
/// The last tableau row is the objective row (reduced costs, value in rhs).
template <typename Scalar>
class DenseSimplex {
 public:
  using Matrix = MatX<Scalar>;
  using Vector = VecX<Scalar>;

  DenseSimplex(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Vector>& b,
               const LpOptions& options)
      : options_(options), m_(a.rows()), d_(a.cols()) {
    std::vector<Index> flipped;
    for (Index i = 0; i < m_; ++i)
      if (b[i] < 0) flipped.push_back(i);
    art_start_ = 2 * d_ + m_;
    cols_ = art_start_ + static_cast<Index>(flipped.size());
    t_ = Matrix::Zero(m_ + 1, cols_ + 1);
    basis_.assign(static_cast<std::size_t>(m_), 0);
    t_.topLeftCorner(m_, d_) = a;
    t_.block(0, d_, m_, d_) = -a;
    t_.block(0, 2 * d_, m_, m_).setIdentity();
    t_.col(cols_).head(m_) = b;
    for (Index i = 0; i < m_; ++i) basis_[i] = 2 * d_ + i;
    Index art = art_start_;
    for (Index i : flipped) {
      t_.row(i).head(cols_ + 1) *= Scalar(-1);
      t_(i, art) = 1;
      basis_[i] = art++;
    }
  }

  LpOutcome<Scalar> maximize(const Eigen::Ref<const Vector>& c) {
    LpOutcome<Scalar> out;
    if (!phase_one()) {
      out.status = LpStatus::infeasible;
      out.iterations = iterations_;
      return out;
    }
    // Phase two objective: max c.(theta+ - theta-).
    t_.row(m_).setZero();
    t_.row(m_).head(d_) = -c.transpose();
    t_.row(m_).segment(d_, d_) = c.transpose();
    for (Index i = 0; i < m_; ++i) {
      const Scalar coef = t_(m_, basis_[i]);
      if (coef != Scalar(0)) t_.row(m_) -= coef * t_.row(i);
    }
    const Index unbounded_col = run(art_start_);
    out.iterations = iterations_;
    if (unbounded_col >= 0) {
      out.status = LpStatus::unbounded;
      Vector dir = Vector::Zero(cols_);
      dir[unbounded_col] = 1;
      for (Index i = 0; i < m_; ++i) dir[basis_[i]] -= t_(i, unbounded_col);
      out.ray = dir.head(d_) - dir.segment(d_, d_);
      return out;
    }
    out.status = LpStatus::optimal;
    out.value = t_(m_, cols_);
    Vector y = Vector::Zero(cols_);
    for (Index i = 0; i < m_; ++i) y[basis_[i]] = t_(i, cols_);
    out.point = y.head(d_) - y.segment(d_, d_);
    return out;
  }

 private:
  // Returns false when the rows admit no point within tolerance.
  bool phase_one() {
    if (cols_ == art_start_) return true;
    t_.row(m_).setZero();
    t_.row(m_).segment(art_start_, cols_ - art_start_).setOnes();
    for (Index i = 0; i < m_; ++i)
      if (basis_[i] >= art_start_) t_.row(m_) -= t_.row(i);
    run(cols_);
    if (t_(m_, cols_) < -Scalar(options_.feasibility_tol)) return false;
    // Drive zero-level artificials out of the basis; rows with nothing left to
    // pivot on are redundant and stay inert.
    for (Index i = 0; i < m_; ++i) {
      if (basis_[i] < art_start_) continue;
      Index best = -1;
      for (Index j = 0; j < art_start_; ++j) {
        if (std::abs(t_(i, j)) > Scalar(options_.pivot_tol) &&
            (best < 0 || std::abs(t_(i, j)) > std::abs(t_(i, best)))) {
          best = j;
        }
      }
      if (best >= 0) {
        pivot(i, best);
      } else {
        t_.row(i).head(art_start_).setZero();
        t_(i, cols_) = 0;
      }
    }
    return true;
  }

  // Bland's rule on columns [0, allowed). Returns -1 at optimality or the
  // entering column for which no leaving row exists.
  Index run(Index allowed) {
    for (;;) {
      if (iterations_ >= options_.max_iterations)
        throw std::runtime_error("simplex: iteration limit exceeded");
      Index enter = -1;
      for (Index j = 0; j < allowed; ++j) {
        if (t_(m_, j) < -Scalar(options_.optimality_tol)) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return -1;
      Index leave = -1;
      Scalar best = 0;
      for (Index i = 0; i < m_; ++i) {
        const Scalar coef = t_(i, enter);
        if (coef <= Scalar(options_.pivot_tol)) continue;
        const Scalar ratio = std::max(Scalar(0), t_(i, cols_)) / coef;
        const Scalar tie = Scalar(1e-12) * (1 + std::abs(best));
        if (leave < 0 || ratio < best - tie) {
          leave = i;
          best = ratio;
        } else if (ratio <= best + tie && basis_[i] < basis_[leave]) {
          // Bland: among tied rows the lowest-indexed basic variable leaves.
          leave = i;
          best = std::min(best, ratio);
        }
      }
      if (leave < 0) return enter;
      pivot(leave, enter);
    }
  }

  void pivot(Index r, Index c) {
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> row = t_.row(r) / t_(r, c);
    const Vector col = t_.col(c);
    t_.noalias() -= col * row;
    t_.row(r) = row;
    basis_[r] = c;
    ++iterations_;
  }

  LpOptions options_;
  Index m_;
  Index d_;
  Index art_start_ = 0;
  Index cols_ = 0;
  Matrix t_;
  std::vector<Index> basis_;
  Index iterations_ = 0;
};

template <typename Scalar>
LpOutcome<Scalar> simplex_maximize(const Polyhedron<Scalar>& p, const VecX<Scalar>& c,
                                   const LpOptions& options) {
  DenseSimplex<Scalar> simplex(MatX<Scalar>(p.coefficients()), VecX<Scalar>(p.bounds()), options);
  return simplex.maximize(c);
}

}  // namespace detail

/// Presolved form of a polyhedron, built once and reused across objectives.
/// Singleton rows become variable bounds; variables that appear in no other
/// row are optimized in closed form and the coupled rest goes to the simplex.
template <typename Scalar>
class Presolved {
 public:
  explicit Presolved(const Polyhedron<Scalar>& p, const LpOptions& options = {})
      : options_(options),
        d_(p.dim()),
        lo_(VecX<Scalar>::Constant(p.dim(), -inf())),
        hi_(VecX<Scalar>::Constant(p.dim(), inf())),
        coupled_(static_cast<std::size_t>(p.dim()), false) {
    const Scalar tol = Scalar(options.feasibility_tol);
    const auto a = p.coefficients();
    const auto b = p.bounds();
    std::vector<Index> coupled_rows;
    std::vector<Index> nz;
    for (Index i = 0; i < p.rows(); ++i) {
      nz.clear();
      for (Index k = 0; k < d_; ++k)
        if (a(i, k) != Scalar(0)) nz.push_back(k);
      if (nz.empty()) {
        if (b[i] < -tol) empty_ = true;  // 0 <= b violated
      } else if (nz.size() == 1) {
        const Index k = nz[0];
        const Scalar bound = b[i] / a(i, k);
        if (a(i, k) > 0) hi_[k] = std::min(hi_[k], bound);
        else lo_[k] = std::max(lo_[k], bound);
      } else {
        coupled_rows.push_back(i);
        for (Index k : nz) coupled_[static_cast<std::size_t>(k)] = true;
      }
    }
    for (Index k = 0; k < d_; ++k) {
      if (lo_[k] > hi_[k]) {
        if (lo_[k] - hi_[k] > tol) empty_ = true;
        lo_[k] = hi_[k];
      }
    }
    if (coupled_rows.empty()) return;
    for (Index k = 0; k < d_; ++k)
      if (coupled_[static_cast<std::size_t>(k)]) vars_.push_back(k);
    const Index n = static_cast<Index>(vars_.size());
    sub_ = Polyhedron<Scalar>(n);
    VecX<Scalar> row(n);
    for (Index i : coupled_rows) {
      for (Index s = 0; s < n; ++s) row[s] = a(i, vars_[s]);
      sub_.add_row(row, b[i]);
    }
    for (Index s = 0; s < n; ++s) {
      row.setZero();
      if (std::isfinite(static_cast<double>(hi_[vars_[s]]))) {
        row[s] = 1;
        sub_.add_row(row, hi_[vars_[s]]);
      }
      if (std::isfinite(static_cast<double>(lo_[vars_[s]]))) {
        row[s] = -1;
        sub_.add_row(row, -lo_[vars_[s]]);
      }
    }
  }

  Index dim() const { return d_; }
  /// Variable bounds implied by singleton rows.
  Scalar lower(Index k) const { return lo_[k]; }
  Scalar upper(Index k) const { return hi_[k]; }
  /// Whether variable k appears in a row with two or more nonzeros.
  bool coupled(Index k) const { return coupled_[static_cast<std::size_t>(k)]; }

  LpOutcome<Scalar> maximize(const VecX<Scalar>& c) const {
    if (c.size() != d_) throw std::invalid_argument("Presolved::maximize: objective dimension mismatch");
    LpOutcome<Scalar> out;
    if (empty_) return out;
    VecX<Scalar> point = VecX<Scalar>::Zero(d_);
    VecX<Scalar> ray = VecX<Scalar>::Zero(d_);
    bool unbounded = false;

    if (!vars_.empty()) {
      const Index n = static_cast<Index>(vars_.size());
      VecX<Scalar> sub_c(n);
      for (Index s = 0; s < n; ++s) sub_c[s] = c[vars_[s]];
      const bool trivial = sub_c.isZero(0);
      if (trivial && anchor_) {
        if (anchor_->infeasible()) return out;
      } else {
        LpOutcome<Scalar> inner = detail::simplex_maximize(sub_, sub_c, options_);
        out.iterations = inner.iterations;
        if (trivial) anchor_ = inner;
        if (inner.infeasible()) return out;
        if (inner.unbounded()) {
          unbounded = true;
          for (Index s = 0; s < n; ++s) ray[vars_[s]] = inner.ray[s];
        } else {
          for (Index s = 0; s < n; ++s) point[vars_[s]] = inner.point[s];
        }
      }
      if (trivial)
        for (Index s = 0; s < n; ++s) point[vars_[s]] = anchor_->point[s];
    }

    for (Index k = 0; k < d_; ++k) {
      if (coupled(k)) continue;
      if (c[k] > 0) {
        if (hi_[k] == inf()) {
          if (!unbounded) ray.setZero();
          unbounded = true;
          ray[k] = 1;
          break;
        }
        point[k] = hi_[k];
      } else if (c[k] < 0) {
        if (lo_[k] == -inf()) {
          if (!unbounded) ray.setZero();
          unbounded = true;
          ray[k] = -1;
          break;
        }
        point[k] = lo_[k];
      } else {
        point[k] = std::clamp(Scalar(0), lo_[k], hi_[k]);
      }
    }

    if (unbounded) {
      out.status = LpStatus::unbounded;
      out.ray = ray;
      return out;
    }
    out.status = LpStatus::optimal;
    out.point = point;
    out.value = c.dot(point);
    return out;
  }

  LpOutcome<Scalar> minimize(const VecX<Scalar>& c) const {
    LpOutcome<Scalar> out = maximize(VecX<Scalar>(-c));
    out.value = -out.value;
    return out;
  }

 private:
  static constexpr Scalar inf() { return std::numeric_limits<Scalar>::infinity(); }

  LpOptions options_;
  Index d_;
  VecX<Scalar> lo_;
  VecX<Scalar> hi_;
  std::vector<bool> coupled_;
  std::vector<Index> vars_;
  Polyhedron<Scalar> sub_;
  bool empty_ = false;
  // Zero-objective solve of the coupled rows, shared by objectives that skip them.
  mutable std::optional<LpOutcome<Scalar>> anchor_;
};

/// max c . theta over p.
template <typename Scalar>
LpOutcome<Scalar> lp_maximize(const Polyhedron<Scalar>& p, const VecX<Scalar>& c,
                              const LpOptions& options = {}) {
  if (c.size() != p.dim()) throw std::invalid_argument("lp_maximize: objective dimension mismatch");
  return options.presolve ? Presolved<Scalar>(p, options).maximize(c)
                          : detail::simplex_maximize(p, c, options);
}

/// min c . theta over p. An unbounded outcome means the infimum is -inf; the
/// ray then satisfies A ray <= 0 and c . ray < 0.
template <typename Scalar>
LpOutcome<Scalar> lp_minimize(const Polyhedron<Scalar>& p, const VecX<Scalar>& c,
                              const LpOptions& options = {}) {
  LpOutcome<Scalar> out = lp_maximize(p, VecX<Scalar>(-c), options);
  out.value = -out.value;
  return out;
}

template <typename Scalar>
bool lp_feasible(const Polyhedron<Scalar>& p, const LpOptions& options = {}) {
  return !lp_maximize(p, VecX<Scalar>(VecX<Scalar>::Zero(p.dim())), options).infeasible();
}

using PolyhedronXd = Polyhedron<double>;
using LpOutcomeXd = LpOutcome<double>;

}  // namespace ocp::lp
