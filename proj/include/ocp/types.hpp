#pragma once

#include <Eigen/Core>

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace ocp {

using Index = Eigen::Index;

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVecX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixXd = MatX<double>;
using VectorXd = VecX<double>;
using RowVectorXd = RowVecX<double>;

/// A state-action-period element of the universal index set.
struct Triple {
  int state = 0;
  int action = 0;
  int period = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
};

/// Sizes of the finite state space, action space and horizon.
///
/// Fixes the flattening order of triples:
/// flat = (period * |S| + state) * |A| + action.
struct Shape {
  int states = 0;
  int actions = 0;
  int horizon = 0;

  Index size() const { return Index(states) * actions * horizon; }

  Index flat(const Triple& z) const {
    return (Index(z.period) * states + z.state) * actions + z.action;
  }

  Triple triple(Index flat_index) const {
    Triple z;
    z.action = static_cast<int>(flat_index % actions);
    flat_index /= actions;
    z.state = static_cast<int>(flat_index % states);
    z.period = static_cast<int>(flat_index / states);
    return z;
  }

  bool contains(const Triple& z) const {
    return z.state >= 0 && z.state < states && z.action >= 0 && z.action < actions &&
           z.period >= 0 && z.period < horizon;
  }

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Real number extended with +inf and -inf. NaN is never representable.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  constexpr ExtReal(double v) : v_(v) {  // NOLINT(google-explicit-constructor)
    if (v != v) throw std::domain_error("ExtReal: NaN");
  }

  static constexpr ExtReal pos_inf() { return ExtReal(std::numeric_limits<double>::infinity()); }
  static constexpr ExtReal neg_inf() { return ExtReal(-std::numeric_limits<double>::infinity()); }

  constexpr double value() const { return v_; }
  bool is_finite() const { return std::isfinite(v_); }
  bool is_pos_inf() const { return v_ == std::numeric_limits<double>::infinity(); }
  bool is_neg_inf() const { return v_ == -std::numeric_limits<double>::infinity(); }

  friend constexpr bool operator==(ExtReal a, ExtReal b) { return a.v_ == b.v_; }
  friend constexpr std::partial_ordering operator<=>(ExtReal a, ExtReal b) { return a.v_ <=> b.v_; }

  // A finite shift of an extended real stays on the same side of infinity.
  friend ExtReal operator+(ExtReal a, double shift) { return ExtReal(a.v_ + shift); }
  friend ExtReal operator+(double shift, ExtReal a) { return ExtReal(a.v_ + shift); }

  std::string to_string() const;

 private:
  double v_ = 0.0;
};

inline ExtReal min(ExtReal a, ExtReal b) { return b < a ? b : a; }
inline ExtReal max(ExtReal a, ExtReal b) { return a < b ? b : a; }

inline std::string ExtReal::to_string() const {
  if (is_pos_inf()) return "inf";
  if (is_neg_inf()) return "-inf";
  return std::to_string(v_);
}

/// Numerical slack used when comparing realized rewards against optimal values.
inline constexpr double kValueSlack = 1e-6;

}  // namespace ocp
