#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call the library's solvers.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "ocp/system.hpp"
#include "ocp/types.hpp"

namespace oracle {

using ocp::Index;
using ocp::MatrixXd;
using ocp::RowVectorXd;
using ocp::VectorXd;

/// V* and Q* by enumerating every action sequence from every (state, period).
struct PathValues {
  VectorXd v;  // (t * |S| + x)
  VectorXd q;  // flat triple order
};

inline PathValues enumerate_paths(const ocp::SystemSpec& spec) {
  const ocp::Shape s = spec.shape();
  PathValues out{VectorXd::Constant(Index(s.states) * s.horizon, -std::numeric_limits<double>::infinity()),
                 VectorXd::Constant(s.size(), -std::numeric_limits<double>::infinity())};
  for (int t0 = 0; t0 < s.horizon; ++t0) {
    const int len = s.horizon - t0;
    std::int64_t count = 1;
    for (int i = 0; i < len; ++i) count *= s.actions;
    for (int x0 = 0; x0 < s.states; ++x0) {
      for (std::int64_t code = 0; code < count; ++code) {
        std::int64_t c = code;
        int x = x0;
        double total = 0.0;
        int first = -1;
        for (int t = t0; t < s.horizon; ++t) {
          const int a = static_cast<int>(c % s.actions);
          c /= s.actions;
          if (first < 0) first = a;
          total += spec.reward({x, a, t});
          if (t < s.horizon - 1) x = spec.next_state({x, a, t});
        }
        double& q = out.q[s.flat({x0, first, t0})];
        q = std::max(q, total);
        double& v = out.v[Index(t0) * s.states + x0];
        v = std::max(v, total);
      }
    }
  }
  return out;
}

/// Optimum of max c.theta over {A theta <= b} by trying every d-subset of rows
/// as an active set. Returns nullopt when no feasible vertex exists.
inline std::optional<double> vertex_max(const MatrixXd& a, const VectorXd& b, const VectorXd& c,
                                        double tol = 1e-7) {
  const int m = static_cast<int>(a.rows());
  const int d = static_cast<int>(a.cols());
  if (m < d) return std::nullopt;
  std::optional<double> best;
  std::vector<int> idx(d);
  for (int i = 0; i < d; ++i) idx[i] = i;
  while (true) {
    MatrixXd sub(d, d);
    VectorXd rhs(d);
    for (int i = 0; i < d; ++i) {
      sub.row(i) = a.row(idx[i]);
      rhs[i] = b[idx[i]];
    }
    Eigen::FullPivLU<MatrixXd> lu(sub);
    if (lu.isInvertible()) {
      const VectorXd x = lu.solve(rhs);
      if ((a * x - b).maxCoeff() <= tol) {
        const double v = c.dot(x);
        if (!best || v > *best) best = v;
      }
    }
    int i = d - 1;
    while (i >= 0 && idx[i] == m - d + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < d; ++j) idx[j] = idx[j - 1] + 1;
  }
  return best;
}

/// One-dimensional interval constraint on a single scalar coordinate.
struct Interval {
  double lower;
  double upper;
};

/// The unique subset S of constraints consistent with a scan in priority order
/// (upper ascending, later index first on ties): each constraint is in S iff
/// it meets the intersection of the members of S scanned before it. Found by
/// checking all 2^n subsets against that fixed-point condition.
inline std::vector<bool> scan_consistent_subset(const std::vector<Interval>& cs) {
  const int n = static_cast<int>(cs.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (cs[x].upper != cs[y].upper) return cs[x].upper < cs[y].upper;
    return x > y;
  });
  std::vector<bool> found;
  int matches = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (int k : order) {
      const bool in = mask & (1u << k);
      const bool meets = std::max(lo, cs[k].lower) <= std::min(hi, cs[k].upper);
      if (in != meets) {
        ok = false;
        break;
      }
      if (in) {
        lo = std::max(lo, cs[k].lower);
        hi = std::min(hi, cs[k].upper);
      }
    }
    if (ok) {
      ++matches;
      found.assign(n, false);
      for (int i = 0; i < n; ++i) found[i] = mask & (1u << i);
    }
  }
  if (matches != 1) return {};
  return found;
}

/// min over constants c of max |values - c|, by a coarse grid then ternary refinement.
inline double best_constant_error(const std::vector<double>& values) {
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  auto err = [&](double c) {
    double e = 0.0;
    for (double v : values) e = std::max(e, std::abs(v - c));
    return e;
  };
  double lo = *mn, hi = *mx;
  if (hi - lo == 0.0) return 0.0;
  const int grid = 2000;
  double best_c = lo;
  for (int i = 0; i <= grid; ++i) {
    const double c = lo + (hi - lo) * i / grid;
    if (err(c) < err(best_c)) best_c = c;
  }
  double a = std::max(lo, best_c - (hi - lo) / grid);
  double b = std::min(hi, best_c + (hi - lo) / grid);
  for (int it = 0; it < 200; ++it) {
    const double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
    if (err(m1) <= err(m2)) b = m2;
    else a = m1;
  }
  return err((a + b) / 2);
}

/// rho for a partition of Q* values: the worst per-partition constant-fit error.
inline double rho_by_search(const VectorXd& q, const std::vector<int>& ids, int count) {
  std::vector<std::vector<double>> groups(count);
  for (Index i = 0; i < q.size(); ++i) groups[ids[i]].push_back(q[i]);
  double rho = 0.0;
  for (const auto& g : groups)
    if (!g.empty()) rho = std::max(rho, best_constant_error(g));
  return rho;
}

/// Orthonormal basis of the null space of m (columns), from the SVD.
inline MatrixXd null_space(const MatrixXd& m, int cols) {
  if (m.rows() == 0) return MatrixXd::Identity(cols, cols);
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeFullV);
  const VectorXd sv = svd.singularValues();
  const double scale = sv.size() ? sv[0] : 0.0;
  int rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-9 * std::max(1.0, scale)) ++rank;
  return svd.matrixV().rightCols(cols - rank);
}

/// y independent of Y for {Phi theta : ||theta||_0 <= k0}: some 2k0-sparse
/// theta vanishes on every row of Y but not on y.
inline bool sparse_independent(const RowVectorXd& y, const MatrixXd& ys, int k0) {
  const int k = static_cast<int>(y.size());
  const int l = 2 * k0;
  std::vector<int> idx(l);
  for (int i = 0; i < l; ++i) idx[i] = i;
  while (true) {
    MatrixXd sub(ys.rows(), l);
    RowVectorXd ysub(l);
    for (int j = 0; j < l; ++j) {
      sub.col(j) = ys.col(idx[j]);
      ysub[j] = y[idx[j]];
    }
    const MatrixXd n = null_space(sub, l);
    if (n.cols() > 0 && (ysub * n).cwiseAbs().maxCoeff() > 1e-7) return true;
    int i = l - 1;
    while (i >= 0 && idx[i] == k - l + i) --i;
    if (i < 0) return false;
    ++idx[i];
    for (int j = i + 1; j < l; ++j) idx[j] = idx[j - 1] + 1;
  }
}

/// Kolmogorov-Smirnov distance between a sample on {1, 2, ...} and Geometric(p).
inline double ks_geometric(std::vector<std::int64_t> sample, double p) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  std::size_t i = 0;
  const std::int64_t top = sample.back();
  for (std::int64_t k = 1; k <= top; ++k) {
    const double before = static_cast<double>(i) / n;
    while (i < sample.size() && sample[i] <= k) ++i;
    const double after = static_cast<double>(i) / n;
    const double f_before = 1.0 - std::pow(1.0 - p, static_cast<double>(k - 1));
    const double f = 1.0 - std::pow(1.0 - p, static_cast<double>(k));
    d = std::max({d, std::abs(after - f), std::abs(before - f_before)});
  }
  return d;
}

/// Fraction of uniformly random episodes that collect the chain's reward.
inline double chain_hit_rate(const ocp::SystemSpec& chain, int episodes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, chain.num_actions() - 1);
  int hits = 0;
  for (int j = 0; j < episodes; ++j) {
    int x = chain.initial_state(j);
    double total = 0.0;
    for (int t = 0; t < chain.horizon(); ++t) {
      const int a = pick(rng);
      total += chain.reward({x, a, t});
      if (t < chain.horizon() - 1) x = chain.next_state({x, a, t});
    }
    if (total > 0.5) ++hits;
  }
  return static_cast<double>(hits) / episodes;
}

}  // namespace oracle
