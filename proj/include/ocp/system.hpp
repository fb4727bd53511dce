#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "ocp/types.hpp"

namespace ocp {

/// Initial state of each episode, indexed by episode number.
using InitialStates = std::function<int(std::int64_t episode)>;

InitialStates fixed_start(int state);

/// Deterministic finite-horizon system (S, A, H, F, R, initial-state sequence).
///
/// Transitions and rewards are dense tables over flat triple indices. The
/// transition entry of a last-period triple is unused and stored as -1.
/// Immutable after construction.
class SystemSpec {
 public:
  SystemSpec(Shape shape, std::vector<int> transition, VectorXd reward, InitialStates initial);

  const Shape& shape() const { return shape_; }
  int num_states() const { return shape_.states; }
  int num_actions() const { return shape_.actions; }
  int horizon() const { return shape_.horizon; }

  double reward(const Triple& z) const { return reward_[shape_.flat(z)]; }
  int next_state(const Triple& z) const;
  int initial_state(std::int64_t episode) const;

  /// sup |R_t(x, a)| over all triples.
  double reward_bound() const { return reward_bound_; }

  const VectorXd& rewards() const { return reward_; }
  const std::vector<int>& transitions() const { return transition_; }
  const InitialStates& initial_states() const { return initial_; }

  SystemSpec with_rewards(VectorXd reward) const;

 private:
  Shape shape_;
  std::vector<int> transition_;
  VectorXd reward_;
  InitialStates initial_;
  double reward_bound_ = 0.0;
};

/// Optimal state values V*_t(x) and action values Q*_t(x, a).
class OptimalValues {
 public:
  OptimalValues(Shape shape, VectorXd v_star, VectorXd q_star)
      : shape_(shape), v_(std::move(v_star)), q_(std::move(q_star)) {}

  const Shape& shape() const { return shape_; }
  double v(int state, int period) const { return v_[Index(period) * shape_.states + state]; }
  double q(const Triple& z) const { return q_[shape_.flat(z)]; }
  const VectorXd& q_vector() const { return q_; }

  /// Lowest-indexed action attaining max_a Q*_t(x, a).
  int optimal_action(int state, int period) const;

 private:
  Shape shape_;
  VectorXd v_;  // index period * |S| + state
  VectorXd q_;  // flat triple index
};

/// Exact backward induction.
OptimalValues solve_optimal(const SystemSpec& spec);

struct StepResult {
  double reward = 0.0;
  std::optional<int> next_state;  // empty at the last period
};

/// What an agent interacts with: one episode at a time, one period at a time.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual const Shape& shape() const = 0;
  virtual int initial_state(std::int64_t episode) = 0;
  virtual StepResult step(const Triple& z) = 0;
};

class SystemEnvironment final : public Environment {
 public:
  explicit SystemEnvironment(SystemSpec spec) : spec_(std::move(spec)) {}

  const Shape& shape() const override { return spec_.shape(); }
  int initial_state(std::int64_t episode) override { return spec_.initial_state(episode); }
  StepResult step(const Triple& z) override;

  const SystemSpec& spec() const { return spec_; }

 private:
  SystemSpec spec_;
};

/// One realized episode.
struct EpisodeTrace {
  std::int64_t episode = 0;
  std::vector<Triple> triples;
  std::vector<double> rewards;

  double total_reward() const;
};

// ---------------------------------------------------------------------------
// Built-in environments

/// Chain in which exactly one action sequence from state 0 reaches the single
/// rewarding node at the last period.
///
/// States 0..H-1 are the on-path nodes (node t is visited at period t), state H
/// is an absorbing dead end. The on-path action is kChainPathAction at every
/// period; the other action leads to the dead end. Only (H-1, *, H-1) pays 1.
SystemSpec make_chain_env(int horizon);

inline constexpr int kChainPathAction = 1;

/// Lower-bound construction: K state pairs, two actions, rewards fixed
/// adversarially against the agent's first move in each pair.
///
/// States are 0..2K-1, pair k owns {2k, 2k+1}; episode j starts in 2 (j mod K).
/// At period 0 action 0 moves to 2k and action 1 to 2k+1; later periods self-loop.
/// The first time the agent acts at period 0 in pair k, the branch it chose is
/// fixed to pay -r_bar at every period and the other branch +r_bar.
class AdversarySystem final : public Environment {
 public:
  AdversarySystem(int pairs, int horizon, double r_bar);

  const Shape& shape() const override { return shape_; }
  int initial_state(std::int64_t episode) override;
  StepResult step(const Triple& z) override;

  int pairs() const { return pairs_; }
  double reward_bound() const { return r_bar_; }
  bool complete() const;
  std::optional<int> committed_action(int pair) const { return committed_[pair]; }

  /// The fully determined system. Throws std::logic_error while any pair is unfixed.
  SystemSpec freeze() const;

  /// As freeze(), treating every still-unfixed pair as if `action` had been played.
  SystemSpec freeze_with_default(int action) const;

  /// theta*_k = -r_bar if the agent opened pair k with action 0, else +r_bar.
  VectorXd theta_star() const;

 private:
  double reward_of(const Triple& z, int opening_action) const;

  Shape shape_;
  int pairs_;
  double r_bar_;
  std::vector<std::optional<int>> committed_;
};

std::unique_ptr<AdversarySystem> make_adversary_env(int pairs, int horizon, double r_bar);

/// Feature matrix (|Z| x K) whose span contains the adversary's Q*.
MatrixXd adversary_features(int pairs, int horizon);

struct RandomEnvOptions {
  double reward_low = -1.0;
  double reward_high = 1.0;
  bool fixed_start = false;
};

/// Uniformly random transitions and rewards from a seeded generator. Initial
/// states are a pure function of (seed, episode) unless fixed_start is set.
SystemSpec make_random_env(int states, int actions, int horizon, std::uint64_t seed,
                           const RandomEnvOptions& options = {});

// ---------------------------------------------------------------------------
// State aggregation fixtures

/// Disjoint per-period partition of the triples. ids[flat] is in [0, count).
struct Partition {
  std::vector<int> ids;
  int count = 0;

  /// Period owning each partition id; throws std::invalid_argument if any id
  /// spans two periods, is out of range, or is unused.
  std::vector<int> periods(const Shape& shape) const;
};

Partition singleton_partition(const Shape& shape);

/// Splits each period's triples, sorted by Q*, into `per_period` contiguous groups.
Partition partition_by_value(const OptimalValues& values, int per_period);

/// min over the indicator span of ||Q - Q*||_inf, attained by per-partition midpoints.
double rho_of_partition(const OptimalValues& values, const Partition& partition);

struct AggregationSystem {
  SystemSpec spec;
  Partition partition;
  double rho = 0.0;
};

/// Copy of `base` whose rewards are shifted by independent uniform draws in
/// [-perturbation, perturbation], with the exact rho of the result.
AggregationSystem make_aggregation_env(const SystemSpec& base, const Partition& partition,
                                       double perturbation, std::uint64_t seed);

/// SplitMix64 finalizer, used for stateless per-episode draws.
std::uint64_t mix64(std::uint64_t x);

}  // namespace ocp
