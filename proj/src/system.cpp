#include "ocp/system.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace ocp {

InitialStates fixed_start(int state) {
  return [state](std::int64_t) { return state; };
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SystemSpec::SystemSpec(Shape shape, std::vector<int> transition, VectorXd reward,
                       InitialStates initial)
    : shape_(shape),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      initial_(std::move(initial)) {
  if (shape_.states <= 0 || shape_.actions <= 0 || shape_.horizon <= 0)
    throw std::invalid_argument("SystemSpec: |S|, |A| and H must be positive");
  if (Index(transition_.size()) != shape_.size() || reward_.size() != shape_.size())
    throw std::invalid_argument("SystemSpec: tables must have |S||A|H entries");
  if (!initial_) throw std::invalid_argument("SystemSpec: missing initial-state sequence");
  for (Index i = 0; i < shape_.size(); ++i) {
    const Triple z = shape_.triple(i);
    if (z.period == shape_.horizon - 1) {
      transition_[i] = -1;
    } else if (transition_[i] < 0 || transition_[i] >= shape_.states) {
      throw std::invalid_argument("SystemSpec: transition target out of range at flat index " +
                                  std::to_string(i));
    }
  }
  if (!reward_.allFinite()) throw std::invalid_argument("SystemSpec: rewards must be finite");
  reward_bound_ = reward_.size() ? reward_.cwiseAbs().maxCoeff() : 0.0;
}

int SystemSpec::next_state(const Triple& z) const {
  if (z.period >= shape_.horizon - 1)
    throw std::out_of_range("SystemSpec::next_state: no transition out of the last period");
  return transition_[shape_.flat(z)];
}

int SystemSpec::initial_state(std::int64_t episode) const {
  const int x = initial_(episode);
  if (x < 0 || x >= shape_.states)
    throw std::out_of_range("SystemSpec: initial state out of range");
  return x;
}

SystemSpec SystemSpec::with_rewards(VectorXd reward) const {
  return SystemSpec(shape_, transition_, std::move(reward), initial_);
}

int OptimalValues::optimal_action(int state, int period) const {
  int best = 0;
  for (int a = 1; a < shape_.actions; ++a)
    if (q({state, a, period}) > q({state, best, period})) best = a;
  return best;
}

OptimalValues solve_optimal(const SystemSpec& spec) {
  const Shape& s = spec.shape();
  VectorXd v = VectorXd::Zero(Index(s.states) * s.horizon);
  VectorXd q = VectorXd::Zero(s.size());
  for (int t = s.horizon - 1; t >= 0; --t) {
    for (int x = 0; x < s.states; ++x) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < s.actions; ++a) {
        const Triple z{x, a, t};
        double value = spec.reward(z);
        if (t < s.horizon - 1) value += v[Index(t + 1) * s.states + spec.next_state(z)];
        q[s.flat(z)] = value;
        best = std::max(best, value);
      }
      v[Index(t) * s.states + x] = best;
    }
  }
  return OptimalValues(s, std::move(v), std::move(q));
}

StepResult SystemEnvironment::step(const Triple& z) {
  StepResult r;
  r.reward = spec_.reward(z);
  if (z.period < spec_.horizon() - 1) r.next_state = spec_.next_state(z);
  return r;
}

double EpisodeTrace::total_reward() const {
  return std::accumulate(rewards.begin(), rewards.end(), 0.0);
}

// ---------------------------------------------------------------------------

SystemSpec make_chain_env(int horizon) {
  if (horizon < 2) throw std::invalid_argument("make_chain_env: H must be at least 2");
  const int dead = horizon;
  const Shape shape{horizon + 1, 2, horizon};
  std::vector<int> transition(shape.size(), 0);
  VectorXd reward = VectorXd::Zero(shape.size());
  for (Index i = 0; i < shape.size(); ++i) {
    const Triple z = shape.triple(i);
    if (z.period < horizon - 1) {
      const bool on_path = z.state == z.period && z.action == kChainPathAction;
      transition[i] = on_path ? z.period + 1 : dead;
    }
    if (z.period == horizon - 1 && z.state == horizon - 1) reward[i] = 1.0;
  }
  return SystemSpec(shape, std::move(transition), std::move(reward), fixed_start(0));
}

AdversarySystem::AdversarySystem(int pairs, int horizon, double r_bar)
    : shape_{2 * pairs, 2, horizon}, pairs_(pairs), r_bar_(r_bar), committed_(pairs) {
  if (pairs < 1 || horizon < 1) throw std::invalid_argument("AdversarySystem: K and H must be >= 1");
  if (!(r_bar >= 0.0) || !std::isfinite(r_bar))
    throw std::invalid_argument("AdversarySystem: r_bar must be a nonnegative real");
}

int AdversarySystem::initial_state(std::int64_t episode) {
  return static_cast<int>(episode % pairs_) * 2;
}

double AdversarySystem::reward_of(const Triple& z, int opening_action) const {
  const double theta = opening_action == 0 ? -r_bar_ : r_bar_;
  if (z.period == 0) return z.action == 0 ? theta : -theta;
  return z.state % 2 == 0 ? theta : -theta;
}

StepResult AdversarySystem::step(const Triple& z) {
  if (!shape_.contains(z)) throw std::out_of_range("AdversarySystem::step: triple out of range");
  const int pair = z.state / 2;
  if (z.period == 0 && !committed_[pair]) committed_[pair] = z.action;
  if (!committed_[pair])
    throw std::logic_error("AdversarySystem: reward queried before the adversary fixed it");
  StepResult r;
  r.reward = reward_of(z, *committed_[pair]);
  if (z.period < shape_.horizon - 1)
    r.next_state = z.period == 0 ? 2 * pair + z.action : z.state;
  return r;
}

bool AdversarySystem::complete() const {
  return std::all_of(committed_.begin(), committed_.end(), [](const auto& c) { return c.has_value(); });
}

SystemSpec AdversarySystem::freeze() const {
  if (!complete()) throw std::logic_error("AdversarySystem::freeze: system not yet determined");
  return freeze_with_default(0);
}

SystemSpec AdversarySystem::freeze_with_default(int action) const {
  std::vector<int> transition(shape_.size(), 0);
  VectorXd reward(shape_.size());
  for (Index i = 0; i < shape_.size(); ++i) {
    const Triple z = shape_.triple(i);
    const int pair = z.state / 2;
    reward[i] = reward_of(z, committed_[pair].value_or(action));
    if (z.period < shape_.horizon - 1)
      transition[i] = z.period == 0 ? 2 * pair + z.action : z.state;
  }
  const int k = pairs_;
  return SystemSpec(shape_, std::move(transition), std::move(reward),
                    [k](std::int64_t j) { return static_cast<int>(j % k) * 2; });
}

VectorXd AdversarySystem::theta_star() const {
  if (!complete()) throw std::logic_error("AdversarySystem::theta_star: system not yet determined");
  VectorXd theta(pairs_);
  for (int k = 0; k < pairs_; ++k) theta[k] = *committed_[k] == 0 ? -r_bar_ : r_bar_;
  return theta;
}

std::unique_ptr<AdversarySystem> make_adversary_env(int pairs, int horizon, double r_bar) {
  return std::make_unique<AdversarySystem>(pairs, horizon, r_bar);
}

MatrixXd adversary_features(int pairs, int horizon) {
  const Shape shape{2 * pairs, 2, horizon};
  MatrixXd phi = MatrixXd::Zero(shape.size(), pairs);
  for (Index i = 0; i < shape.size(); ++i) {
    const Triple z = shape.triple(i);
    const int k = z.state / 2;
    if (z.period == 0) {
      phi(i, k) = z.action == 0 ? horizon : -horizon;
    } else {
      const double remaining = horizon - z.period;
      phi(i, k) = z.state % 2 == 0 ? remaining : -remaining;
    }
  }
  return phi;
}

SystemSpec make_random_env(int states, int actions, int horizon, std::uint64_t seed,
                           const RandomEnvOptions& options) {
  if (states <= 0 || actions <= 0 || horizon <= 0)
    throw std::invalid_argument("make_random_env: |S|, |A| and H must be positive");
  const Shape shape{states, actions, horizon};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> next(0, states - 1);
  std::uniform_real_distribution<double> value(options.reward_low, options.reward_high);
  std::vector<int> transition(shape.size(), 0);
  VectorXd reward(shape.size());
  for (Index i = 0; i < shape.size(); ++i) {
    transition[i] = next(rng);
    reward[i] = value(rng);
  }
  InitialStates initial;
  if (options.fixed_start) {
    initial = fixed_start(0);
  } else {
    initial = [seed, states](std::int64_t j) {
      return static_cast<int>(mix64(seed ^ mix64(static_cast<std::uint64_t>(j))) %
                              static_cast<std::uint64_t>(states));
    };
  }
  return SystemSpec(shape, std::move(transition), std::move(reward), std::move(initial));
}

// ---------------------------------------------------------------------------

std::vector<int> Partition::periods(const Shape& shape) const {
  if (Index(ids.size()) != shape.size())
    throw std::invalid_argument("Partition: expected one id per triple");
  std::vector<int> owner(count, -1);
  for (Index i = 0; i < shape.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || id >= count) throw std::invalid_argument("Partition: id out of range");
    const int t = shape.triple(i).period;
    if (owner[id] == -1) {
      owner[id] = t;
    } else if (owner[id] != t) {
      throw std::invalid_argument("Partition: id " + std::to_string(id) + " mixes periods " +
                                  std::to_string(owner[id]) + " and " + std::to_string(t));
    }
  }
  for (int id = 0; id < count; ++id)
    if (owner[id] == -1) throw std::invalid_argument("Partition: id " + std::to_string(id) + " unused");
  return owner;
}

Partition singleton_partition(const Shape& shape) {
  Partition p;
  p.count = static_cast<int>(shape.size());
  p.ids.resize(shape.size());
  std::iota(p.ids.begin(), p.ids.end(), 0);
  return p;
}

Partition partition_by_value(const OptimalValues& values, int per_period) {
  const Shape& shape = values.shape();
  const int block = shape.states * shape.actions;
  if (per_period < 1 || per_period > block)
    throw std::invalid_argument("partition_by_value: per_period must lie in [1, |S||A|]");
  Partition p;
  p.ids.assign(shape.size(), 0);
  p.count = per_period * shape.horizon;
  for (int t = 0; t < shape.horizon; ++t) {
    std::vector<Index> order(block);
    std::iota(order.begin(), order.end(), Index(t) * block);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return values.q_vector()[a] < values.q_vector()[b];
    });
    for (int r = 0; r < block; ++r)
      p.ids[order[r]] = t * per_period + static_cast<int>(Index(r) * per_period / block);
  }
  return p;
}

double rho_of_partition(const OptimalValues& values, const Partition& partition) {
  partition.periods(values.shape());
  std::vector<double> lo(partition.count, std::numeric_limits<double>::infinity());
  std::vector<double> hi(partition.count, -std::numeric_limits<double>::infinity());
  const VectorXd& q = values.q_vector();
  for (Index i = 0; i < q.size(); ++i) {
    lo[partition.ids[i]] = std::min(lo[partition.ids[i]], q[i]);
    hi[partition.ids[i]] = std::max(hi[partition.ids[i]], q[i]);
  }
  double rho = 0.0;
  for (int k = 0; k < partition.count; ++k) rho = std::max(rho, 0.5 * (hi[k] - lo[k]));
  return rho;
}

AggregationSystem make_aggregation_env(const SystemSpec& base, const Partition& partition,
                                       double perturbation, std::uint64_t seed) {
  partition.periods(base.shape());
  if (!std::isfinite(perturbation))
    throw std::invalid_argument("make_aggregation_env: perturbation must be finite");
  VectorXd reward = base.rewards();
  const double width = std::abs(perturbation);
  if (width > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> shift(-width, width);
    for (Index i = 0; i < reward.size(); ++i) reward[i] += shift(rng);
  }
  AggregationSystem out{base.with_rewards(std::move(reward)), partition, 0.0};
  out.rho = rho_of_partition(solve_optimal(out.spec), partition);
  return out;
}

}  // namespace ocp
