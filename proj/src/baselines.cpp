#include "ocp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ocp {

QTable::QTable(Shape s, double a, double b, double e)
    : shape(s), values(VectorXd::Zero(s.size())), alpha(a), beta(b), epsilon(e) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("QTable: alpha must lie in [0, 1]");
  if (!(beta > 0.0)) throw std::invalid_argument("QTable: beta must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("QTable: epsilon must lie in [0, 1]");
}

double QTable::max_value(int state, int period) const {
  double best = (*this)({state, 0, period});
  for (int a = 1; a < shape.actions; ++a) best = std::max(best, (*this)({state, a, period}));
  return best;
}

int boltzmann_action(const QTable& table, int state, int period, Rng& rng) {
  const int n = table.shape.actions;
  const double top = table.max_value(state, period);
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) w[a] = std::exp(table.beta * (table({state, a, period}) - top));
  std::discrete_distribution<int> pick(w.begin(), w.end());
  return pick(rng);
}

int epsilon_greedy_action(const QTable& table, int state, int period, Rng& rng) {
  const int n = table.shape.actions;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < table.epsilon) return std::uniform_int_distribution<int>(0, n - 1)(rng);
  const double top = table.max_value(state, period);
  std::vector<int> best;
  for (int a = 0; a < n; ++a)
    if (table({state, a, period}) == top) best.push_back(a);
  return best[std::uniform_int_distribution<std::size_t>(0, best.size() - 1)(rng)];
}

void q_update(QTable& table, const Triple& z, double reward, std::optional<int> next_state) {
  double target = reward;
  if (z.period < table.shape.horizon - 1) {
    if (!next_state) throw std::invalid_argument("q_update: next state required before the last period");
    target += table.max_value(*next_state, z.period + 1);
  }
  double& q = table.values[table.shape.flat(z)];
  q = (1.0 - table.alpha) * q + table.alpha * target;
}

QLearningAgent::QLearningAgent(Shape shape, ExplorationPolicy policy, std::uint64_t seed, double alpha,
                               double beta, double epsilon)
    : table_(shape, alpha, beta, epsilon), policy_(policy), rng_(seed) {}

int QLearningAgent::choose(int state, int period) {
  switch (policy_) {
    case ExplorationPolicy::boltzmann:
      return boltzmann_action(table_, state, period, rng_);
    case ExplorationPolicy::epsilon_greedy:
      return epsilon_greedy_action(table_, state, period, rng_);
    case ExplorationPolicy::uniform:
      return std::uniform_int_distribution<int>(0, table_.shape.actions - 1)(rng_);
  }
  return 0;
}

EpisodeTrace QLearningAgent::run_episode(Environment& env) {
  const Shape& shape = table_.shape;
  if (!(env.shape() == shape)) throw std::invalid_argument("QLearningAgent: environment shape mismatch");
  EpisodeTrace trace;
  trace.episode = episode_;
  int x = env.initial_state(episode_);
  for (int t = 0; t < shape.horizon; ++t) {
    const Triple z{x, choose(x, t), t};
    const StepResult r = env.step(z);
    trace.triples.push_back(z);
    trace.rewards.push_back(r.reward);
    q_update(table_, z, r.reward, r.next_state);
    if (r.next_state) x = *r.next_state;
  }
  ++episode_;
  return trace;
}

std::vector<std::int64_t> first_success_episodes(int horizon, ExplorationPolicy policy,
                                                 std::span<const std::uint64_t> seeds,
                                                 std::int64_t max_episodes) {
  SystemEnvironment env(make_chain_env(horizon));
  std::vector<std::int64_t> out;
  out.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    QLearningAgent agent(env.shape(), policy, seed);
    std::int64_t j = 1;
    for (; j <= max_episodes; ++j)
      if (agent.run_episode(env).total_reward() > 0.5) break;
    out.push_back(j);
  }
  return out;
}

double episodes_to_first_success(int horizon, ExplorationPolicy policy, std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw std::invalid_argument("episodes_to_first_success: no seeds");
  const auto counts = first_success_episodes(horizon, policy, seeds);
  return static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::int64_t{0})) /
         static_cast<double>(counts.size());
}

}  // namespace ocp
