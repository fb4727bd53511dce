#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ocp/agent.hpp"
#include "ocp/system.hpp"

namespace ocp {

/// Tabular Q-values over Z, all zero at construction.
struct QTable {
  Shape shape;
  VectorXd values;
  double alpha = 1.0;    // learning rate
  double beta = 1.0;     // Boltzmann inverse temperature
  double epsilon = 0.1;  // epsilon-greedy exploration rate

  explicit QTable(Shape shape, double alpha = 1.0, double beta = 1.0, double epsilon = 0.1);

  double operator()(const Triple& z) const { return values[shape.flat(z)]; }
  double max_value(int state, int period) const;
};

using Rng = std::mt19937_64;

/// Samples a with probability proportional to exp(beta Q_t(x, a)).
int boltzmann_action(const QTable& table, int state, int period, Rng& rng);

/// With probability epsilon a uniform action, otherwise a uniformly chosen maximizer.
int epsilon_greedy_action(const QTable& table, int state, int period, Rng& rng);

/// Q <- (1 - alpha) Q + alpha (reward + max_b Q_{t+1}(next, b)); the target is
/// the reward alone at the last period.
void q_update(QTable& table, const Triple& z, double reward, std::optional<int> next_state);

enum class ExplorationPolicy { boltzmann, epsilon_greedy, uniform };

class QLearningAgent final : public Agent {
 public:
  QLearningAgent(Shape shape, ExplorationPolicy policy, std::uint64_t seed, double alpha = 1.0,
                 double beta = 1.0, double epsilon = 0.1);

  EpisodeTrace run_episode(Environment& env) override;

  const QTable& table() const { return table_; }
  int choose(int state, int period);

 private:
  QTable table_;
  ExplorationPolicy policy_;
  Rng rng_;
  std::int64_t episode_ = 0;
};

/// Episode index (1-based) of the first success on the chain of the given
/// horizon, one entry per seed; capped at max_episodes (returned as the cap
/// plus one when never reached).
std::vector<std::int64_t> first_success_episodes(int horizon, ExplorationPolicy policy,
                                                 std::span<const std::uint64_t> seeds,
                                                 std::int64_t max_episodes = 1'000'000);

/// Sample mean of first_success_episodes.
double episodes_to_first_success(int horizon, ExplorationPolicy policy, std::span<const std::uint64_t> seeds);

}  // namespace ocp
