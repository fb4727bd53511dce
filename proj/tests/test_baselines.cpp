#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>

#include "ocp/baselines.hpp"
#include "support/oracles.hpp"

using namespace ocp;

namespace {

std::vector<double> action_frequencies(const QTable& table, int n, std::uint64_t seed, bool boltzmann) {
  Rng rng(seed);
  std::vector<double> counts(std::size_t(table.shape.actions), 0.0);
  for (int i = 0; i < n; ++i) {
    const int a = boltzmann ? boltzmann_action(table, 0, 0, rng) : epsilon_greedy_action(table, 0, 0, rng);
    counts[std::size_t(a)] += 1.0;
  }
  for (double& c : counts) c /= n;
  return counts;
}

std::vector<std::uint64_t> seeds(int n, std::uint64_t first = 0) {
  std::vector<std::uint64_t> out(static_cast<std::size_t>(n));
  std::iota(out.begin(), out.end(), first);
  return out;
}

}  // namespace

TEST_CASE("all-zero table: uniform Boltzmann choice") {
  const QTable t(Shape{1, 4, 1});
  for (double f : action_frequencies(t, 40000, 1, true)) CHECK(f == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("softmax of (0, ln 2) is (1/3, 2/3)") {
  QTable t(Shape{1, 2, 1});
  t.values[1] = std::log(2.0);
  const auto f = action_frequencies(t, 60000, 2, true);
  CHECK(f[0] == doctest::Approx(1.0 / 3.0).epsilon(0.03));
  CHECK(f[1] == doctest::Approx(2.0 / 3.0).epsilon(0.03));
}

TEST_CASE("large inverse temperature picks the unique maximizer") {
  QTable t(Shape{1, 3, 1}, 1.0, 500.0);
  t.values << 0.1, 0.3, 0.2;
  const auto f = action_frequencies(t, 2000, 3, true);
  CHECK(f[1] == 1.0);
}

TEST_CASE("epsilon-greedy mixes uniform exploration with the greedy action") {
  QTable t(Shape{1, 2, 1}, 1.0, 1.0, 0.2);
  t.values << 0.0, 1.0;
  const auto f = action_frequencies(t, 50000, 4, false);
  CHECK(f[1] == doctest::Approx(0.9).epsilon(0.02));
  QTable tied(Shape{1, 2, 1}, 1.0, 1.0, 0.0);
  const auto g = action_frequencies(tied, 20000, 5, false);
  CHECK(g[0] == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("Q update") {
  const Shape s{2, 2, 2};
  QTable t(s, 1.0);
  q_update(t, {0, 1, 1}, 1.0, std::nullopt);
  CHECK(t({0, 1, 1}) == 1.0);
  q_update(t, {1, 0, 0}, 0.5, 0);
  CHECK(t({1, 0, 0}) == 1.5);

  QTable frozen(s, 0.0);
  q_update(frozen, {0, 1, 1}, 1.0, std::nullopt);
  CHECK(frozen.values.isZero(0));

  QTable half(s, 0.5);
  q_update(half, {0, 0, 1}, 2.0, std::nullopt);
  CHECK(half({0, 0, 1}) == 1.0);
}

TEST_CASE("chain: the table stays zero until the first success") {
  for (double alpha : {0.3, 1.0}) {
    SystemEnvironment env(make_chain_env(5));
    QLearningAgent agent(env.shape(), ExplorationPolicy::boltzmann, 9, alpha);
    for (int j = 0; j < 500; ++j) {
      const EpisodeTrace tr = agent.run_episode(env);
      if (tr.total_reward() > 0.5) break;
      CHECK(agent.table().values.isZero(0));
    }
  }
}

TEST_CASE("chain: after the first success the path is learned within H optimal episodes") {
  const int h = 5;
  SystemEnvironment env(make_chain_env(h));
  QLearningAgent agent(env.shape(), ExplorationPolicy::boltzmann, 11, 1.0);
  EpisodeTrace tr;
  do {
    tr = agent.run_episode(env);
  } while (tr.total_reward() < 0.5);
  // Replaying the optimal path backs the unit reward up one period per episode.
  QTable replay = agent.table();
  for (int episode = 0; episode < h; ++episode) {
    for (int t = 0; t < h; ++t)
      q_update(replay, {t, kChainPathAction, t}, env.spec().reward({t, kChainPathAction, t}),
               t < h - 1 ? std::optional<int>(t + 1) : std::nullopt);
  }
  for (int t = 0; t < h; ++t) CHECK(replay({t, kChainPathAction, t}) == 1.0);

  // Greedy play on the learned table then succeeds every episode.
  replay.epsilon = 0.0;
  Rng rng(13);
  for (int j = 0; j < 20; ++j) {
    int x = 0;
    double total = 0.0;
    for (int t = 0; t < h; ++t) {
      const Triple z{x, epsilon_greedy_action(replay, x, t, rng), t};
      total += env.spec().reward(z);
      if (t < h - 1) x = env.spec().next_state(z);
    }
    CHECK(total == 1.0);
  }
}

TEST_CASE("first success is geometric with p = 2^-(H-1)") {
  for (int h = 2; h <= 6; ++h) {
    const auto s = seeds(10000, std::uint64_t(h) * 100000);
    const auto firsts = first_success_episodes(h, ExplorationPolicy::boltzmann, s);
    CHECK(oracle::ks_geometric(firsts, std::pow(0.5, h - 1)) < 0.05);
  }
  const auto s2 = seeds(4000);
  CHECK(episodes_to_first_success(2, ExplorationPolicy::boltzmann, s2) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("H = 7: mean first success within 15 percent of 64") {
  const auto s = seeds(1000, 7000);
  const double mean = episodes_to_first_success(7, ExplorationPolicy::boltzmann, s);
  CHECK(mean > 64.0 * 0.85);
  CHECK(mean < 64.0 * 1.15);
}

TEST_CASE("seeded runs repeat") {
  const auto s = seeds(20);
  CHECK(first_success_episodes(5, ExplorationPolicy::epsilon_greedy, s) ==
        first_success_episodes(5, ExplorationPolicy::epsilon_greedy, s));
  const auto uni = first_success_episodes(3, ExplorationPolicy::uniform, s, 1);
  for (auto v : uni) CHECK(v <= 2);
}
