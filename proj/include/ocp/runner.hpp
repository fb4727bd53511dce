#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ocp/agent.hpp"
#include "ocp/config.hpp"
#include "ocp/system.hpp"

namespace ocp {

struct EpisodeRow {
  std::int64_t j = 0;
  double reward = 0.0;
  double v_star = 0.0;
  double regret = 0.0;  // cumulative through episode j
  bool suboptimal = false;
  std::size_t constraints = 0;
  std::optional<int> t_star;
  std::size_t z_len = 0;
};

struct RunSummary {
  std::int64_t episodes = 0;
  std::int64_t suboptimal = 0;
  double final_regret = 0.0;
  double reward_bound = 0.0;
  std::optional<int> eluder_dimension;
  std::optional<double> rho;
  std::optional<int> partitions;
  std::optional<double> wall_seconds;
};

struct RunRecord {
  Json config;
  int horizon = 0;
  std::vector<EpisodeRow> rows;
  RunSummary summary;
};

/// An environment built from its descriptor, with what the runner needs to score it.
struct Instance {
  std::unique_ptr<Environment> env;
  std::optional<SystemSpec> spec;       // fixed systems
  AdversarySystem* adversary = nullptr;  // owned by env
  std::optional<Partition> partition;    // aggregation environments
  double rho = 0.0;
  double reward_bound = 0.0;
};

Instance build_instance(const EnvironmentConfig& config, std::uint64_t run_seed);
std::unique_ptr<Agent> build_agent(const AgentConfig& config, const Instance& instance, std::uint64_t run_seed);

/// Eluder dimension of the agent's class when it is cheap to certify.
std::optional<int> class_eluder_dimension(const AgentConfig& config, const Instance& instance);

struct RunOptions {
  bool timing = false;  // wall time makes records differ between runs
};

RunRecord run(const RunConfig& config, const RunOptions& options = {});

/// Runs the config once per seed on a pool of `threads` workers; records come back in seed order.
std::vector<RunRecord> run_sweep(const RunConfig& config, std::span<const std::uint64_t> seeds, int threads,
                                 const RunOptions& options = {});

/// Episodes with R < V* - epsilon, counting with the shared numerical slack.
std::int64_t loss_count(const RunRecord& record, double epsilon);

/// Regret(T): shortfall summed over the floor(T / H) episodes completed by time T.
double regret_at(const RunRecord& record, std::int64_t t);

void write_jsonl(const RunRecord& record, std::ostream& out);
void write_csv(const RunRecord& record, std::ostream& out);

/// Writes `path` as JSON lines and the CSV next to it (extension replaced by .csv).
void save_record(const RunRecord& record, const std::string& path);

}  // namespace ocp
