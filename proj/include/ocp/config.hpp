#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace ocp {

using Json = nlohmann::json;

/// Validation failure naming the offending field, e.g. "agent.class.kind: ...".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct RandomEnvConfig {
  int states = 4;
  int actions = 2;
  int horizon = 3;
  std::optional<std::uint64_t> seed;  // defaults to the run seed
  double reward_low = -1.0;
  double reward_high = 1.0;
  bool fixed_start = false;
};

struct EnvironmentConfig {
  enum class Kind { chain, adversary, random, aggregation } kind = Kind::chain;
  int horizon = 0;    // chain, adversary
  int pairs = 0;      // adversary K
  double r_bar = 1.0;  // adversary
  RandomEnvConfig random;  // random, and the aggregation base
  // aggregation
  std::optional<int> per_period;
  std::vector<int> partition_ids;
  double perturbation = 0.0;
  std::optional<std::uint64_t> perturbation_seed;  // defaults to the run seed
};

struct ClassConfig {
  enum class Kind { tabular, linear, adversary_span, finite, aggregation } kind = Kind::tabular;
  std::vector<std::vector<double>> features;  // linear: |Z| rows
  std::vector<std::vector<double>> base_rows;  // linear: optional A of A theta <= b
  std::vector<double> base_bounds;
  std::vector<std::vector<double>> members;  // finite
  bool fast = true;                          // aggregation: interval engine or generic LP
  std::vector<int> partition_ids;            // aggregation: explicit partition
};

struct AgentConfig {
  enum class Kind { ocp, boltzmann, epsilon_greedy } kind = Kind::ocp;
  ClassConfig cls;
  bool diagnostics = false;
  double alpha = 1.0;
  double beta = 1.0;
  double epsilon = 0.1;
};

struct RunConfig {
  EnvironmentConfig environment;
  AgentConfig agent;
  std::int64_t episodes = 1;
  std::uint64_t seed = 0;
  std::string output;  // empty: no file output
};

RunConfig parse_run_config(const Json& j);
RunConfig load_run_config(const std::string& path);

/// Canonical JSON form with every default filled in.
Json to_json(const RunConfig& c);

}  // namespace ocp
