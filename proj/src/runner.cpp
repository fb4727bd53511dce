#include "ocp/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "ocp/baselines.hpp"
#include "ocp/eluder.hpp"
#include "ocp/hypothesis.hpp"

namespace ocp {

namespace {

RandomEnvOptions random_options(const RandomEnvConfig& r) {
  RandomEnvOptions o;
  o.reward_low = r.reward_low;
  o.reward_high = r.reward_high;
  o.fixed_start = r.fixed_start;
  return o;
}

MatrixXd to_matrix(const std::vector<std::vector<double>>& rows, const std::string& field) {
  if (rows.empty()) return MatrixXd(0, 0);
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      if (!std::isfinite(rows[i][k])) throw ConfigError(field, "entries must be finite");
      m(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
    }
  return m;
}

Partition explicit_partition(const std::vector<int>& ids, const Shape& shape, const std::string& field) {
  if (static_cast<Index>(ids.size()) != shape.size())
    throw ConfigError(field, "needs one id per triple (" + std::to_string(shape.size()) + ")");
  Partition p{ids, *std::max_element(ids.begin(), ids.end()) + 1};
  try {
    p.periods(shape);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
  return p;
}

Partition class_partition(const ClassConfig& cls, const Instance& inst) {
  const Shape& shape = inst.env->shape();
  if (!cls.partition_ids.empty()) return explicit_partition(cls.partition_ids, shape, "agent.class.partition");
  if (inst.partition) return *inst.partition;
  return singleton_partition(shape);
}

LinearParametricClass linear_class(const ClassConfig& cls, const Instance& inst) {
  const Shape& shape = inst.env->shape();
  switch (cls.kind) {
    case ClassConfig::Kind::tabular:
      return LinearParametricClass::tabular(shape);
    case ClassConfig::Kind::adversary_span:
      return LinearParametricClass::span(shape, adversary_features(inst.adversary->pairs(), shape.horizon));
    case ClassConfig::Kind::aggregation:
      return LinearParametricClass::indicators(shape, class_partition(cls, inst));
    case ClassConfig::Kind::linear: {
      MatrixXd phi = to_matrix(cls.features, "agent.class.features");
      if (phi.rows() != shape.size())
        throw ConfigError("agent.class.features", "needs one row per triple (" + std::to_string(shape.size()) + ")");
      lp::PolyhedronXd base(phi.cols());
      if (!cls.base_rows.empty()) {
        const MatrixXd a = to_matrix(cls.base_rows, "agent.class.base.rows");
        for (Index i = 0; i < a.rows(); ++i) base.add_row(a.row(i), cls.base_bounds[static_cast<std::size_t>(i)]);
      }
      try {
        return LinearParametricClass(FeatureMap{shape, std::move(phi)}, std::move(base));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("agent.class", e.what());
      }
    }
    case ClassConfig::Kind::finite:
      break;
  }
  throw std::logic_error("linear_class: not a linear class");
}

FiniteClass finite_class(const ClassConfig& cls, const Instance& inst) {
  const Shape& shape = inst.env->shape();
  std::vector<VectorXd> members;
  for (std::size_t i = 0; i < cls.members.size(); ++i) {
    const auto& m = cls.members[i];
    if (static_cast<Index>(m.size()) != shape.size())
      throw ConfigError("agent.class.members[" + std::to_string(i) + "]",
                        "needs one value per triple (" + std::to_string(shape.size()) + ")");
    members.push_back(Eigen::Map<const VectorXd>(m.data(), static_cast<Index>(m.size())));
  }
  try {
    return FiniteClass(shape, std::move(members));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("agent.class.members", e.what());
  }
}

DependenceOracle class_oracle(const ClassConfig& cls, const Instance& inst) {
  if (cls.kind == ClassConfig::Kind::finite) return DependenceOracle::finite(finite_class(cls, inst));
  return DependenceOracle::polytope(linear_class(cls, inst));
}

}  // namespace

Instance build_instance(const EnvironmentConfig& c, std::uint64_t run_seed) {
  Instance inst;
  switch (c.kind) {
    case EnvironmentConfig::Kind::chain: {
      inst.spec = make_chain_env(c.horizon);
      break;
    }
    case EnvironmentConfig::Kind::adversary: {
      auto adv = make_adversary_env(c.pairs, c.horizon, c.r_bar);
      inst.adversary = adv.get();
      inst.reward_bound = c.r_bar;
      inst.env = std::move(adv);
      return inst;
    }
    case EnvironmentConfig::Kind::random: {
      inst.spec = make_random_env(c.random.states, c.random.actions, c.random.horizon,
                                  c.random.seed.value_or(run_seed), random_options(c.random));
      break;
    }
    case EnvironmentConfig::Kind::aggregation: {
      const SystemSpec base = make_random_env(c.random.states, c.random.actions, c.random.horizon,
                                              c.random.seed.value_or(run_seed), random_options(c.random));
      const Partition part = c.per_period ? partition_by_value(solve_optimal(base), *c.per_period)
                                          : explicit_partition(c.partition_ids, base.shape(), "environment.partition.ids");
      AggregationSystem agg = make_aggregation_env(base, part, c.perturbation, c.perturbation_seed.value_or(run_seed));
      inst.spec = std::move(agg.spec);
      inst.partition = std::move(agg.partition);
      inst.rho = agg.rho;
      break;
    }
  }
  inst.reward_bound = inst.spec->reward_bound();
  inst.env = std::make_unique<SystemEnvironment>(*inst.spec);
  return inst;
}

std::unique_ptr<Agent> build_agent(const AgentConfig& c, const Instance& inst, std::uint64_t run_seed) {
  const Shape& shape = inst.env->shape();
  const std::uint64_t agent_seed = mix64(run_seed ^ 0xa5a5a5a5a5a5a5a5ull);
  switch (c.kind) {
    case AgentConfig::Kind::boltzmann:
      return std::make_unique<QLearningAgent>(shape, ExplorationPolicy::boltzmann, agent_seed, c.alpha, c.beta);
    case AgentConfig::Kind::epsilon_greedy:
      return std::make_unique<QLearningAgent>(shape, ExplorationPolicy::epsilon_greedy, agent_seed, c.alpha, 1.0,
                                              c.epsilon);
    case AgentConfig::Kind::ocp:
      break;
  }
  std::unique_ptr<HypothesisEngine> engine;
  if (c.cls.kind == ClassConfig::Kind::finite) {
    engine = std::make_unique<FiniteEngine>(finite_class(c.cls, inst));
  } else if (c.cls.kind == ClassConfig::Kind::aggregation && c.cls.fast) {
    engine = std::make_unique<AggregationClass>(shape, class_partition(c.cls, inst));
  } else {
    engine = std::make_unique<LinearEngine>(linear_class(c.cls, inst));
  }
  std::optional<DependenceOracle> oracle;
  if (c.diagnostics) oracle = class_oracle(c.cls, inst);
  return std::make_unique<OcpAgent>(std::move(engine), std::move(oracle));
}

std::optional<int> class_eluder_dimension(const AgentConfig& c, const Instance& inst) {
  if (c.kind != AgentConfig::Kind::ocp) return std::nullopt;
  const Shape& shape = inst.env->shape();
  switch (c.cls.kind) {
    case ClassConfig::Kind::tabular:
      return static_cast<int>(shape.size());
    case ClassConfig::Kind::finite: {
      if (shape.size() > kExactDomainBudget) return std::nullopt;
      const auto domain = all_triples(shape);
      return eluder_dimension_exact(domain, class_oracle(c.cls, inst)).dimension;
    }
    default: {
      // Linear classes: greedy attains the rank, which is the dimension.
      const auto domain = all_triples(shape);
      return eluder_dimension_greedy(domain, class_oracle(c.cls, inst)).dimension;
    }
  }
}

RunRecord run(const RunConfig& config, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  Instance inst = build_instance(config.environment, config.seed);
  std::unique_ptr<Agent> agent = build_agent(config.agent, inst, config.seed);

  RunRecord rec;
  rec.config = to_json(config);
  rec.horizon = inst.env->shape().horizon;
  std::optional<OptimalValues> values;
  if (inst.spec) values = solve_optimal(*inst.spec);

  std::vector<int> starts;
  for (std::int64_t j = 0; j < config.episodes; ++j) {
    const EpisodeTrace trace = agent->run_episode(*inst.env);
    const EpisodeExtras extra = agent->last_extras();
    EpisodeRow row;
    row.j = j;
    row.reward = trace.total_reward();
    row.constraints = extra.constraints;
    row.t_star = extra.t_star;
    row.z_len = extra.z_len;
    starts.push_back(trace.triples.front().state);
    rec.rows.push_back(row);
  }

  if (inst.adversary) {
    // Regret is scored against the finished system, including the episodes played before it was fixed.
    const SystemSpec frozen = inst.adversary->complete() ? inst.adversary->freeze()
                                                         : inst.adversary->freeze_with_default(0);
    values = solve_optimal(frozen);
  }

  double cumulative = 0.0;
  for (std::size_t j = 0; j < rec.rows.size(); ++j) {
    EpisodeRow& row = rec.rows[j];
    row.v_star = values->v(starts[j], 0);
    cumulative += row.v_star - row.reward;
    row.regret = cumulative;
    row.suboptimal = row.reward < row.v_star - kValueSlack;
    if (row.suboptimal) ++rec.summary.suboptimal;
  }
  rec.summary.episodes = config.episodes;
  rec.summary.final_regret = cumulative;
  rec.summary.reward_bound = inst.reward_bound;
  rec.summary.eluder_dimension = class_eluder_dimension(config.agent, inst);
  if (inst.partition) {
    rec.summary.rho = inst.rho;
    rec.summary.partitions = inst.partition->count;
  }
  if (options.timing)
    rec.summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!config.output.empty()) save_record(rec, config.output);
  return rec;
}

std::vector<RunRecord> run_sweep(const RunConfig& config, std::span<const std::uint64_t> seeds, int threads,
                                 const RunOptions& options) {
  std::vector<RunRecord> out(seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        RunConfig c = config;
        c.seed = seeds[i];
        if (!c.output.empty()) {
          std::filesystem::path p(c.output);
          p.replace_filename(p.stem().string() + "-seed" + std::to_string(seeds[i]) + p.extension().string());
          c.output = p.string();
        }
        out[i] = run(c, options);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(seeds.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::int64_t loss_count(const RunRecord& record, double epsilon) {
  return std::count_if(record.rows.begin(), record.rows.end(), [&](const EpisodeRow& r) {
    return r.reward < r.v_star - epsilon - kValueSlack;
  });
}

double regret_at(const RunRecord& record, std::int64_t t) {
  const std::int64_t done = std::min<std::int64_t>(t / record.horizon, static_cast<std::int64_t>(record.rows.size()));
  return done == 0 ? 0.0 : record.rows[static_cast<std::size_t>(done - 1)].regret;
}

namespace {

Json row_json(const EpisodeRow& r) {
  Json j{{"type", "episode"}, {"j", r.j}, {"reward", r.reward}, {"v_star", r.v_star}, {"regret", r.regret},
         {"suboptimal", r.suboptimal}, {"constraints", r.constraints}, {"t_star", nullptr}, {"z_len", r.z_len}};
  if (r.t_star) j["t_star"] = *r.t_star;
  return j;
}

Json summary_json(const RunSummary& s) {
  Json j{{"type", "summary"}, {"episodes", s.episodes}, {"suboptimal", s.suboptimal},
         {"final_regret", s.final_regret}, {"reward_bound", s.reward_bound}};
  j["eluder_dimension"] = s.eluder_dimension ? Json(*s.eluder_dimension) : Json(nullptr);
  if (s.rho) j["rho"] = *s.rho;
  if (s.partitions) j["partitions"] = *s.partitions;
  if (s.wall_seconds) j["wall_seconds"] = *s.wall_seconds;
  return j;
}

}  // namespace

void write_jsonl(const RunRecord& record, std::ostream& out) {
  Json head{{"type", "config"}, {"config", record.config}};
  out << head.dump() << '\n';
  for (const auto& r : record.rows) out << row_json(r).dump() << '\n';
  out << summary_json(record.summary).dump() << '\n';
}

void write_csv(const RunRecord& record, std::ostream& out) {
  out << "j,reward,v_star,regret,suboptimal,constraints,t_star,z_len\n";
  for (const auto& r : record.rows) {
    out << r.j << ',' << Json(r.reward).dump() << ',' << Json(r.v_star).dump() << ',' << Json(r.regret).dump()
        << ',' << (r.suboptimal ? 1 : 0) << ',' << r.constraints << ',';
    if (r.t_star) out << *r.t_star;
    out << ',' << r.z_len << '\n';
  }
}

void save_record(const RunRecord& record, const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream jsonl(p);
  if (!jsonl) throw std::runtime_error("cannot write '" + path + "'");
  write_jsonl(record, jsonl);
  std::filesystem::path csv = p;
  csv.replace_extension(".csv");
  std::ofstream table(csv);
  if (!table) throw std::runtime_error("cannot write '" + csv.string() + "'");
  write_csv(record, table);
}

}  // namespace ocp
