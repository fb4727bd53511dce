// ocp: run, sweep, and inspect optimistic constraint propagation experiments.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include "acceptance/suite.hpp"
#include "ocp/config.hpp"
#include "ocp/eluder.hpp"
#include "ocp/runner.hpp"

namespace {

using namespace ocp;

struct RunFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> episodes;
  bool timing = false;
};

RunConfig load_with_overrides(const RunFlags& f) {
  RunConfig c = load_run_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.episodes) {
    if (*f.episodes < 1) throw ConfigError("--episodes", "must be at least 1");
    c.episodes = *f.episodes;
  }
  if (!f.out.empty()) c.output = f.out;
  return c;
}

Json summary_line(const RunRecord& rec) {
  Json j{{"seed", rec.config.value("seed", 0)},
         {"episodes", rec.summary.episodes},
         {"suboptimal", rec.summary.suboptimal},
         {"final_regret", rec.summary.final_regret}};
  if (rec.summary.eluder_dimension) j["eluder_dimension"] = *rec.summary.eluder_dimension;
  if (rec.summary.rho) j["rho"] = *rec.summary.rho;
  if (rec.summary.wall_seconds) j["wall_seconds"] = *rec.summary.wall_seconds;
  return j;
}

int cmd_run(const RunFlags& f) {
  const RunConfig c = load_with_overrides(f);
  RunOptions o;
  o.timing = f.timing;
  const RunRecord rec = ocp::run(c, o);
  if (c.output.empty()) write_jsonl(rec, std::cout);
  else std::cout << summary_line(rec).dump() << '\n';
  return 0;
}

int cmd_sweep(const RunFlags& f, int count, int threads) {
  const RunConfig c = load_with_overrides(f);
  if (count < 1) throw ConfigError("--count", "must be at least 1");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(c.seed + std::uint64_t(i));
  RunOptions o;
  o.timing = f.timing;
  const auto records = run_sweep(c, seeds, threads, o);
  for (const auto& rec : records) std::cout << summary_line(rec).dump() << '\n';
  return 0;
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("--config", std::string("malformed JSON: ") + e.what());
  }
}

Json triples_json(const std::vector<Triple>& ts) {
  Json out = Json::array();
  for (const auto& z : ts) out.push_back({z.state, z.action, z.period});
  return out;
}

int cmd_eluder(const std::string& path, const std::string& method, bool witness) {
  const Json j = read_json(path);
  Json out;
  if (j.contains("sparse")) {
    const Json& s = j["sparse"];
    if (!s.is_object() || !s.contains("phi") || !s.contains("k0"))
      throw ConfigError("sparse", "expected {\"phi\": [[...]], \"k0\": n}");
    const auto rows = s["phi"].get<std::vector<std::vector<double>>>();
    if (rows.empty() || rows[0].empty()) throw ConfigError("sparse.phi", "must be nonempty");
    MatrixXd phi(Index(rows.size()), Index(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows[0].size()) throw ConfigError("sparse.phi", "rows differ in length");
      for (std::size_t k = 0; k < rows[i].size(); ++k) phi(Index(i), Index(k)) = rows[i][k];
    }
    const int k0 = s["k0"].get<int>();
    const int horizon = s.value("horizon", 1);
    out = {{"class", "sparse"}, {"dimension", sparse_eluder_dimension({phi, k0}, horizon)}};
  } else {
    const RunConfig c = parse_run_config(j);
    if (c.agent.kind != AgentConfig::Kind::ocp) throw ConfigError("agent.kind", "eluder needs an ocp agent class");
    const Instance inst = build_instance(c.environment, c.seed);
    const Shape& shape = inst.env->shape();
    const auto domain = all_triples(shape);
    // Reuse the runner's class construction through a diagnostics-enabled agent.
    AgentConfig a = c.agent;
    a.diagnostics = true;
    auto agent = build_agent(a, inst, c.seed);
    const auto* tracker = static_cast<const OcpAgent&>(*agent).diagnostics();
    const bool exact = method == "exact" || (method == "auto" && shape.size() <= kExactDomainBudget);
    const EluderResult r = exact ? eluder_dimension_exact(domain, tracker->oracle())
                                 : eluder_dimension_greedy(domain, tracker->oracle());
    out = {{"method", exact ? "exact" : "greedy"}, {"domain", shape.size()}, {"dimension", r.dimension}};
    if (witness) out["witness"] = triples_json(r.witness);
  }
  std::cout << out.dump() << '\n';
  return 0;
}

int cmd_check(const std::vector<int>& only) {
  bool ok = true;
  acceptance::run(std::set<int>(only.begin(), only.end()), [&](const acceptance::CriterionResult& r) {
    std::cout << acceptance::format(r) << std::endl;
    ok = ok && r.pass;
  });
  return ok ? 0 : 1;
}

void add_run_flags(CLI::App* app, RunFlags& f) {
  app->add_option("--config", f.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app->add_option("--out", f.out, "record path (JSON lines; a .csv is written beside it)");
  app->add_option("--seed", f.seed, "override the run seed");
  app->add_option("--episodes", f.episodes, "override the episode budget");
  app->add_flag("--timing", f.timing, "include wall time in the summary");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimistic constraint propagation experiments"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "run one configuration");
  add_run_flags(run, run_flags);

  RunFlags sweep_flags;
  int count = 10;
  int threads = int(std::max(1u, std::thread::hardware_concurrency()));
  auto* sweep = app.add_subcommand("sweep", "run one configuration over consecutive seeds");
  add_run_flags(sweep, sweep_flags);
  sweep->add_option("--count", count, "number of seeds, starting at the configured seed");
  sweep->add_option("--threads", threads, "worker threads");

  std::string eluder_config;
  std::string method = "auto";
  bool witness = false;
  auto* eluder = app.add_subcommand("eluder", "eluder dimension of a configured class");
  eluder->add_option("--config", eluder_config, "run configuration, or {\"sparse\": {...}}")
      ->required()
      ->check(CLI::ExistingFile);
  eluder->add_option("--method", method, "exact, greedy or auto")->check(CLI::IsMember({"exact", "greedy", "auto"}));
  eluder->add_flag("--witness", witness, "print an independent sequence of maximal length");

  std::vector<int> only;
  auto* check = app.add_subcommand("check", "run the acceptance suite");
  check->add_option("criteria", only, "criterion ids to run (default: all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_flags);
    if (*sweep) return cmd_sweep(sweep_flags, count, threads);
    if (*eluder) return cmd_eluder(eluder_config, method, witness);
    if (*check) return cmd_check(only);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
