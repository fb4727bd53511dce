#include "ocp/config.hpp"

#include <cmath>
#include <fstream>

#include "ocp/hypothesis.hpp"

namespace ocp {

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const Json* field(const Json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
}

void reject_unknown(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(join(path, it.key()), "unknown field");
  }
}

std::int64_t get_int(const Json& j, const std::string& path, const std::string& key,
                     std::optional<std::int64_t> fallback, std::int64_t min_value) {
  const Json* v = field(j, key);
  if (!v) {
    if (!fallback) throw ConfigError(join(path, key), "required");
    return *fallback;
  }
  if (!v->is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
  const std::int64_t x = v->get<std::int64_t>();
  if (x < min_value) throw ConfigError(join(path, key), "must be at least " + std::to_string(min_value));
  return x;
}

std::optional<std::uint64_t> get_seed(const Json& j, const std::string& path, const std::string& key) {
  const Json* v = field(j, key);
  if (!v) return std::nullopt;
  if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0))
    throw ConfigError(join(path, key), "expected a nonnegative integer");
  return v->get<std::uint64_t>();
}

double get_real(const Json& j, const std::string& path, const std::string& key, std::optional<double> fallback) {
  const Json* v = field(j, key);
  if (!v) {
    if (!fallback) throw ConfigError(join(path, key), "required");
    return *fallback;
  }
  if (!v->is_number()) throw ConfigError(join(path, key), "expected a number");
  return v->get<double>();
}

bool get_bool(const Json& j, const std::string& path, const std::string& key, bool fallback) {
  const Json* v = field(j, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError(join(path, key), "expected true or false");
  return v->get<bool>();
}

std::string get_kind(const Json& j, const std::string& path) {
  const Json* v = field(j, "kind");
  if (!v) throw ConfigError(join(path, "kind"), "required");
  if (!v->is_string()) throw ConfigError(join(path, "kind"), "expected a string");
  return v->get<std::string>();
}

std::vector<double> get_vector(const Json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::vector<std::vector<double>> get_matrix(const Json& j, const std::string& path, const std::string& key) {
  const Json* v = field(j, key);
  if (!v) throw ConfigError(join(path, key), "required");
  if (!v->is_array()) throw ConfigError(join(path, key), "expected an array of rows");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < v->size(); ++i)
    out.push_back(get_vector((*v)[i], join(path, key) + "[" + std::to_string(i) + "]"));
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].size() != out[0].size()) throw ConfigError(join(path, key), "rows differ in length");
  return out;
}

std::vector<int> get_ids(const Json& j, const std::string& path, const std::string& key) {
  const Json* v = field(j, key);
  if (!v) return {};
  if (!v->is_array()) throw ConfigError(join(path, key), "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    const Json& e = (*v)[i];
    if (!e.is_number_integer() || e.get<std::int64_t>() < 0)
      throw ConfigError(join(path, key) + "[" + std::to_string(i) + "]", "expected a nonnegative integer");
    out.push_back(e.get<int>());
  }
  return out;
}

RandomEnvConfig parse_random(const Json& j, const std::string& path) {
  reject_unknown(j, path, {"kind", "states", "actions", "horizon", "seed", "reward_low", "reward_high", "fixed_start"});
  RandomEnvConfig r;
  r.states = static_cast<int>(get_int(j, path, "states", std::nullopt, 1));
  r.actions = static_cast<int>(get_int(j, path, "actions", std::nullopt, 1));
  r.horizon = static_cast<int>(get_int(j, path, "horizon", std::nullopt, 1));
  r.seed = get_seed(j, path, "seed");
  r.reward_low = get_real(j, path, "reward_low", -1.0);
  r.reward_high = get_real(j, path, "reward_high", 1.0);
  if (r.reward_low > r.reward_high) throw ConfigError(join(path, "reward_low"), "exceeds reward_high");
  r.fixed_start = get_bool(j, path, "fixed_start", false);
  return r;
}

EnvironmentConfig parse_environment(const Json& j, const std::string& path) {
  require_object(j, path);
  EnvironmentConfig e;
  const std::string kind = get_kind(j, path);
  if (kind == "chain") {
    reject_unknown(j, path, {"kind", "horizon"});
    e.kind = EnvironmentConfig::Kind::chain;
    e.horizon = static_cast<int>(get_int(j, path, "horizon", std::nullopt, 2));
  } else if (kind == "adversary") {
    reject_unknown(j, path, {"kind", "pairs", "horizon", "r_bar"});
    e.kind = EnvironmentConfig::Kind::adversary;
    e.pairs = static_cast<int>(get_int(j, path, "pairs", std::nullopt, 1));
    e.horizon = static_cast<int>(get_int(j, path, "horizon", std::nullopt, 1));
    e.r_bar = get_real(j, path, "r_bar", 1.0);
    if (!(e.r_bar >= 0.0)) throw ConfigError(join(path, "r_bar"), "must be nonnegative");
  } else if (kind == "random") {
    e.kind = EnvironmentConfig::Kind::random;
    e.random = parse_random(j, path);
    e.horizon = e.random.horizon;
  } else if (kind == "aggregation") {
    reject_unknown(j, path, {"kind", "base", "partition", "perturbation", "seed"});
    e.kind = EnvironmentConfig::Kind::aggregation;
    const Json* base = field(j, "base");
    if (!base) throw ConfigError(join(path, "base"), "required");
    require_object(*base, join(path, "base"));
    if (get_kind(*base, join(path, "base")) != "random")
      throw ConfigError(join(path, "base.kind"), "aggregation base must be a random environment");
    e.random = parse_random(*base, join(path, "base"));
    e.horizon = e.random.horizon;
    const Json* part = field(j, "partition");
    const std::string ppath = join(path, "partition");
    if (!part) throw ConfigError(ppath, "required");
    require_object(*part, ppath);
    reject_unknown(*part, ppath, {"per_period", "ids"});
    if (field(*part, "per_period")) e.per_period = static_cast<int>(get_int(*part, ppath, "per_period", std::nullopt, 1));
    e.partition_ids = get_ids(*part, ppath, "ids");
    if (e.per_period.has_value() == !e.partition_ids.empty())
      throw ConfigError(ppath, "give exactly one of per_period or ids");
    e.perturbation = get_real(j, path, "perturbation", 0.0);
    if (!std::isfinite(e.perturbation)) throw ConfigError(join(path, "perturbation"), "must be finite");
    e.perturbation_seed = get_seed(j, path, "seed");
  } else {
    throw ConfigError(join(path, "kind"), "unknown environment '" + kind + "'");
  }
  return e;
}

ClassConfig parse_class(const Json& j, const std::string& path) {
  require_object(j, path);
  ClassConfig c;
  const std::string kind = get_kind(j, path);
  try {
    reject_unsupported_class(kind);
  } catch (const UnsupportedClassError& err) {
    throw ConfigError(join(path, "kind"), err.what());
  }
  if (kind == "tabular") {
    reject_unknown(j, path, {"kind"});
    c.kind = ClassConfig::Kind::tabular;
  } else if (kind == "linear") {
    reject_unknown(j, path, {"kind", "features", "base"});
    c.kind = ClassConfig::Kind::linear;
    c.features = get_matrix(j, path, "features");
    if (c.features.empty() || c.features[0].empty()) throw ConfigError(join(path, "features"), "must be nonempty");
    if (const Json* base = field(j, "base")) {
      const std::string bpath = join(path, "base");
      require_object(*base, bpath);
      reject_unknown(*base, bpath, {"rows", "bounds"});
      c.base_rows = get_matrix(*base, bpath, "rows");
      const Json* b = field(*base, "bounds");
      if (!b) throw ConfigError(join(bpath, "bounds"), "required");
      c.base_bounds = get_vector(*b, join(bpath, "bounds"));
      if (c.base_bounds.size() != c.base_rows.size()) throw ConfigError(join(bpath, "bounds"), "one bound per row");
      for (const auto& r : c.base_rows)
        if (r.size() != c.features[0].size()) throw ConfigError(join(bpath, "rows"), "row length must match the feature count");
    }
  } else if (kind == "adversary_span") {
    reject_unknown(j, path, {"kind"});
    c.kind = ClassConfig::Kind::adversary_span;
  } else if (kind == "finite") {
    reject_unknown(j, path, {"kind", "members"});
    c.kind = ClassConfig::Kind::finite;
    c.members = get_matrix(j, path, "members");
    if (c.members.empty()) throw ConfigError(join(path, "members"), "must be nonempty");
  } else if (kind == "aggregation") {
    reject_unknown(j, path, {"kind", "engine", "partition"});
    c.kind = ClassConfig::Kind::aggregation;
    if (const Json* eng = field(j, "engine")) {
      if (!eng->is_string() || (*eng != "fast" && *eng != "lp"))
        throw ConfigError(join(path, "engine"), "expected \"fast\" or \"lp\"");
      c.fast = *eng == "fast";
    }
    c.partition_ids = get_ids(j, path, "partition");
  } else {
    throw ConfigError(join(path, "kind"), "unknown hypothesis class '" + kind + "'");
  }
  return c;
}

AgentConfig parse_agent(const Json& j, const std::string& path) {
  require_object(j, path);
  AgentConfig a;
  const std::string kind = get_kind(j, path);
  if (kind == "ocp") {
    reject_unknown(j, path, {"kind", "class", "diagnostics"});
    a.kind = AgentConfig::Kind::ocp;
    const Json* cls = field(j, "class");
    if (!cls) throw ConfigError(join(path, "class"), "required");
    a.cls = parse_class(*cls, join(path, "class"));
    a.diagnostics = get_bool(j, path, "diagnostics", false);
  } else if (kind == "boltzmann") {
    reject_unknown(j, path, {"kind", "alpha", "beta"});
    a.kind = AgentConfig::Kind::boltzmann;
    a.alpha = get_real(j, path, "alpha", 1.0);
    a.beta = get_real(j, path, "beta", 1.0);
    if (!(a.beta > 0.0)) throw ConfigError(join(path, "beta"), "must be positive");
  } else if (kind == "epsilon_greedy") {
    reject_unknown(j, path, {"kind", "alpha", "epsilon"});
    a.kind = AgentConfig::Kind::epsilon_greedy;
    a.alpha = get_real(j, path, "alpha", 1.0);
    a.epsilon = get_real(j, path, "epsilon", 0.1);
    if (!(a.epsilon >= 0.0 && a.epsilon <= 1.0)) throw ConfigError(join(path, "epsilon"), "must lie in [0, 1]");
  } else {
    throw ConfigError(join(path, "kind"), "unknown agent '" + kind + "'");
  }
  if (!(a.alpha >= 0.0 && a.alpha <= 1.0)) throw ConfigError(join(path, "alpha"), "must lie in [0, 1]");
  return a;
}

Json random_json(const RandomEnvConfig& r) {
  Json j{{"kind", "random"}, {"states", r.states}, {"actions", r.actions}, {"horizon", r.horizon},
         {"reward_low", r.reward_low}, {"reward_high", r.reward_high}, {"fixed_start", r.fixed_start}};
  if (r.seed) j["seed"] = *r.seed;
  return j;
}

}  // namespace

RunConfig parse_run_config(const Json& j) {
  require_object(j, "");
  reject_unknown(j, "", {"environment", "agent", "episodes", "seed", "output"});
  RunConfig c;
  const Json* env = field(j, "environment");
  if (!env) throw ConfigError("environment", "required");
  c.environment = parse_environment(*env, "environment");
  const Json* agent = field(j, "agent");
  if (!agent) throw ConfigError("agent", "required");
  c.agent = parse_agent(*agent, "agent");
  c.episodes = get_int(j, "", "episodes", std::nullopt, 1);
  c.seed = get_seed(j, "", "seed").value_or(0);
  if (const Json* out = field(j, "output")) {
    if (!out->is_string()) throw ConfigError("output", "expected a path string");
    c.output = out->get<std::string>();
  }
  if (c.agent.kind == AgentConfig::Kind::ocp && c.agent.cls.kind == ClassConfig::Kind::adversary_span &&
      c.environment.kind != EnvironmentConfig::Kind::adversary)
    throw ConfigError("agent.class.kind", "adversary_span requires the adversary environment");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("--config", std::string("malformed JSON: ") + e.what());
  }
  return parse_run_config(j);
}

Json to_json(const RunConfig& c) {
  Json env;
  const auto& e = c.environment;
  switch (e.kind) {
    case EnvironmentConfig::Kind::chain:
      env = {{"kind", "chain"}, {"horizon", e.horizon}};
      break;
    case EnvironmentConfig::Kind::adversary:
      env = {{"kind", "adversary"}, {"pairs", e.pairs}, {"horizon", e.horizon}, {"r_bar", e.r_bar}};
      break;
    case EnvironmentConfig::Kind::random:
      env = random_json(e.random);
      break;
    case EnvironmentConfig::Kind::aggregation: {
      env = {{"kind", "aggregation"}, {"base", random_json(e.random)}, {"perturbation", e.perturbation}};
      if (e.per_period) env["partition"] = {{"per_period", *e.per_period}};
      else env["partition"] = {{"ids", e.partition_ids}};
      if (e.perturbation_seed) env["seed"] = *e.perturbation_seed;
      break;
    }
  }
  Json agent;
  const auto& a = c.agent;
  switch (a.kind) {
    case AgentConfig::Kind::ocp: {
      Json cls;
      switch (a.cls.kind) {
        case ClassConfig::Kind::tabular: cls = {{"kind", "tabular"}}; break;
        case ClassConfig::Kind::adversary_span: cls = {{"kind", "adversary_span"}}; break;
        case ClassConfig::Kind::linear:
          cls = {{"kind", "linear"}, {"features", a.cls.features}};
          if (!a.cls.base_rows.empty()) cls["base"] = {{"rows", a.cls.base_rows}, {"bounds", a.cls.base_bounds}};
          break;
        case ClassConfig::Kind::finite: cls = {{"kind", "finite"}, {"members", a.cls.members}}; break;
        case ClassConfig::Kind::aggregation:
          cls = {{"kind", "aggregation"}, {"engine", a.cls.fast ? "fast" : "lp"}};
          if (!a.cls.partition_ids.empty()) cls["partition"] = a.cls.partition_ids;
          break;
      }
      agent = {{"kind", "ocp"}, {"class", cls}, {"diagnostics", a.diagnostics}};
      break;
    }
    case AgentConfig::Kind::boltzmann:
      agent = {{"kind", "boltzmann"}, {"alpha", a.alpha}, {"beta", a.beta}};
      break;
    case AgentConfig::Kind::epsilon_greedy:
      agent = {{"kind", "epsilon_greedy"}, {"alpha", a.alpha}, {"epsilon", a.epsilon}};
      break;
  }
  Json out{{"environment", env}, {"agent", agent}, {"episodes", c.episodes}, {"seed", c.seed}};
  if (!c.output.empty()) out["output"] = c.output;
  return out;
}

}  // namespace ocp
