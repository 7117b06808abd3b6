#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "itm/errors.hpp"
#include "itm/harness.hpp"
#include "itm/random.hpp"
#include "json.hpp"

namespace itm {

using nlohmann::json;

namespace {

const char* kMethods[] = {"monotone1", "monotone2", "averaging", "accelerated"};

bool known_method(const std::string& m) {
  for (const char* k : kMethods) {
    if (m == k) return true;
  }
  return false;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw ContractViolation("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ContractViolation("bad value for '" + std::string(key) + "' in " + where + ": " + e.what());
  }
}

template <class T>
void read(const json& obj, const char* key, T& into, const std::string& where) {
  if (obj.contains(key) && !obj.at(key).is_null()) into = get<T>(obj, key, where);
}

template <class T>
void read_optional(const json& obj, const char* key, std::optional<T>& into, const std::string& where) {
  if (!obj.contains(key)) return;
  if (obj.at(key).is_null()) {
    into.reset();
  } else {
    into = get<T>(obj, key, where);
  }
}

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ContractViolation("bad number '" + text + "' for " + what);
  }
  return v;
}

long parse_integer(const std::string& text, const std::string& what) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ContractViolation("bad integer '" + text + "' for " + what);
  }
  return v;
}

SubsolverConfig::Kind parse_subsolver(const std::string& s) {
  if (s == "exact") return SubsolverConfig::Kind::exact;
  if (s == "fgm") return SubsolverConfig::Kind::fgm;
  throw ContractViolation("unknown subsolver '" + s + "' (expected exact or fgm)");
}

StopRule parse_stop(const std::string& s) {
  if (s == "bound") return StopRule::bound;
  if (s == "exact") return StopRule::exact;
  throw ContractViolation("unknown stop rule '" + s + "' (expected bound or exact)");
}

ProblemSpec problem_from_json(const json& j) {
  const std::string where = "problem";
  if (!j.is_object()) throw ContractViolation("problem must be an object");
  reject_unknown(j, {"kind", "n", "m", "mu", "l2", "q", "c", "data", "seed", "composite"}, where);
  ProblemSpec spec = ProblemSpec::defaults(j.contains("kind") ? get<std::string>(j, "kind", where) : "logsumexp");
  read(j, "n", spec.n, where);
  read(j, "m", spec.m, where);
  read(j, "mu", spec.mu, where);
  read(j, "l2", spec.l2, where);
  read(j, "q", spec.q, where);
  read(j, "c", spec.c, where);
  read(j, "data", spec.data, where);
  read_optional(j, "seed", spec.seed, where);
  if (j.contains("composite") && !j.at("composite").is_null()) {
    const json& c = j.at("composite");
    if (!c.is_object()) throw ContractViolation("composite must be an object");
    reject_unknown(c, {"kind", "mu", "q"}, "composite");
    CompositeSpec cs;
    read(c, "kind", cs.kind, "composite");
    read(c, "mu", cs.mu, "composite");
    read(c, "q", cs.q, "composite");
    if (cs.kind != "power_norm" && cs.kind != "quadratic") {
      throw ContractViolation("unknown composite kind '" + cs.kind + "'");
    }
    if (cs.kind == "quadratic") cs.q = 2.0;
    spec.composite = cs;
  }
  return spec;
}

json problem_to_json(const ProblemSpec& spec) {
  json j;
  j["kind"] = spec.kind;
  j["n"] = spec.n;
  if (spec.kind != "powered_chain") j["m"] = spec.m;
  if (spec.kind == "logsumexp") j["mu"] = spec.mu;
  if (spec.kind == "logistic") {
    j["l2"] = spec.l2;
    j["data"] = spec.data;
  }
  if (spec.kind == "powered_chain") {
    j["q"] = spec.q;
    j["c"] = spec.c;
  }
  j["seed"] = spec.seed ? json(*spec.seed) : json(nullptr);
  if (spec.composite) {
    j["composite"] = {{"kind", spec.composite->kind}, {"mu", spec.composite->mu}, {"q", spec.composite->q}};
  } else {
    j["composite"] = nullptr;
  }
  return j;
}

void validate(const ExperimentConfig& c) {
  if (!known_method(c.method)) throw ContractViolation("unknown method '" + c.method + "'");
  if (c.order != 1 && c.order != 2) throw ContractViolation("p must be 1 or 2");
  if (c.max_iterations < 0) throw ContractViolation("max_iterations must be nonnegative");
  if (c.inner_max_iterations < 1) throw ContractViolation("inner_max_iterations must be positive");
  const auto& k = c.problem.kind;
  if (k != "logsumexp" && k != "logistic" && k != "powered_chain") {
    throw ContractViolation("unknown problem kind '" + k + "'");
  }
}

}  // namespace

ProblemSpec ProblemSpec::defaults(const std::string& kind) {
  ProblemSpec spec;
  spec.kind = kind;
  if (kind == "logsumexp") {
    spec.n = 100;
    spec.m = 600;
    spec.mu = 0.05;
  } else if (kind == "logistic") {
    spec.n = 50;
    spec.m = 300;
    spec.l2 = 1e-2;
  } else if (kind == "powered_chain") {
    spec.n = 20;
    spec.q = 3.0;
    spec.c = 2.0;
  } else {
    throw ContractViolation("unknown problem kind '" + kind + "' (expected logsumexp, logistic, powered_chain)");
  }
  return spec;
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < e.byte; ++i) {
      if (text[i] == '\n') ++line;
    }
    throw ParseError(std::string("config: ") + e.what(), line);
  }
  if (!j.is_object()) throw ContractViolation("config must be a JSON object");
  const std::string where = "config";
  reject_unknown(j,
                 {"schema_version", "name", "problem", "method", "p", "H", "policy", "zeta", "inner_policy",
                  "subsolver", "stop", "max_iterations", "inner_max_iterations", "target_gap", "gradient_tolerance",
                  "wall_time_budget_s", "accuracy_floor", "seed", "out", "x0", "record_wall_time", "fstar",
                  "cache_dir"},
                 where);
  if (j.contains("schema_version")) {
    const int v = get<int>(j, "schema_version", where);
    if (v != kSchemaVersion) {
      throw ContractViolation("unsupported schema_version " + std::to_string(v) + " (expected " +
                              std::to_string(kSchemaVersion) + ")");
    }
  }
  ExperimentConfig c;
  read(j, "name", c.name, where);
  if (j.contains("problem")) c.problem = problem_from_json(j.at("problem"));
  read(j, "method", c.method, where);
  read(j, "p", c.order, where);
  if (j.contains("H")) c.h = HMode::parse(get<std::string>(j, "H", where));
  if (j.contains("policy")) c.policy = AccuracyPolicy::parse(get<std::string>(j, "policy", where));
  if (j.contains("zeta") && !j.at("zeta").is_null()) c.zeta = AccuracyPolicy::parse(get<std::string>(j, "zeta", where));
  if (j.contains("inner_policy")) c.inner_policy = AccuracyPolicy::parse(get<std::string>(j, "inner_policy", where));
  if (j.contains("subsolver")) c.subsolver.kind = parse_subsolver(get<std::string>(j, "subsolver", where));
  if (j.contains("stop")) c.subsolver.stop = parse_stop(get<std::string>(j, "stop", where));
  read(j, "max_iterations", c.max_iterations, where);
  read(j, "inner_max_iterations", c.inner_max_iterations, where);
  read_optional(j, "target_gap", c.target_gap, where);
  read_optional(j, "gradient_tolerance", c.gradient_tolerance, where);
  read_optional(j, "wall_time_budget_s", c.wall_time_budget, where);
  read(j, "accuracy_floor", c.accuracy_floor, where);
  read(j, "seed", c.seed, where);
  read(j, "out", c.out, where);
  if (j.contains("x0")) {
    const json& x = j.at("x0");
    if (x.is_array()) {
      c.x0 = "values";
      c.x0_values = get<std::vector<double>>(j, "x0", where);
    } else {
      c.x0 = get<std::string>(j, "x0", where);
    }
  }
  read(j, "record_wall_time", c.record_wall_time, where);
  if (j.contains("fstar")) {
    const json& f = j.at("fstar");
    if (f.is_null()) {
      c.fstar.reset();
      c.fstar_auto = false;
    } else if (f.is_string()) {
      if (f.get<std::string>() != "auto") throw ContractViolation("fstar must be a number, \"auto\" or null");
      c.fstar_auto = true;
    } else {
      c.fstar = get<double>(j, "fstar", where);
    }
  }
  read(j, "cache_dir", c.cache_dir, where);
  validate(c);
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = c.name;
  j["problem"] = problem_to_json(c.problem);
  j["method"] = c.method;
  j["p"] = c.order;
  j["H"] = c.h.to_string();
  j["policy"] = c.policy.to_string();
  j["zeta"] = c.zeta ? json(c.zeta->to_string()) : json(nullptr);
  j["inner_policy"] = c.inner_policy.to_string();
  j["subsolver"] = c.subsolver.kind == SubsolverConfig::Kind::exact ? "exact" : "fgm";
  j["stop"] = c.subsolver.stop == StopRule::exact ? "exact" : "bound";
  j["max_iterations"] = c.max_iterations;
  j["inner_max_iterations"] = c.inner_max_iterations;
  j["target_gap"] = c.target_gap ? json(*c.target_gap) : json(nullptr);
  j["gradient_tolerance"] = c.gradient_tolerance ? json(*c.gradient_tolerance) : json(nullptr);
  j["wall_time_budget_s"] = c.wall_time_budget ? json(*c.wall_time_budget) : json(nullptr);
  j["accuracy_floor"] = c.accuracy_floor;
  j["seed"] = c.seed;
  j["out"] = c.out;
  if (c.x0 == "values") {
    j["x0"] = c.x0_values;
  } else {
    j["x0"] = c.x0;
  }
  j["record_wall_time"] = c.record_wall_time;
  if (c.fstar) {
    j["fstar"] = *c.fstar;
  } else {
    j["fstar"] = c.fstar_auto ? json("auto") : json(nullptr);
  }
  j["cache_dir"] = c.cache_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value) {
  ExperimentConfig c = config;
  if (key == "problem") {
    if (!value.empty() && value.front() == '{') {
      c.problem = problem_from_json(json::parse(value));
    } else {
      c.problem = ProblemSpec::defaults(value);
    }
  } else if (key == "method") {
    c.method = value;
  } else if (key == "p") {
    c.order = static_cast<int>(parse_integer(value, "--p"));
  } else if (key == "H") {
    c.h = HMode::parse(value);
  } else if (key == "policy") {
    c.policy = AccuracyPolicy::parse(value);
  } else if (key == "subsolver") {
    c.subsolver.kind = parse_subsolver(value);
  } else if (key == "stop") {
    c.subsolver.stop = parse_stop(value);
  } else if (key == "max-iters") {
    c.max_iterations = parse_integer(value, "--max-iters");
  } else if (key == "target-gap") {
    c.target_gap = parse_number(value, "--target-gap");
  } else if (key == "seed") {
    const long s = parse_integer(value, "--seed");
    if (s < 0) throw ContractViolation("seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "out") {
    c.out = value;
  } else {
    throw ContractViolation("unknown override '" + key + "'");
  }
  validate(c);
  config = std::move(c);
}

ProblemInstance build_problem(const ProblemSpec& spec, std::uint64_t seed) {
  const std::uint64_t s = spec.seed.value_or(seed);
  require(spec.n >= 1, "problem dimension n must be positive");
  ProblemInstance instance;
  if (spec.kind == "logsumexp") {
    require(spec.m >= spec.n, "log-sum-exp needs m >= n");
    require(spec.mu > 0.0, "log-sum-exp smoothing mu must be positive");
    instance = generate_shifted_logsumexp(spec.n, spec.m, spec.mu, s);
  } else if (spec.kind == "logistic") {
    require(spec.l2 >= 0.0, "l2 must be nonnegative");
    std::shared_ptr<const Dataset> data;
    if (spec.data.empty()) {
      require(spec.m >= 1, "logistic needs m >= 1 examples");
      data = std::make_shared<const Dataset>(generate_classification(spec.n, spec.m, s));
    } else {
      data = std::make_shared<const Dataset>(parse_libsvm(spec.data));
    }
    instance = logistic_instance(data, spec.l2, "logistic");
  } else if (spec.kind == "powered_chain") {
    instance = powered_chain_instance(spec.n, spec.q, spec.c);
  } else {
    throw ContractViolation("unknown problem kind '" + spec.kind + "'");
  }
  if (spec.composite) {
    const Vector center = Vector::Zero(instance.dimension());
    const CompositeSpec& cs = *spec.composite;
    const CompositePart part = cs.kind == "quadratic"
                                   ? CompositePart::quadratic(cs.mu, center, instance.norm())
                                   : CompositePart::power_norm(cs.mu, cs.q, center, instance.norm());
    instance.composite = Composite::single(part);
    // a composite centered at a known minimizer of f keeps it optimal
    if (instance.optimum && instance.optimum->x.isZero(0.0)) {
      instance.optimum->value += instance.composite.value(instance.optimum->x);
    } else {
      instance.optimum.reset();
    }
  }
  return instance;
}

std::string canonical_problem(const ProblemSpec& spec, std::uint64_t seed) {
  ProblemSpec resolved = spec;
  resolved.seed = spec.seed.value_or(seed);
  return problem_to_json(resolved).dump();
}

Vector resolve_x0(const ExperimentConfig& c, const ProblemInstance& problem) {
  const Eigen::Index dimension = problem.dimension();
  std::string spec = c.x0;
  if (spec == "auto") {
    if (c.problem.kind == "logsumexp") {
      spec = "random:1";
    } else if (c.problem.kind == "powered_chain") {
      spec = "ones";
    } else {
      spec = "zeros";
    }
  }
  if (spec == "zeros") return Vector::Zero(dimension);
  if (spec == "ones") return Vector::Ones(dimension);
  if (spec.rfind("constant:", 0) == 0) return Vector::Constant(dimension, parse_number(spec.substr(9), "x0"));
  if (spec.rfind("random:", 0) == 0) {
    const double radius = parse_number(spec.substr(7), "x0");
    if (radius < 0.0) throw ContractViolation("x0 radius must be nonnegative");
    Rng rng(c.seed ^ 0x5851F42D4C957F2DULL);
    Vector dir = rng.unit_vector(dimension);
    return radius / problem.norm().primal_norm(dir) * dir;
  }
  if (spec == "values") {
    if (static_cast<Eigen::Index>(c.x0_values.size()) != dimension) {
      throw ContractViolation("x0 has " + std::to_string(c.x0_values.size()) + " entries, problem dimension is " +
                              std::to_string(dimension));
    }
    return Eigen::Map<const Vector>(c.x0_values.data(), dimension);
  }
  throw ContractViolation("unknown x0 '" + c.x0 + "' (expected auto, zeros, ones, constant:V, random:R or an array)");
}

}  // namespace itm
