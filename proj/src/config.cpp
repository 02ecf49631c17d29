#include "rmgls/config.hpp"

#include "rmgls/errors.hpp"

#include <fstream>

namespace rmgls {

using nlohmann::json;

namespace {

const char* name_of(ProblemKind p) { return p == ProblemKind::Lyapunov ? "lyapunov" : "nonlinear"; }
const char* name_of(WolfeMode m) { return m == WolfeMode::Weak ? "weak" : "approximate"; }
const char* name_of(TangentRestriction r) { return r == TangentRestriction::Injection ? "injection" : "transpose"; }
const char* name_of(TangentTransferMode m) { return m == TangentTransferMode::Box ? "box" : "projected"; }

template <class E>
E parse_enum(const json& v, std::initializer_list<E> options, const char* key) {
  const std::string s = v.get<std::string>();
  for (E e : options)
    if (s == name_of(e)) return e;
  throw ConfigError(std::string("bad value '") + s + "' for " + key);
}

json line_search_json(const LineSearchConfig& l) {
  return {{"mode", name_of(l.mode)}, {"delta", l.delta}, {"sigma", l.sigma},
          {"epsilon", l.epsilon},    {"theta", l.theta}, {"gamma_shrink", l.gamma_shrink},
          {"expand", l.expand},      {"max_evals", l.max_evals}, {"max_expansions", l.max_expansions}};
}

void read_line_search(const json& j, LineSearchConfig& l) {
  l.mode = parse_enum(j.at("mode"), {WolfeMode::Weak, WolfeMode::Approximate}, "line_search.mode");
  j.at("delta").get_to(l.delta);
  j.at("sigma").get_to(l.sigma);
  j.at("epsilon").get_to(l.epsilon);
  j.at("theta").get_to(l.theta);
  j.at("gamma_shrink").get_to(l.gamma_shrink);
  j.at("expand").get_to(l.expand);
  j.at("max_evals").get_to(l.max_evals);
  j.at("max_expansions").get_to(l.max_expansions);
}

// Every key of j must exist in the reference with a compatible type.
void check_keys(const json& j, const json& ref, const std::string& where) {
  if (ref.is_object()) {
    if (!j.is_object()) throw ConfigError("expected an object at '" + where + "'");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string key = where.empty() ? it.key() : where + "." + it.key();
      if (!ref.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
      check_keys(it.value(), ref.at(it.key()), key);
    }
  } else if (ref.is_number() && !j.is_number()) {
    throw ConfigError("expected a number at '" + where + "'");
  } else if (ref.is_boolean() && !j.is_boolean()) {
    throw ConfigError("expected true/false at '" + where + "'");
  } else if (ref.is_string() && !j.is_string()) {
    throw ConfigError("expected a string at '" + where + "'");
  } else if (ref.is_array() && !j.is_array()) {
    throw ConfigError("expected an array at '" + where + "'");
  }
}

}  // namespace

std::vector<RankSegment> default_rank_schedule() { return {{5, 10}, {10, 10}, {15, 10}, {20, 10}, {25, 10}}; }

void RunConfig::validate() const {
  if (fine_level < 3 || fine_level > 14) throw ConfigError("fine_level must lie in 3..14");
  if (rank < 1) throw ConfigError("rank must be at least 1");
  if (problem == ProblemKind::Nonlinear && !(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  cycle.validate();
  ls_demo.line_search.validate();
}

void RunConfig::validate_solve() const {
  validate();
  if (cycle.coarsest_level >= fine_level) throw ConfigError("coarse_level must be below fine_level");
  const int coarse_n = (1 << cycle.coarsest_level) - 1;
  if (rank > coarse_n) throw ConfigError("rank exceeds the coarsest grid size");
  for (const RankSegment& s : schedule)
    if (s.rank > coarse_n) throw ConfigError("schedule rank exceeds the coarsest grid size");
}

json to_json(const RunConfig& c) {
  const CycleConfig& y = c.cycle;
  json sched = json::array();
  for (const RankSegment& s : c.schedule) sched.push_back({{"rank", s.rank}, {"iterations", s.iterations}});
  return {
      {"problem", name_of(c.problem)},
      {"fine_level", c.fine_level},
      {"coarse_level", y.coarsest_level},
      {"rank", c.rank},
      {"lambda", c.lambda},
      {"seed", y.seed},
      {"oracle", c.oracle},
      {"workers", c.workers},
      {"corrupt_factors", c.corrupt_factors},
      {"schedule", sched},
      {"cycle",
       {{"nu1", y.nu1},
        {"nu2", y.nu2},
        {"grad_tol", y.grad_tol},
        {"max_cycles", y.max_cycles},
        {"coarse_solver_tol", y.coarse_solver_tol},
        {"coarse_solver_max_iters", y.coarse_solver_max_iters},
        {"coarse_trust_region", y.coarse_trust_region},
        {"smoother_step_factor", y.smoother_step_factor},
        {"stationary_tol", y.stationary_tol},
        {"cycle_index", y.cycle_index},
        {"restriction", name_of(y.restriction)},
        {"tangent_transfer", name_of(y.tangent_transfer)},
        {"correction_sigma", y.correction_sigma},
        {"correction_secant_start", y.correction_secant_start},
        {"increase_slack", y.increase_slack},
        {"check_invariants", y.check_invariants}}},
      {"line_search", line_search_json(y.line_search)},
      {"ls_demo",
       {{"n", c.ls_demo.n},
        {"cond", c.ls_demo.cond},
        {"seed", c.ls_demo.seed},
        {"max_iters", c.ls_demo.max_iters},
        {"line_search", line_search_json(c.ls_demo.line_search)}}},
  };
}

RunConfig from_json(const json& in) {
  const RunConfig defaults;
  const json ref = to_json(defaults);
  check_keys(in, ref, "");
  json j = ref;
  j.merge_patch(in);
  // merge_patch replaces arrays wholesale, which is what the schedule wants.
  RunConfig c;
  try {
    c.problem = parse_enum(j.at("problem"), {ProblemKind::Lyapunov, ProblemKind::Nonlinear}, "problem");
    j.at("fine_level").get_to(c.fine_level);
    j.at("coarse_level").get_to(c.cycle.coarsest_level);
    j.at("rank").get_to(c.rank);
    j.at("lambda").get_to(c.lambda);
    j.at("seed").get_to(c.cycle.seed);
    j.at("oracle").get_to(c.oracle);
    j.at("workers").get_to(c.workers);
    j.at("corrupt_factors").get_to(c.corrupt_factors);
    for (const json& s : j.at("schedule")) c.schedule.push_back({s.at("rank").get<int>(), s.at("iterations").get<int>()});
    const json& y = j.at("cycle");
    CycleConfig& cy = c.cycle;
    y.at("nu1").get_to(cy.nu1);
    y.at("nu2").get_to(cy.nu2);
    y.at("grad_tol").get_to(cy.grad_tol);
    y.at("max_cycles").get_to(cy.max_cycles);
    y.at("coarse_solver_tol").get_to(cy.coarse_solver_tol);
    y.at("coarse_solver_max_iters").get_to(cy.coarse_solver_max_iters);
    y.at("coarse_trust_region").get_to(cy.coarse_trust_region);
    y.at("smoother_step_factor").get_to(cy.smoother_step_factor);
    y.at("stationary_tol").get_to(cy.stationary_tol);
    y.at("cycle_index").get_to(cy.cycle_index);
    cy.restriction = parse_enum(y.at("restriction"), {TangentRestriction::Injection, TangentRestriction::Transpose},
                                "cycle.restriction");
    cy.tangent_transfer = parse_enum(y.at("tangent_transfer"),
                                     {TangentTransferMode::Box, TangentTransferMode::Projected},
                                     "cycle.tangent_transfer");
    y.at("correction_sigma").get_to(cy.correction_sigma);
    y.at("correction_secant_start").get_to(cy.correction_secant_start);
    y.at("increase_slack").get_to(cy.increase_slack);
    y.at("check_invariants").get_to(cy.check_invariants);
    read_line_search(j.at("line_search"), cy.line_search);
    const json& d = j.at("ls_demo");
    d.at("n").get_to(c.ls_demo.n);
    d.at("cond").get_to(c.ls_demo.cond);
    d.at("seed").get_to(c.ls_demo.seed);
    d.at("max_iters").get_to(c.ls_demo.max_iters);
    read_line_search(d.at("line_search"), c.ls_demo.line_search);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + assignment);
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  std::string pointer;
  std::size_t start = 0;
  while (start <= key.size()) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("empty path component in " + key);
    pointer += "/" + part;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  j[json::json_pointer(pointer)] = value;
}

RunConfig load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
  json j = json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file " + *path);
    j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("config file is not a JSON object: " + *path);
  }
  for (const std::string& o : overrides) apply_override(j, o);
  return from_json(j);
}

}  // namespace rmgls
