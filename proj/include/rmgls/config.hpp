#pragma once

#include "rmgls/cycle.hpp"
#include "rmgls/ls_demo.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace rmgls {

enum class ProblemKind { Lyapunov, Nonlinear };

struct RunConfig {
  ProblemKind problem = ProblemKind::Lyapunov;
  int fine_level = 8;
  int rank = 5;
  double lambda = 10.0;
  CycleConfig cycle;  // coarsest level and seed live here
  std::vector<RankSegment> schedule;  // used by adapt; empty means the default 5..25 ladder
  bool oracle = true;                 // dense reference for err-W, when the level allows it
  LsDemoOptions ls_demo;
  bool corrupt_factors = false;  // oracle-check negative test
  int workers = 1;               // sweep cells run in parallel

  void validate() const;
  // Adds the level and rank relations a multigrid solve needs.
  void validate_solve() const;
};

nlohmann::json to_json(const RunConfig& c);
// Unknown keys and ill-typed values are ConfigErrors.
RunConfig from_json(const nlohmann::json& j);

// "a.b.c=value"; value is parsed as JSON, falling back to a plain string.
void apply_override(nlohmann::json& j, const std::string& assignment);

RunConfig load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides);

std::vector<RankSegment> default_rank_schedule();

}  // namespace rmgls
