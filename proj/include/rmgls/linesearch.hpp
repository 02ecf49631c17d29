#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

namespace rmgls {

enum class WolfeMode { Weak, Approximate };

struct LineSearchConfig {
  double delta = 0.1;
  double sigma = 0.9;
  double epsilon = 1e-6;  // admissibility window, relative to |phi(0)|
  double theta = 0.5;
  double gamma_shrink = 0.66;
  double expand = 5.0;
  int max_evals = 60;
  int max_expansions = 60;
  WolfeMode mode = WolfeMode::Approximate;
  bool record_trace = false;

  void validate() const;
};

struct LinePoint {
  double t = 0.0;
  double phi = 0.0;
  double dphi = 0.0;
};

struct LineObjective {
  std::function<LinePoint(double)> eval;
  double phi0 = 0.0;
  double dphi0 = 0.0;
};

enum class SearchStatus { Converged, BudgetExhausted };

struct TraceEntry {
  LinePoint p;
  bool weak = false;
  bool approx = false;
};

struct LineSearchTrace {
  std::vector<TraceEntry> evals;
  std::vector<std::pair<LinePoint, LinePoint>> brackets;

  void write_csv(std::ostream& os) const;
};

struct LineSearchResult {
  double t = 0.0;
  LinePoint point;
  int evals = 0;
  SearchStatus status = SearchStatus::Converged;
  LineSearchTrace trace;
};

bool weak_wolfe_holds(const LineObjective& obj, double t, double phi_t, double dphi_t, const LineSearchConfig& cfg);
bool approx_wolfe_holds(const LineObjective& obj, double t, double phi_t, double dphi_t, const LineSearchConfig& cfg);
// The predicate of the active mode. Approximate mode also accepts weak Wolfe points.
bool accepted(const LineObjective& obj, const LinePoint& p, const LineSearchConfig& cfg);

LineSearchResult hz_search(const LineObjective& obj, double t0, const LineSearchConfig& cfg);

}  // namespace rmgls
