#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rmgls {

struct PropertyResult {
  std::string name;
  double value = 0.0;  // measured error
  double tol = 0.0;
  bool pass = false;
  std::string detail;
};

struct PropertySuiteOptions {
  int level = 5;  // n = 31
  std::uint64_t seed = 1;
  // Perturbs the orthonormal factors of the test point; the suite must then fail.
  bool corrupt_factors = false;
};

// Dense-vs-factored equivalence, gradient and derivative checks, retraction
// round trips, line-search bracket invariants and transfer coherence.
std::vector<PropertyResult> run_property_suite(const PropertySuiteOptions& opts);

}  // namespace rmgls
