#pragma once

#include "rmgls/factored.hpp"
#include "rmgls/linesearch.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace rmgls {

// Steepest descent on f(X) = tr(X^T A X)/2 - tr(X^T B) with B = A X*.
struct LsDemoOptions {
  Index n = 100;
  double cond = 10.0;
  std::uint64_t seed = 1;
  int max_iters = 400;
  LineSearchConfig line_search;
};

struct LsDemoRow {
  int iter = 0;
  double f_err = 0.0;     // f_k - f*, from the error identity
  double grad_rel = 0.0;  // |g_k| / |g_0|
  double err = 0.0;       // |X_k - X*| / |X*|
  long long fevals = 0;
  double step = 0.0;
};

struct LsDemoResult {
  std::vector<LsDemoRow> rows;
  double final_grad_rel = 0.0;
  double min_grad_rel = 0.0;
  std::optional<long long> evals_to_1e7;
};

LsDemoResult run_ls_demo(const LsDemoOptions& opts);

}  // namespace rmgls
