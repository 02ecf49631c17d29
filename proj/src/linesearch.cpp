#include "rmgls/linesearch.hpp"

#include "rmgls/errors.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace rmgls {

void LineSearchConfig::validate() const {
  if (!(delta > 0.0 && delta < 0.5)) throw ConfigError("line search: need 0 < delta < 0.5");
  if (!(sigma >= delta && sigma < 1.0)) throw ConfigError("line search: need delta <= sigma < 1");
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("line search: need 0 < theta < 1");
  if (!(gamma_shrink > 0.0 && gamma_shrink < 1.0)) throw ConfigError("line search: need 0 < gamma < 1");
  if (!(epsilon >= 0.0)) throw ConfigError("line search: epsilon must be nonnegative");
  if (!(expand > 1.0)) throw ConfigError("line search: expansion factor must exceed 1");
  if (max_evals < 1 || max_expansions < 1) throw ConfigError("line search: budgets must be positive");
}

void LineSearchTrace::write_csv(std::ostream& os) const {
  os << "t,phi,dphi,weak_wolfe,approx_wolfe\n";
  os.precision(17);
  for (const auto& e : evals) os << e.p.t << ',' << e.p.phi << ',' << e.p.dphi << ',' << e.weak << ',' << e.approx << '\n';
}

bool weak_wolfe_holds(const LineObjective& obj, double t, double phi_t, double dphi_t, const LineSearchConfig& cfg) {
  return (phi_t - obj.phi0) / t <= cfg.delta * obj.dphi0 && dphi_t >= cfg.sigma * obj.dphi0;
}

bool approx_wolfe_holds(const LineObjective& obj, double, double phi_t, double dphi_t, const LineSearchConfig& cfg) {
  return (2.0 * cfg.delta - 1.0) * obj.dphi0 >= dphi_t && dphi_t >= cfg.sigma * obj.dphi0 &&
         phi_t <= obj.phi0 + cfg.epsilon * std::abs(obj.phi0);
}

bool accepted(const LineObjective& obj, const LinePoint& p, const LineSearchConfig& cfg) {
  if (!(p.t > 0.0) || !std::isfinite(p.phi) || !std::isfinite(p.dphi)) return false;
  const bool weak = weak_wolfe_holds(obj, p.t, p.phi, p.dphi, cfg);
  if (cfg.mode == WolfeMode::Weak) return weak;
  return weak || approx_wolfe_holds(obj, p.t, p.phi, p.dphi, cfg);
}

namespace {

struct Found {
  LinePoint p;
};
struct OutOfBudget {};

class Search {
 public:
  Search(const LineObjective& obj, const LineSearchConfig& cfg)
      : obj_(obj), cfg_(cfg), eps_(cfg.epsilon * std::abs(obj.phi0)), best_{0.0, obj.phi0, obj.dphi0} {
    res_.point = best_;
  }

  LineSearchResult run(double t0) {
    try {
      if (cfg_.mode == WolfeMode::Weak)
        weak(t0);
      else
        approximate(t0);
    } catch (const Found& f) {
      res_.t = f.p.t;
      res_.point = f.p;
      res_.status = SearchStatus::Converged;
      return std::move(res_);
    } catch (const OutOfBudget&) {
    }
    res_.status = SearchStatus::BudgetExhausted;
    res_.t = best_.t;
    res_.point = best_;
    return std::move(res_);
  }

 private:
  // Evaluates phi at t, shrinking toward `lo` when t leaves the retraction domain.
  LinePoint eval(double t, double lo = 0.0) {
    for (int shrink = 0;; ++shrink) {
      if (res_.evals >= cfg_.max_evals) throw OutOfBudget{};
      ++res_.evals;
      LinePoint p;
      bool ok = true;
      try {
        p = obj_.eval(t);
        ok = std::isfinite(p.phi) && std::isfinite(p.dphi);
      } catch (const RetractionDomainError&) {
        ok = false;
      }
      if (ok) {
        p.t = t;
        record(p);
        if (accepted(obj_, p, cfg_)) throw Found{p};
        return p;
      }
      if (shrink >= 30) throw OutOfBudget{};
      t = lo + 0.5 * (t - lo);
    }
  }

  // Running out of evaluations before any upper bound was seen means the step is unbounded.
  LinePoint expanding_eval(double t, double lo) {
    try {
      return eval(t, lo);
    } catch (const OutOfBudget&) {
      throw BracketNotFoundError("evaluation budget spent while the slope stayed negative");
    }
  }

  void record(const LinePoint& p) {
    if (p.phi < best_.phi) best_ = p;
    if (cfg_.record_trace)
      res_.trace.evals.push_back(
          {p, weak_wolfe_holds(obj_, p.t, p.phi, p.dphi, cfg_), approx_wolfe_holds(obj_, p.t, p.phi, p.dphi, cfg_)});
  }

  void note_bracket(const LinePoint& a, const LinePoint& b) {
    if (cfg_.record_trace) res_.trace.brackets.emplace_back(a, b);
  }

  bool admissible(const LinePoint& p) const { return p.phi <= obj_.phi0 + eps_; }

  /* ---- weak Wolfe: bisection and doubling ---- */

  void weak(double t) {
    double a = 0.0, b = std::numeric_limits<double>::infinity();
    int expansions = 0;
    for (;;) {
      const LinePoint p = std::isinf(b) ? expanding_eval(t, a) : eval(t, a);
      t = p.t;
      if ((p.phi - obj_.phi0) / t > cfg_.delta * obj_.dphi0)
        b = t;
      else
        a = t;
      if (std::isinf(b)) {
        if (++expansions > cfg_.max_expansions) throw BracketNotFoundError("no upper bound for the step");
        t *= 2.0;
      } else {
        t = 0.5 * (a + b);
      }
    }
  }

  /* ---- approximate Wolfe: bracket, secant^2, bisection ---- */

  void approximate(double c) {
    LinePoint a{0.0, obj_.phi0, obj_.dphi0};
    LinePoint b;
    bracket(c, a, b);
    for (;;) {
      note_bracket(a, b);
      const double width = b.t - a.t;
      LinePoint A = a, B = b;
      secant2(A, B);
      if (B.t - A.t > cfg_.gamma_shrink * width) {
        const LinePoint m = eval(0.5 * (A.t + B.t), A.t);
        update(A, B, m);
      }
      if (!(B.t - A.t < width)) {
        // No progress possible in floating point.
        throw OutOfBudget{};
      }
      a = A;
      b = B;
    }
  }

  void bracket(double c, LinePoint& a, LinePoint& b) {
    LinePoint last_good = a;
    for (int j = 0;; ++j) {
      const LinePoint p = expanding_eval(c, last_good.t);
      if (p.dphi >= 0.0) {
        a = last_good;
        b = p;
        return;
      }
      if (!admissible(p)) {
        LinePoint lo{0.0, obj_.phi0, obj_.dphi0};
        LinePoint hi = p;
        bisect(lo, hi);
        a = lo;
        b = hi;
        return;
      }
      last_good = p;
      if (j >= cfg_.max_expansions) throw BracketNotFoundError("slope stays negative while expanding");
      c = cfg_.expand * p.t;
    }
  }

  // Keeps [a, b] with dphi(a) < 0, phi(a) admissible and dphi(b) >= 0.
  void bisect(LinePoint& a, LinePoint& b) {
    for (;;) {
      const double d = (1.0 - cfg_.theta) * a.t + cfg_.theta * b.t;
      if (!(d > a.t && d < b.t)) throw OutOfBudget{};
      const LinePoint p = eval(d, a.t);
      if (p.dphi >= 0.0) {
        b = p;
        return;
      }
      if (admissible(p))
        a = p;
      else
        b = p;
    }
  }

  void update(LinePoint& a, LinePoint& b, const LinePoint& c) {
    if (!(c.t > a.t && c.t < b.t)) return;
    if (c.dphi >= 0.0) {
      b = c;
    } else if (admissible(c)) {
      a = c;
    } else {
      LinePoint hi = c;
      bisect(a, hi);
      b = hi;
    }
  }

  static double secant(const LinePoint& a, const LinePoint& b) {
    const double den = b.dphi - a.dphi;
    if (!(den != 0.0)) return 0.5 * (a.t + b.t);
    return (a.t * b.dphi - b.t * a.dphi) / den;
  }

  void secant2(LinePoint& a, LinePoint& b) {
    const LinePoint a0 = a, b0 = b;
    const double c = secant(a, b);
    if (!(c > a.t && c < b.t)) return;
    const LinePoint pc = eval(c, a.t);
    update(a, b, pc);
    double cbar = std::numeric_limits<double>::quiet_NaN();
    if (pc.t == b.t) cbar = secant(b0, b);
    if (pc.t == a.t) cbar = secant(a0, a);
    if ((pc.t == a.t || pc.t == b.t) && cbar > a.t && cbar < b.t) update(a, b, eval(cbar, a.t));
  }

  const LineObjective& obj_;
  const LineSearchConfig& cfg_;
  double eps_;
  LinePoint best_;
  LineSearchResult res_;
};

}  // namespace

LineSearchResult hz_search(const LineObjective& obj, double t0, const LineSearchConfig& cfg) {
  if (!(obj.dphi0 < 0.0)) throw PreconditionError("line search needs a descent direction");
  if (!(t0 > 0.0) || !std::isfinite(t0)) throw PreconditionError("initial step must be positive");
  return Search(obj, cfg).run(t0);
}

}  // namespace rmgls
