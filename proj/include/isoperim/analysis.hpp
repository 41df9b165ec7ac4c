#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "isoperim/shooting.hpp"

namespace isoperim {

class ThresholdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ThresholdDiagnostics {
  int grid_points = 0;
  double grid_min_r = 0.0;
  double grid_min_value = 0.0;
  int golden_iterations = 0;
  double golden_value = 0.0;
  int bisection_iterations = 0;
  double bracket_lo = 0.0;  // (log fh)' - M < 0 here
  double bracket_hi = 0.0;  // and > 0 here
};

struct ThresholdReport {
  double r0 = 0.0;
  double M = 0.0;
  double r_star = 0.0;
  double V0 = 0.0;       // 2 pi F(r*), weighted
  double V0_area = 0.0;  // 2 pi int_0^r* h, unweighted
  double minimizer_r = 0.0;
  ThresholdDiagnostics diagnostics;
};

struct ThresholdOptions {
  double r_cap = kDefaultRCap;
  int grid = 1024;
  double golden_tol = 1e-12;
};

/// (log fh)'(r) + pi / (2 (r - r0))
inline double threshold_objective(const Surface& s, double r0, double r) {
  return logderiv_fh(s, r) + std::numbers::pi / (2.0 * (r - r0));
}

inline double unweighted_ball_area(const Surface& s, double R) {
  const auto& h = s.h();
  return 2.0 * std::numbers::pi * integrate_adaptive([&](double x) { return x > 0.0 ? h.value(x) : 0.0; }, 0.0, R).value;
}

inline ThresholdReport thresholds(const Surface& s, const ThresholdOptions& opts = {}) {
  auto onset = logconvexity_onset(s, 1e-6, opts.r_cap);
  if (!onset) throw ThresholdError("no log-convexity onset");
  ThresholdReport rep;
  rep.r0 = *onset;
  const double r0 = rep.r0;
  auto obj = [&](double r) { return threshold_objective(s, r0, r); };

  // Grid log-spaced in x = r - r0 on (0, r_cap - r0].
  const double span = opts.r_cap - r0;
  if (!(span > 0.0)) throw ThresholdError("onset at or beyond r_cap");
  const double x_lo = 1e-9 * std::max(1.0, span), la = std::log(x_lo), lb = std::log(span);
  std::vector<double> rs(opts.grid), vs(opts.grid);
  int best = 0;
  for (int i = 0; i < opts.grid; ++i) {
    rs[i] = i == opts.grid - 1 ? opts.r_cap : r0 + std::exp(la + (lb - la) * i / (opts.grid - 1));
    vs[i] = obj(rs[i]);
    if (vs[i] < vs[best]) best = i;
  }
  rep.diagnostics.grid_points = opts.grid;
  rep.diagnostics.grid_min_r = rs[best];
  rep.diagnostics.grid_min_value = vs[best];
  if (best == 0 || best == opts.grid - 1) throw ThresholdError("threshold objective minimized at the grid boundary");

  // Golden section on the two cells around the grid minimum.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = rs[best - 1], b = rs[best + 1];
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = obj(c), fd = obj(d);
  int it = 0;
  while (b - a > opts.golden_tol && it < 500) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = obj(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = obj(d);
    }
    ++it;
  }
  const double r_min = 0.5 * (a + b);
  const double v_min = obj(r_min);
  rep.diagnostics.golden_iterations = it;
  rep.diagnostics.golden_value = v_min;
  if (v_min <= vs[best]) {
    rep.M = v_min;
    rep.minimizer_r = r_min;
  } else {
    rep.M = vs[best];
    rep.minimizer_r = rs[best];
  }

  // r*: (log fh)' - M is nondecreasing on (r0, r_cap].
  double lo = r0, hi = opts.r_cap;
  auto gap = [&](double r) { return logderiv_fh(s, r) - rep.M; };
  if (!(gap(lo) < 0.0) || !(gap(hi) > 0.0)) throw ThresholdError("r_star bracket does not change sign");
  rep.diagnostics.bracket_lo = lo;
  rep.diagnostics.bracket_hi = hi;
  int bi = 0;
  for (; bi < 200; ++bi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (gap(mid) < 0.0 ? lo : hi) = mid;
  }
  rep.diagnostics.bisection_iterations = bi;
  rep.r_star = 0.5 * (lo + hi);
  rep.V0 = 2.0 * std::numbers::pi * s.area_primitive(rep.r_star);
  rep.V0_area = unweighted_ball_area(s, rep.r_star);
  return rep;
}

enum class VolumeMeasure { weighted, area };

inline const char* to_string(VolumeMeasure m) { return m == VolumeMeasure::weighted ? "weighted" : "area"; }

struct TheoremVerdict {
  bool holds = false;
  std::string reason;
  std::optional<ThresholdReport> report;
};

/**
 * Whether the centered circle is forced at volume V: thresholds exist and V
 * exceeds V0 in the chosen measure. The conclusion is conditional on the
 * farthest boundary component of the isoperimetric region enclosing the origin.
 */
inline TheoremVerdict theorem_applies(const Surface& s, double V, VolumeMeasure measure = VolumeMeasure::weighted) {
  TheoremVerdict out;
  try {
    out.report = thresholds(s);
  } catch (const std::exception& e) {
    out.reason = std::string("thresholds unavailable: ") + e.what();
    return out;
  }
  const double v0 = measure == VolumeMeasure::weighted ? out.report->V0 : out.report->V0_area;
  out.holds = V > v0;
  out.reason = std::string(out.holds ? "V > V0" : "V <= V0") + " (" + to_string(measure) + " V0 = " + format_g17(v0) +
               "); applies to isoperimetric curves whose farthest component encloses the origin";
  return out;
}

// ---------------------------------------------------------------------------

enum class Verdict { holds, fails, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct SliceRow {
  double r = 0.0;
  double P_out = 0.0;
  double S = 0.0;
  double slack() const { return P_out - S; }
};

struct SliceReport {
  bool hypotheses_ok = false;
  std::string detail;
  Verdict verdict = Verdict::inconclusive;
  std::vector<SliceRow> rows;
};

namespace detail {

// Points t where r(t) crosses `level` on the half curve, plus the integral of
// f(r(t)) over {t : r(t) > level}.
struct LevelScan {
  double P_out_half = 0.0;
  std::vector<double> crossing_theta;
};

inline LevelScan scan_level(const Trajectory& tr, double level, int sub = 8) {
  static constexpr std::array<double, 5> gx{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                            0.9061798459386640};
  static constexpr std::array<double, 5> gw{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                            0.4786286704993665, 0.2369268850561891};
  LevelScan out;
  const auto& f = tr.surface().f();
  const double t_end = tr.t_end();
  auto r_at = [&](const Trajectory::Step& st, double t) { return st.eval(t)[0]; };
  auto gl = [&](const Trajectory::Step& st, double a, double b) {
    double acc = 0.0;
    for (int k = 0; k < 5; ++k) acc += gw[k] * f.value(r_at(st, 0.5 * (a + b) + 0.5 * (b - a) * gx[k]));
    return 0.5 * (b - a) * acc;
  };
  for (const auto& st : tr.steps()) {
    const double t1 = std::min(st.t1(), t_end);
    if (!(t1 > st.t0)) continue;
    for (int j = 0; j < sub; ++j) {
      const double a = st.t0 + (t1 - st.t0) * j / sub;
      const double b = j == sub - 1 ? t1 : st.t0 + (t1 - st.t0) * (j + 1) / sub;
      const double ga = r_at(st, a) - level, gb = r_at(st, b) - level;
      if ((ga > 0.0) == (gb > 0.0)) {
        if (ga > 0.0) out.P_out_half += gl(st, a, b);
        continue;
      }
      double lo = a, hi = b, glo = ga;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double gm = r_at(st, mid) - level;
        if ((gm > 0.0) == (glo > 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      const double tc = 0.5 * (lo + hi);
      out.crossing_theta.push_back(st.eval(tc)[1]);
      out.P_out_half += ga > 0.0 ? gl(st, a, tc) : gl(st, tc, b);
    }
  }
  return out;
}

inline bool nondecreasing_on(const RadialFunction& fn, double r_lo, double r_hi, int grid = 512) {
  const double la = std::log(r_lo), lb = std::log(r_hi);
  for (int i = 0; i < grid; ++i)
    if (fn.dlog(std::exp(la + (lb - la) * i / (grid - 1))) < -1e-12) return false;
  return true;
}

}  // namespace detail

/**
 * Weighted boundary length outside B(r) against the weighted length of the
 * slice of the region by the circle of radius r, for each r in r_grid.
 */
inline SliceReport slice_inequality(const Candidate& c, const std::vector<double>& r_grid, double tol = 1e-8) {
  SliceReport rep;
  const Surface& s = c.half->surface();
  const double r_top = std::max(c.r_start, 1e-6 * 2.0);
  bool ok = detail::nondecreasing_on(s.f(), 1e-6, r_top);
  if (ok) {
    const double la = std::log(1e-6), lb = std::log(r_top);
    for (int i = 0; i < 512 && ok; ++i)
      if (logderiv_fh(s, std::exp(la + (lb - la) * i / 511)) < -1e-12) ok = false;
  }
  rep.hypotheses_ok = ok;
  if (!ok) {
    rep.detail = "f or fh not nondecreasing on (0, r_start]";
    rep.verdict = Verdict::inconclusive;
    return rep;
  }
  bool all = true;
  for (double r : r_grid) {
    if (!(r > 0.0)) throw std::invalid_argument("slice_inequality: radii must be positive");
    auto scan = detail::scan_level(*c.half, r);
    auto th = scan.crossing_theta;
    std::sort(th.begin(), th.end());
    // Inside at theta = 0 iff r lies on the segment between r_end and r_start
    // (or below r_start when the origin is enclosed).
    bool inside = r < c.r_start && (c.encloses_origin || r > c.r_end);
    double prev = 0.0, dtheta = 0.0;
    // A non-enclosing loop returns to theta = 0, so its slice ends at the last crossing.
    const double theta_end = c.encloses_origin ? c.half->back().theta : (th.empty() ? 0.0 : th.back());
    for (double x : th) {
      x = std::clamp(x, 0.0, theta_end);
      if (inside) dtheta += x - prev;
      inside = !inside;
      prev = x;
    }
    if (inside) dtheta += theta_end - prev;
    SliceRow row{r, 2.0 * scan.P_out_half, 2.0 * dtheta * s.fh(r)};
    if (row.slack() < -tol) all = false;
    rep.rows.push_back(row);
  }
  rep.verdict = all ? Verdict::holds : Verdict::fails;
  return rep;
}

// ---------------------------------------------------------------------------
// Hypothesis audits

struct HypothesisVerdict {
  std::string name;
  Verdict verdict = Verdict::inconclusive;
  double witness_r = 0.0;
  std::string detail;
};

struct AuditReport {
  std::string theorem;
  std::vector<HypothesisVerdict> hypotheses;
  Verdict overall = Verdict::inconclusive;
};

struct AuditOptions {
  double r_lo = kOriginGuard;
  double r_cap = kDefaultRCap;
  int grid = 4096;
};

namespace detail {

inline std::vector<double> log_grid(double a, double b, int n) {
  std::vector<double> g(n);
  const double la = std::log(a), lb = std::log(b);
  for (int i = 0; i < n; ++i) g[i] = i == n - 1 ? b : std::exp(la + (lb - la) * i / (n - 1));
  return g;
}

inline Verdict combine(const std::vector<HypothesisVerdict>& hs) {
  bool any_fail = false, all_hold = true;
  for (const auto& h : hs) {
    any_fail = any_fail || h.verdict == Verdict::fails;
    all_hold = all_hold && h.verdict == Verdict::holds;
  }
  return all_hold ? Verdict::holds : any_fail ? Verdict::fails : Verdict::inconclusive;
}

// Verdict for "q(r) >= -1e-12 on the grid", witness at the worst point.
template <class Q>
HypothesisVerdict monotone_check(std::string name, const std::vector<double>& grid, Q&& q, const char* what) {
  HypothesisVerdict v{std::move(name), Verdict::holds, grid.front(), ""};
  double worst = std::numeric_limits<double>::infinity();
  for (double r : grid) {
    const double x = q(r);
    if (x < worst) {
      worst = x;
      v.witness_r = r;
    }
  }
  v.verdict = worst >= -1e-12 ? Verdict::holds : Verdict::fails;
  v.detail = std::string("min ") + what + " = " + format_g17(worst);
  return v;
}

}  // namespace detail

inline AuditReport audit_existence(const Surface& s, const AuditOptions& o = {}) {
  AuditReport rep;
  rep.theorem = "existence";
  const auto grid = detail::log_grid(o.r_lo, o.r_cap, o.grid);
  std::vector<double> tail;
  for (double r : grid)
    if (r >= o.r_cap / 10.0) tail.push_back(r);

  rep.hypotheses.push_back(detail::monotone_check("h nondecreasing", grid, [&](double r) { return s.h().dlog(r); }, "h'/h"));

  {
    HypothesisVerdict v{"g diverges", Verdict::inconclusive, o.r_cap, ""};
    const double grow = s.g().log_value(o.r_cap) - s.g().log_value(1.0);
    double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
    for (double r : tail) {
      dmin = std::min(dmin, s.g().dlog(r));
      dmax = std::max(dmax, s.g().dlog(r));
    }
    if (grow > std::log(10.0) && dmin > 0.0)
      v.verdict = Verdict::holds;
    else if (dmax <= 0.0)
      v.verdict = Verdict::fails;
    v.detail = "log g(r_cap) - log g(1) = " + format_g17(grow) + "; g'/g on last decade in [" + format_g17(dmin) + ", " +
               format_g17(dmax) + "]";
    rep.hypotheses.push_back(v);
  }

  {
    HypothesisVerdict v{"f <= c g", Verdict::holds, grid.front(), ""};
    double qmax = -std::numeric_limits<double>::infinity();
    for (double r : grid) {
      const double q = s.f().log_value(r) - s.g().log_value(r);
      if (q > qmax) {
        qmax = q;
        v.witness_r = r;
      }
    }
    double slope_max = -std::numeric_limits<double>::infinity();
    for (double r : tail) slope_max = std::max(slope_max, s.f().dlog(r) - s.g().dlog(r));
    if (slope_max > 1e-12) v.verdict = Verdict::inconclusive;
    v.detail = "c_est = " + format_g17(std::exp(qmax)) + "; max (log f/g)' on last decade = " + format_g17(slope_max);
    rep.hypotheses.push_back(v);
  }
  rep.overall = detail::combine(rep.hypotheses);
  return rep;
}

inline AuditReport audit_boundedness(const Surface& s, const AuditOptions& o = {}) {
  AuditReport rep;
  rep.theorem = "boundedness";
  const int n = s.n();
  const auto grid = detail::log_grid(o.r_lo, o.r_cap, o.grid);
  rep.hypotheses.push_back(detail::monotone_check(
      "gh nondecreasing", grid, [&](double r) { return s.g().dlog(r) + s.h().dlog(r); }, "(log gh)'"));
  rep.hypotheses.push_back(detail::monotone_check(
      "g^(n/(n-1))/f nondecreasing", grid,
      [&](double r) { return double(n) / (n - 1) * s.g().dlog(r) - s.f().dlog(r); }, "(log g^(n/(n-1))/f)'"));

  {
    // Local power exponent of f^(1/n) on the last decade: f^(1/n) ~ r^e.
    HypothesisVerdict v{"int f^(1/n) diverges", Verdict::inconclusive, o.r_cap, ""};
    double emin = std::numeric_limits<double>::infinity(), emax = -emin;
    for (double r : grid) {
      if (r < o.r_cap / 10.0) continue;
      const double e = r * s.f().dlog(r) / n;
      if (e < emin) {
        emin = e;
        v.witness_r = r;
      }
      emax = std::max(emax, e);
    }
    const double r_a = o.r_cap / 10.0;
    const double c_fit = r_a * std::exp(s.f().log_value(r_a) / n);
    if (emin >= -1.0 && c_fit > 0.0)
      v.verdict = Verdict::holds;
    else if (emax < -1.01)
      v.verdict = Verdict::fails;
    v.detail = "local exponent of f^(1/n) on last decade in [" + format_g17(emin) + ", " + format_g17(emax) +
               "]; c_fit = " + format_g17(c_fit);
    rep.hypotheses.push_back(v);
  }
  rep.overall = detail::combine(rep.hypotheses);
  return rep;
}

// ---------------------------------------------------------------------------
// JSON export

namespace detail {
inline std::string json_string(const std::string& s) { return json(s).dump(); }
}  // namespace detail

inline void write_thresholds_json(std::ostream& os, const ThresholdReport& r) {
  const auto& d = r.diagnostics;
  os << "{\n  \"r0\": " << format_g17(r.r0) << ",\n  \"M\": " << format_g17(r.M) << ",\n  \"r_star\": "
     << format_g17(r.r_star) << ",\n  \"V0\": " << format_g17(r.V0) << ",\n  \"V0_area\": " << format_g17(r.V0_area)
     << ",\n  \"minimizer_r\": " << format_g17(r.minimizer_r) << ",\n  \"diagnostics\": {\"grid_points\": "
     << d.grid_points << ", \"grid_min_r\": " << format_g17(d.grid_min_r)
     << ", \"grid_min_value\": " << format_g17(d.grid_min_value) << ", \"golden_iterations\": " << d.golden_iterations
     << ", \"golden_value\": " << format_g17(d.golden_value) << ", \"bisection_iterations\": " << d.bisection_iterations
     << ", \"bracket_lo\": " << format_g17(d.bracket_lo) << ", \"bracket_hi\": " << format_g17(d.bracket_hi)
     << "}\n}\n";
}

inline void write_audit_json(std::ostream& os, const AuditReport& a, int indent = 0) {
  const std::string pad(indent, ' ');
  os << "{\n" << pad << "  \"theorem\": " << detail::json_string(a.theorem) << ",\n" << pad << "  \"hypotheses\": [";
  for (std::size_t i = 0; i < a.hypotheses.size(); ++i) {
    const auto& h = a.hypotheses[i];
    os << (i ? ",\n" : "\n") << pad << "    {\"name\": " << detail::json_string(h.name)
       << ", \"verdict\": " << detail::json_string(to_string(h.verdict)) << ", \"witness_r\": " << format_g17(h.witness_r)
       << ", \"detail\": " << detail::json_string(h.detail) << "}";
  }
  os << "\n" << pad << "  ],\n" << pad << "  \"overall\": " << detail::json_string(to_string(a.overall)) << "\n" << pad << "}";
}

}  // namespace isoperim
