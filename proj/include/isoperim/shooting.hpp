#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "isoperim/dynamics.hpp"

namespace isoperim {

struct ShootOptions {
  IntegrateOptions integ{};
  // Stop once alpha leaves [pi/2 - slack, 3pi/2 + slack]: beyond it r' > 0
  // somewhere on the upper arc and the curve is not a symmetrized boundary.
  bool admissible_window = false;
  double window_slack = 1e-6;
};

struct ShotResult {
  std::shared_ptr<const Trajectory> trajectory;
  std::optional<double> closure_defect;  // cos(alpha) at the first axis crossing
  std::optional<double> crossing_theta;
  std::optional<bool> encloses_origin;  // crossing at theta == pi (mod 2pi)
  Termination termination = Termination::step_limit;

  bool crossed() const { return closure_defect.has_value(); }
};

/// Integrates from (r_start, theta = 0, alpha = pi/2) to the first axis crossing or guard.
inline ShotResult shoot(const Surface& s, double r_start, double kappa_f, const ShootOptions& opts = {}) {
  if (!(r_start > opts.integ.guard)) throw std::domain_error("shoot: r_start must exceed the origin guard");
  std::vector<EventSpec> events{EventSpec::axis(true)};
  if (opts.admissible_window) {
    events.push_back(EventSpec::alpha(kHalfPi - opts.window_slack, true));
    events.push_back(EventSpec::alpha(3.0 * kHalfPi + opts.window_slack, true));
  }
  ShotResult out;
  out.trajectory = std::make_shared<const Trajectory>(integrate(s, kappa_f, axis_start(r_start), events, opts.integ));
  out.termination = out.trajectory->termination();
  if (out.termination == Termination::axis_crossing) {
    const auto& end = out.trajectory->back();
    out.closure_defect = cos_alpha(end.alpha);
    out.crossing_theta = end.theta;
    out.encloses_origin = std::cos(end.theta) < 0.0;
  }
  return out;
}

/// A closed curve symmetric about the x-axis, assembled from its upper half.
struct Candidate {
  double kappa_f = 0.0;
  double r_start = 0.0;
  double r_end = 0.0;
  bool encloses_origin = false;
  double P = 0.0;
  double V = 0.0;
  bool is_circle = false;
  double alpha_end = 0.0;
  std::shared_ptr<const Trajectory> half;

  double alpha_prime0() const { return half->alpha_prime_at(half->samples().front()); }
};

inline Candidate candidate_from_shot(const Surface& s, double r_start, double kappa_f, const ShotResult& shot,
                                     double circle_tol = 1e-10) {
  if (!shot.crossed()) throw std::logic_error("candidate_from_shot: shot has no axis crossing");
  const auto& end = shot.trajectory->back();
  Candidate c;
  c.kappa_f = kappa_f;
  c.r_start = r_start;
  c.r_end = end.r;
  c.encloses_origin = *shot.encloses_origin;
  c.P = 2.0 * end.P_w;
  c.V = 2.0 * std::fabs(end.A_w);
  c.is_circle = std::fabs(kappa_f - logderiv_fh(s, r_start)) <= circle_tol;
  c.alpha_end = end.alpha;
  c.half = shot.trajectory;
  return c;
}

struct FindOptions {
  ShootOptions shot = [] {
    ShootOptions o;
    o.integ.rtol = 1e-12;
    o.integ.atol = 1e-12;
    o.admissible_window = true;
    return o;
  }();
  double half_width = 5.0;  // kappa_f bracket half-width around (log fh)'(r_start)
  int panels = 64;
  double defect_tol = 1e-10;
  double circle_tol = 1e-10;
  int max_bisections = 200;
};

struct ClosedSearch {
  double kappa_lo = 0.0;
  double kappa_hi = 0.0;
  int panels = 0;
  int valid_nodes = 0;
  std::vector<Candidate> roots;  // ordered by distance from the bracket center
};

namespace detail {

struct ShotValue {
  double value;
  bool is_crossing;  // false for the non-enclosing continuation value
  ShotResult shot;
};

// Signed closure function of kappa_f for one enclosure class.
inline std::optional<ShotValue> closure_value(const Surface& s, double r_start, double kappa, bool enclose,
                                              const ShootOptions& opts) {
  ShotResult shot = shoot(s, r_start, kappa, opts);
  if (shot.crossed()) {
    if (*shot.encloses_origin == enclose) return ShotValue{*shot.closure_defect, true, std::move(shot)};
    return std::nullopt;
  }
  // A loop that reaches alpha = 3pi/2 before returning to the axis: continue
  // the closure function by sin(theta) at the window exit, which tends to 0
  // as the exit approaches the axis.
  if (!enclose && shot.termination == Termination::alpha_level) {
    const auto& end = shot.trajectory->back();
    if (end.alpha > std::numbers::pi && std::sin(end.theta) > 0.0)
      return ShotValue{std::sin(end.theta), false, std::move(shot)};
  }
  return std::nullopt;
}

}  // namespace detail

/**
 * Scans kappa_f over [L - half_width, L + half_width], L = (log fh)'(r_start),
 * in `panels` panels and collects every closed shot of the requested class:
 * nodes whose defect already meets the tolerance, and bisection roots of
 * panels whose end values change sign.
 */
inline ClosedSearch search_closed(const Surface& s, double r_start, bool enclose, const FindOptions& opts = {}) {
  if (!(r_start > opts.shot.integ.guard)) throw std::domain_error("find_closed: r_start must exceed the origin guard");
  const double center = logderiv_fh(s, r_start);
  const int half = opts.panels / 2;
  const double dk = opts.half_width / half;
  ClosedSearch out;
  out.panels = 2 * half;
  out.kappa_lo = center - half * dk;
  out.kappa_hi = center + half * dk;

  std::vector<std::optional<detail::ShotValue>> nodes;
  std::vector<double> kappas;
  for (int j = -half; j <= half; ++j) {
    const double k = center + j * dk;  // j == 0 is exactly the circle value
    kappas.push_back(k);
    nodes.push_back(detail::closure_value(s, r_start, k, enclose, opts.shot));
    if (nodes.back()) ++out.valid_nodes;
  }

  auto is_root = [&](const detail::ShotValue& v) { return v.is_crossing && std::fabs(v.value) <= opts.defect_tol; };
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] && is_root(*nodes[i]))
      out.roots.push_back(candidate_from_shot(s, r_start, kappas[i], nodes[i]->shot, opts.circle_tol));

  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const auto& a = nodes[i];
    const auto& b = nodes[i + 1];
    if (!a || !b || is_root(*a) || is_root(*b)) continue;
    if ((a->value < 0.0) == (b->value < 0.0)) continue;
    double lo = kappas[i], hi = kappas[i + 1], vlo = a->value;
    for (int it = 0; it < opts.max_bisections; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      auto vm = detail::closure_value(s, r_start, mid, enclose, opts.shot);
      if (!vm) break;
      if (is_root(*vm)) {
        out.roots.push_back(candidate_from_shot(s, r_start, mid, vm->shot, opts.circle_tol));
        break;
      }
      if ((vm->value < 0.0) == (vlo < 0.0)) {
        lo = mid;
        vlo = vm->value;
      } else {
        hi = mid;
      }
    }
  }
  std::stable_sort(out.roots.begin(), out.roots.end(), [&](const Candidate& x, const Candidate& y) {
    return std::fabs(x.kappa_f - center) < std::fabs(y.kappa_f - center);
  });
  return out;
}

/// Closed shot of the requested class nearest the circle value of kappa_f, if any.
inline std::optional<Candidate> find_closed(const Surface& s, double r_start, bool enclose, const FindOptions& opts = {}) {
  auto res = search_closed(s, r_start, enclose, opts);
  if (res.roots.empty()) return std::nullopt;
  return res.roots.front();
}

// ---------------------------------------------------------------------------

/// R with 2 pi F(R) = V; throws if V exceeds the capped ball volume.
inline double centered_circle_radius(const Surface& s, double volume, double r_cap = kDefaultRCap) {
  if (!(volume > 0.0)) throw std::invalid_argument("centered_circle_radius: volume must be positive");
  const double two_pi = 2.0 * std::numbers::pi;
  if (volume > two_pi * s.area_primitive(r_cap))
    throw std::domain_error("volume exceeds the weighted volume of the ball of radius r_cap");
  double lo = 0.0, hi = r_cap;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (two_pi * s.area_primitive(mid) < volume ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline Candidate circle_candidate(const Surface& s, double radius, const ShootOptions& opts = FindOptions{}.shot) {
  const double kappa = logderiv_fh(s, radius);
  auto shot = shoot(s, radius, kappa, opts);
  if (!shot.crossed()) throw std::runtime_error("circle_candidate: centered circle did not return to the axis");
  return candidate_from_shot(s, radius, kappa, shot);
}

struct VolumeScan {
  std::vector<double> r_starts;
  bool enclosing = true;
  bool non_enclosing = true;
  FindOptions find{};
  double r_cap = kDefaultRCap;
  double volume_rtol = 1e-6;
  int max_secant = 40;
};

/// Default r_start grid: `count` points spread over [0.5 R, 2 R] for the centered radius R.
inline std::vector<double> default_scan_grid(double centered_radius, int count = 8, double r_cap = kDefaultRCap) {
  std::vector<double> g;
  const double lo = 0.5 * centered_radius, hi = std::min(2.0 * centered_radius, 0.999 * r_cap);
  for (int i = 0; i < count; ++i) g.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
  return g;
}

namespace detail {

inline std::optional<Candidate> nearest_root(const Surface& s, double r_start, bool enclose, double kappa_hint,
                                             const FindOptions& opts) {
  if (!(r_start > opts.shot.integ.guard)) return std::nullopt;
  auto res = search_closed(s, r_start, enclose, opts);
  std::optional<Candidate> best;
  for (auto& c : res.roots) {
    if (c.is_circle) continue;
    if (!best || std::fabs(c.kappa_f - kappa_hint) < std::fabs(best->kappa_f - kappa_hint)) best = c;
  }
  return best;
}

}  // namespace detail

/**
 * Enumerates closed symmetric candidates of weighted volume V_target: the
 * centered circle, plus every non-circular closed shot found on the scan grid
 * after its r_start has been tuned (secant on V) to the target volume.
 *
 * Circular shots found on the grid are the centered circle family and are
 * represented by the centered circle itself.
 */
inline std::vector<Candidate> candidates_at_volume(const Surface& s, double V_target, const VolumeScan& scan) {
  const double R = centered_circle_radius(s, V_target, scan.r_cap);
  std::vector<Candidate> out{circle_candidate(s, R, scan.find.shot)};

  auto vol_err = [&](const Candidate& c) { return (c.V - V_target) / V_target; };
  for (bool enclose : {true, false}) {
    if ((enclose && !scan.enclosing) || (!enclose && !scan.non_enclosing)) continue;
    for (double r0 : scan.r_starts) {
      auto first = find_closed(s, r0, enclose, scan.find);
      if (!first) continue;
      if (first->is_circle) {
        // The nearest root is the circle; look for a non-circular one instead.
        first = detail::nearest_root(s, r0, enclose, first->kappa_f, scan.find);
        if (!first) continue;
      }
      Candidate cur = *first;
      std::optional<Candidate> prev;
      double x_prev = 0.0, e_prev = 0.0;
      for (int it = 0; it < scan.max_secant && std::fabs(vol_err(cur)) > 1e-3 * scan.volume_rtol; ++it) {
        double x_next;
        const double e_cur = vol_err(cur);
        if (!prev) {
          // First move: scale r_start as if V ~ r^2.
          x_next = cur.r_start * std::sqrt(V_target / cur.V);
        } else {
          const double slope = (e_cur - e_prev) / (cur.r_start - x_prev);
          if (slope == 0.0 || !std::isfinite(slope)) break;
          x_next = cur.r_start - e_cur / slope;
        }
        x_next = std::clamp(x_next, 0.25 * cur.r_start, std::min(4.0 * cur.r_start, 0.999 * scan.r_cap));
        auto next = detail::nearest_root(s, x_next, enclose, cur.kappa_f, scan.find);
        if (!next) break;
        prev = cur;
        x_prev = cur.r_start;
        e_prev = e_cur;
        cur = *next;
      }
      if (std::fabs(vol_err(cur)) <= scan.volume_rtol && !cur.is_circle) out.push_back(cur);
    }
  }

  // Deduplicate on (kappa_f, r_start), then order by (class, r_start).
  std::vector<Candidate> uniq;
  for (auto& c : out) {
    const bool dup = std::any_of(uniq.begin(), uniq.end(), [&](const Candidate& u) {
      return std::fabs(u.kappa_f - c.kappa_f) < 1e-8 && std::fabs(u.r_start - c.r_start) < 1e-8;
    });
    if (!dup) uniq.push_back(std::move(c));
  }
  std::stable_sort(uniq.begin(), uniq.end(), [](const Candidate& a, const Candidate& b) {
    if (a.encloses_origin != b.encloses_origin) return a.encloses_origin;
    return a.r_start < b.r_start;
  });
  return uniq;
}

/// Minimum-P candidate; near-ties (1e-9 relative) go to the centered circle.
inline const Candidate* min_perimeter(const std::vector<Candidate>& cs) {
  const Candidate* best = nullptr;
  for (const auto& c : cs) {
    if (!best) {
      best = &c;
      continue;
    }
    const double tie = 1e-9 * std::max(c.P, best->P);
    if (c.P < best->P - tie || (std::fabs(c.P - best->P) <= tie && c.is_circle && !best->is_circle)) best = &c;
  }
  return best;
}

// ---------------------------------------------------------------------------
// JSON export

inline void write_candidate_json(std::ostream& os, const Candidate& c) {
  os << "{\"kappa_f\": " << format_g17(c.kappa_f) << ", \"r_start\": " << format_g17(c.r_start)
     << ", \"r_end\": " << format_g17(c.r_end) << ", \"encloses_origin\": " << (c.encloses_origin ? "true" : "false")
     << ", \"P\": " << format_g17(c.P) << ", \"V\": " << format_g17(c.V)
     << ", \"is_circle\": " << (c.is_circle ? "true" : "false") << "}";
}

inline void write_candidates_json(std::ostream& os, const std::vector<Candidate>& cs) {
  os << "[";
  for (std::size_t i = 0; i < cs.size(); ++i) {
    os << (i ? ",\n  " : "\n  ");
    write_candidate_json(os, cs[i]);
  }
  os << (cs.empty() ? "]\n" : "\n]\n");
}

}  // namespace isoperim
