#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "isoperim/curvature.hpp"
#include "isoperim/integrator.hpp"
#include "isoperim/surface.hpp"

namespace isoperim {

inline constexpr double kOriginGuard = 1e-8;

/// Point on a constant-generalized-curvature curve plus its running integrals.
struct CurveState {
  double t = 0.0;
  double r = 1.0;
  double theta = 0.0;
  double alpha = kHalfPi;  // unwrapped
  double P_w = 0.0;        // int f(r) dt
  double A_w = 0.0;        // int F(r) theta' dt
};

struct StateDerivative {
  double dr, dtheta, dalpha, dP_w, dA_w;
};

/// alpha' = kappa_f - (log fh)'(r) sin(alpha)
inline double alpha_prime(const Surface& s, double kappa_f, double r, double alpha) {
  return kappa_f - logderiv_fh(s, r) * sin_alpha(alpha);
}

inline StateDerivative ode_rhs(const Surface& s, double kappa_f, const CurveState& st, double guard = kOriginGuard) {
  if (!(st.r > guard)) throw std::domain_error("ode_rhs: r at or below the origin guard");
  const double ca = cos_alpha(st.alpha), sa = sin_alpha(st.alpha);
  const double h = s.h().value(st.r);
  return {ca, sa / h, kappa_f - logderiv_fh(s, st.r) * sa, s.f().value(st.r), s.area_primitive(st.r) * sa / h};
}

/// Arclength jet of the solution through `st`, derived from the vector field.
inline CurveJet2 jet_of(const Surface& s, double kappa_f, const CurveState& st) {
  const double ca = cos_alpha(st.alpha), sa = sin_alpha(st.alpha);
  const double h = s.h().value(st.r), hl = s.h().dlog(st.r);
  const double ap = alpha_prime(s, kappa_f, st.r, st.alpha);
  CurveJet2 j;
  j.r = st.r;
  j.dr = ca;
  j.d2r = -sa * ap;
  j.dtheta = sa / h;
  j.d2theta = (ca * ap - sa * ca * hl) / h;
  return j;
}

// ---------------------------------------------------------------------------

enum class EventKind { axis_crossing, alpha_level, radius_level, origin_guard, escape };
enum class Termination { axis_crossing, alpha_level, radius_level, origin_guard, escape, step_limit };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::axis_crossing: return "axis-crossing";
    case EventKind::alpha_level: return "alpha-level";
    case EventKind::radius_level: return "radius-level";
    case EventKind::origin_guard: return "origin-guard";
    case EventKind::escape: return "escape";
  }
  return "?";
}

inline const char* to_string(Termination k) {
  switch (k) {
    case Termination::axis_crossing: return "axis-crossing";
    case Termination::alpha_level: return "alpha-level";
    case Termination::radius_level: return "radius-level";
    case Termination::origin_guard: return "origin-guard";
    case Termination::escape: return "escape";
    case Termination::step_limit: return "step-limit";
  }
  return "?";
}

/// Event sin(theta) = 0 (axis), alpha = level, or r = level.
struct EventSpec {
  EventKind kind = EventKind::axis_crossing;
  double level = 0.0;
  bool terminal = false;

  static EventSpec axis(bool terminal = true) { return {EventKind::axis_crossing, 0.0, terminal}; }
  static EventSpec alpha(double level, bool terminal = false) { return {EventKind::alpha_level, level, terminal}; }
  static EventSpec radius(double level, bool terminal = false) { return {EventKind::radius_level, level, terminal}; }

  double operator()(const CurveState& s) const {
    switch (kind) {
      case EventKind::axis_crossing: return std::sin(s.theta);
      case EventKind::alpha_level: return s.alpha - level;
      case EventKind::radius_level:
      case EventKind::origin_guard:
      case EventKind::escape: return s.r - level;
    }
    return 0.0;
  }
};

struct Event {
  EventKind kind;
  double level;
  double t;
  CurveState state;
};

struct IntegrateOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double event_tol = 1e-12;
  double max_arclength = 200.0;
  double r_cap = kDefaultRCap;
  double guard = kOriginGuard;
  double max_step = 0.5;  // arclength cap per step; keeps dense samples usable on exact circles
  long max_steps = 1000000;

  void validate() const {
    if (!(rtol > 0.0) || !(atol > 0.0) || !(event_tol > 0.0))
      throw std::invalid_argument("integrate: tolerances must be positive");
    if (!(max_arclength > 0.0) || !(r_cap > guard) || !(guard > 0.0) || !(max_step > 0.0))
      throw std::invalid_argument("integrate: invalid arclength/radius limits");
  }
};

/**
 * Solution of the constant-kappa_f system from one initial state.
 *
 * Samples are the initial state and the end of every accepted step (the
 * last sample is the terminal event state when one fired). Dense output
 * covers [0, t_end].
 */
class Trajectory {
 public:
  using Step = DenseStep<5>;

  Trajectory(Surface s, double kappa_f) : surface_(std::move(s)), kappa_f_(kappa_f) {}

  const Surface& surface() const { return surface_; }
  double kappa_f() const { return kappa_f_; }
  const std::vector<CurveState>& samples() const { return samples_; }
  const std::vector<Step>& steps() const { return steps_; }
  const std::vector<Event>& events() const { return events_; }
  Termination termination() const { return termination_; }
  const CurveState& back() const { return samples_.back(); }
  double t_end() const { return samples_.back().t; }

  /// Dense-output state at arclength t in [0, t_end].
  CurveState at(double t) const {
    if (steps_.empty() || t <= steps_.front().t0) return samples_.front();
    if (t >= t_end()) return samples_.back();
    auto it = std::upper_bound(steps_.begin(), steps_.end(), t, [](double v, const Step& s) { return v < s.t0; });
    return from_array(t, std::prev(it)->eval(t));
  }

  double alpha_prime_at(const CurveState& st) const { return alpha_prime(surface_, kappa_f_, st.r, st.alpha); }
  CurveJet2 jet_at(const CurveState& st) const { return jet_of(surface_, kappa_f_, st); }

  static std::array<double, 5> to_array(const CurveState& s) { return {s.r, s.theta, s.alpha, s.P_w, s.A_w}; }
  static CurveState from_array(double t, const std::array<double, 5>& y) { return {t, y[0], y[1], y[2], y[3], y[4]}; }

 private:
  friend Trajectory integrate(const Surface&, double, const CurveState&, const std::vector<EventSpec>&,
                              const IntegrateOptions&);

  Surface surface_;
  double kappa_f_;
  std::vector<CurveState> samples_;
  std::vector<Step> steps_;
  std::vector<Event> events_;
  Termination termination_ = Termination::step_limit;
};

namespace detail {

inline Termination termination_of(EventKind k) {
  switch (k) {
    case EventKind::axis_crossing: return Termination::axis_crossing;
    case EventKind::alpha_level: return Termination::alpha_level;
    case EventKind::radius_level: return Termination::radius_level;
    case EventKind::origin_guard: return Termination::origin_guard;
    case EventKind::escape: return Termination::escape;
  }
  return Termination::step_limit;
}

// First k with k*pi strictly after th0 on the way to th1 (inclusive of th1).
inline std::optional<long> first_half_turn(double th0, double th1) {
  const double pi = std::numbers::pi;
  if (th1 > th0) {
    const double k = std::floor(th0 / pi) + 1.0;
    if (k * pi <= th1) return static_cast<long>(k);
  } else if (th1 < th0) {
    const double k = std::ceil(th0 / pi) - 1.0;
    if (k * pi >= th1) return static_cast<long>(k);
  }
  return std::nullopt;
}

// Bisection on the dense output for a sign change of g over the step.
inline double locate_event(const Trajectory::Step& step, const EventSpec& g, double g0, double tol) {
  double lo = step.t0, hi = step.t1(), glo = g0;
  double best_t = hi, best_g = std::fabs(g(Trajectory::from_array(hi, step.eval(hi))));
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(Trajectory::from_array(mid, step.eval(mid)));
    if (std::fabs(gm) < best_g) {
      best_g = std::fabs(gm);
      best_t = mid;
    }
    if (std::fabs(gm) <= tol) return mid;
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return best_t;
}

}  // namespace detail

/// Largest radius <= r_cap at which f, fh and F stay comfortably inside double range.
inline double escape_radius(const Surface& s, double r_cap) {
  constexpr double kLogLimit = 690.0;
  auto safe = [&](double r) {
    return s.f().log_value(r) < kLogLimit && s.log_fh(r) + std::log(std::max(r, 1.0)) < kLogLimit;
  };
  if (safe(r_cap)) return r_cap;
  const int n = 256;
  double prev = std::min(1.0, r_cap);
  for (int i = 1; i <= n; ++i) {
    const double r = prev + (r_cap - prev) * i / n;
    if (!safe(r)) {
      double lo = prev + (r_cap - prev) * (i - 1) / n, hi = r;
      for (int it = 0; it < 60; ++it) (safe(0.5 * (lo + hi)) ? lo : hi) = 0.5 * (lo + hi);
      return lo;
    }
  }
  return r_cap;
}

/**
 * Integrates the constant-kappa_f system from `init` with the Dormand-Prince
 * 5(4) pair. The origin guard and the escape radius are always terminal;
 * user events fire on sign changes of their event function.
 */
inline Trajectory integrate(const Surface& surface, double kappa_f, const CurveState& init,
                            const std::vector<EventSpec>& events, const IntegrateOptions& opts = {}) {
  opts.validate();
  if (!(init.r > opts.guard)) throw std::domain_error("integrate: initial radius at or below the origin guard");
  if (!(init.r < opts.r_cap)) throw std::domain_error("integrate: initial radius at or beyond r_cap");

  Trajectory traj(surface, kappa_f);
  traj.samples_.push_back(init);

  std::vector<EventSpec> all = events;
  all.push_back({EventKind::origin_guard, opts.guard, true});
  all.push_back({EventKind::escape, escape_radius(surface, opts.r_cap), true});

  std::vector<double> g_prev(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) g_prev[i] = all[i](init);

  auto rhs = [&](double, const std::array<double, 5>& y, std::array<double, 5>& dy) {
    const double r = y[0];
    if (!(r > 0.0) || !std::isfinite(r) || !std::isfinite(y[2])) return false;
    const double ca = cos_alpha(y[2]), sa = sin_alpha(y[2]);
    const double h = surface.h().value(r);
    const double F = surface.area_primitive(r);
    dy[0] = ca;
    dy[1] = sa / h;
    dy[2] = kappa_f - logderiv_fh(surface, r) * sa;
    dy[3] = surface.f().value(r);
    dy[4] = F * sa / h;
    for (double d : dy)
      if (!std::isfinite(d)) return false;
    return true;
  };

  bool terminated = false;
  auto on_step = [&](const Trajectory::Step& step, const std::array<double, 5>& y1) {
    const CurveState end = Trajectory::from_array(step.t1(), y1);
    std::vector<Event> fired;
    const double th0 = step.c[0][1];
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i].kind == EventKind::axis_crossing) {
        // Unwrapped theta passing a multiple of pi; a step may span several
        // half-turns on exact circles, where sin(theta) alone can miss one.
        if (auto k = detail::first_half_turn(th0, end.theta)) {
          const EventSpec lvl{EventKind::axis_crossing, *k * std::numbers::pi, false};
          auto g = [&](double t) { return step.eval(t)[1] - lvl.level; };
          double te = step.t1();
          if (g(te) != 0.0) {
            double lo = step.t0, hi = step.t1(), glo = th0 - lvl.level;
            for (int it = 0; it < 200; ++it) {
              const double mid = 0.5 * (lo + hi);
              if (mid <= lo || mid >= hi) break;
              const double gm = g(mid);
              te = mid;
              if (std::fabs(gm) <= opts.event_tol) break;
              if ((gm < 0.0) == (glo < 0.0)) {
                lo = mid;
                glo = gm;
              } else {
                hi = mid;
              }
            }
          }
          const CurveState st = te == step.t1() ? end : Trajectory::from_array(te, step.eval(te));
          fired.push_back({EventKind::axis_crossing, 0.0, te, st});
        }
        continue;
      }
      const double g0 = g_prev[i], g1 = all[i](end);
      const bool crossed = (g0 < 0.0 && g1 > 0.0) || (g0 > 0.0 && g1 < 0.0) || (g1 == 0.0 && g0 != 0.0);
      if (crossed) {
        const double te = g1 == 0.0 ? step.t1() : detail::locate_event(step, all[i], g0, opts.event_tol);
        const CurveState st = te == step.t1() ? end : Trajectory::from_array(te, step.eval(te));
        fired.push_back({all[i].kind, all[i].level, te, st});
      }
      g_prev[i] = g1;
    }
    std::stable_sort(fired.begin(), fired.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    traj.steps_.push_back(step);
    for (const auto& ev : fired) {
      traj.events_.push_back(ev);
      const bool term = ev.kind == EventKind::origin_guard || ev.kind == EventKind::escape ||
                        std::any_of(all.begin(), all.end(), [&](const EventSpec& e) {
                          return e.terminal && e.kind == ev.kind && e.level == ev.level;
                        });
      if (term) {
        traj.termination_ = detail::termination_of(ev.kind);
        traj.samples_.push_back(ev.state);
        terminated = true;
        return false;
      }
    }
    traj.samples_.push_back(end);
    return true;
  };

  StepperOptions so;
  so.rtol = opts.rtol;
  so.atol = opts.atol;
  so.max_steps = opts.max_steps;
  so.h_max = opts.max_step;
  DormandPrince<5> stepper(so);
  stepper.run(rhs, init.t, Trajectory::to_array(init), init.t + opts.max_arclength, on_step);
  if (!terminated) traj.termination_ = Termination::step_limit;
  return traj;
}

/// Initial state on the x-axis at radius r heading in the +theta direction.
inline CurveState axis_start(double r) { return CurveState{0.0, r, 0.0, kHalfPi, 0.0, 0.0}; }

// ---------------------------------------------------------------------------
// CSV export

inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,r,theta,alpha,P_w,A_w\n";
  for (const auto& s : traj.samples()) {
    os << format_g17(s.t) << ',' << format_g17(s.r) << ',' << format_g17(s.theta) << ',' << format_g17(s.alpha)
       << ',' << format_g17(s.P_w) << ',' << format_g17(s.A_w) << '\n';
  }
}

}  // namespace isoperim
