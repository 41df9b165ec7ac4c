#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "isoperim/quadrature.hpp"
#include "isoperim/radial_function.hpp"

namespace isoperim {

using json = nlohmann::json;

/// Absolute slack on d^2 log(fh) when deciding log-convexity.
inline constexpr double kTolConvex = 1e-12;

namespace detail {
struct FhIntegrand {
  RadialFunction f, h;
  double operator()(double s) const { return s > 0.0 ? f.value(s) * h.value(s) : 0.0; }
};
}  // namespace detail

/**
 * Surface of revolution ds^2 = dr^2 + h(r)^2 dtheta^2 with radial volume
 * density f and perimeter density g (g defaults to f). n is the ambient
 * dimension used by the hypothesis audits; the curve dynamics are planar.
 */
class Surface {
 public:
  Surface(RadialFunction h, RadialFunction f, std::optional<RadialFunction> g = std::nullopt, int n = 2)
      : h_(std::move(h)), f_(std::move(f)), g_(g ? *g : f_), g_explicit_(g.has_value()), n_(n) {
    if (n_ < 2) throw SpecError("surface: n must be >= 2");
    double prev = h_.value(0.1);
    for (int k = 2; k <= 12; ++k) {
      const double v = h_.value(std::pow(10.0, -k));
      if (!(v < prev)) throw SpecError("surface: metric factor h must decrease to 0 at the origin");
      prev = v;
    }
    if (!(prev <= 1e-3 * h_.value(1.0))) throw SpecError("surface: metric factor h must vanish at the origin");
    area_ = std::make_shared<const MemoPrimitive<detail::FhIntegrand>>(detail::FhIntegrand{f_, h_});
  }

  const RadialFunction& h() const { return h_; }
  const RadialFunction& f() const { return f_; }
  const RadialFunction& g() const { return g_; }
  bool has_separate_g() const { return g_explicit_; }
  int n() const { return n_; }

  /// Same surface with a different ambient dimension (shares the area cache).
  Surface with_dimension(int n) const {
    if (n < 2) throw SpecError("surface: n must be >= 2");
    Surface s = *this;
    s.n_ = n;
    return s;
  }

  double fh(double r) const { return f_.value(r) * h_.value(r); }
  double log_fh(double r) const { return f_.log_value(r) + h_.log_value(r); }
  double d2log_fh(double r) const { return f_.d2log(r) + h_.d2log(r); }

  /// F(r) = int_0^r f(s) h(s) ds, memoized.
  double area_primitive(double r) const { return (*area_)(r); }

 private:
  RadialFunction h_, f_, g_;
  bool g_explicit_;
  int n_;
  std::shared_ptr<const MemoPrimitive<detail::FhIntegrand>> area_;
};

/// (log fh)'(r) = f.dlog(r) + h.dlog(r)
inline double logderiv_fh(const Surface& s, double r) {
  if (!(r > 0.0)) throw std::domain_error("logderiv_fh: r must be positive");
  return s.f().dlog(r) + s.h().dlog(r);
}

inline double area_primitive(const Surface& s, double r) { return s.area_primitive(r); }

/**
 * Smallest r0 in [r_lo, r_hi] beyond which log(fh) is convex (up to
 * kTolConvex) and fh is increasing, checked on a log-spaced grid and
 * refined by bisection at the last failing grid cell.
 */
inline std::optional<double> logconvexity_onset(const Surface& s, double r_lo = 1e-6, double r_hi = kDefaultRCap,
                                                int grid = 4096, double tol = kTolConvex) {
  if (!(r_lo > 0.0) || !(r_hi > r_lo)) throw std::invalid_argument("logconvexity_onset: need 0 < r_lo < r_hi");
  auto ok = [&](double r) { return s.d2log_fh(r) >= -tol && logderiv_fh(s, r) > 0.0; };
  const double a = std::log(r_lo), b = std::log(r_hi);
  auto node = [&](int i) { return i == grid - 1 ? r_hi : std::exp(a + (b - a) * i / (grid - 1)); };
  int last_fail = -1;
  for (int i = 0; i < grid; ++i)
    if (!ok(node(i))) last_fail = i;
  if (last_fail < 0) return r_lo;
  if (last_fail == grid - 1) return std::nullopt;
  double lo = node(last_fail), hi = node(last_fail + 1);
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

// ---------------------------------------------------------------------------
// JSON surface specs

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw SpecError(where + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, _] : obj.items())
    if (!ok.count(k)) throw SpecError(where + ": unknown key \"" + k + "\"");
}

inline double number(const json& obj, const char* key, const std::string& where, std::optional<double> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw SpecError(where + ": missing parameter \"" + key + "\"");
  }
  const auto& v = obj.at(key);
  if (!v.is_number()) throw SpecError(where + ": parameter \"" + key + "\" must be a number");
  return v.get<double>();
}

inline SeriesTerm parse_term(const json& t, const std::string& where) {
  if (!t.is_object()) throw SpecError(where + ": term must be an object");
  if (!t.contains("basis") || !t.at("basis").is_string()) throw SpecError(where + ": term needs a \"basis\" string");
  const auto basis = t.at("basis").get<std::string>();
  SeriesTerm out;
  out.coef = number(t, "coef", where, 1.0);
  if (basis == "power") {
    reject_unknown(t, {"coef", "basis", "k"}, where);
    out.basis = SeriesTerm::Basis::power;
    out.a = number(t, "k", where);
  } else if (basis == "sinh" || basis == "cosh") {
    reject_unknown(t, {"coef", "basis", "b"}, where);
    out.basis = basis == "sinh" ? SeriesTerm::Basis::sinh : SeriesTerm::Basis::cosh;
    out.a = number(t, "b", where, 1.0);
  } else if (basis == "exp_power") {
    reject_unknown(t, {"coef", "basis", "a", "p"}, where);
    out.basis = SeriesTerm::Basis::exp_power;
    out.a = number(t, "a", where);
    out.p = number(t, "p", where);
  } else {
    throw SpecError(where + ": unknown series basis \"" + basis + "\"");
  }
  return out;
}

}  // namespace detail

/// Parses {"kind": ..., "params": {...}} into a RadialFunction.
inline RadialFunction parse_radial(const json& spec, const std::string& where) {
  detail::reject_unknown(spec, {"kind", "params"}, where);
  if (!spec.contains("kind") || !spec.at("kind").is_string()) throw SpecError(where + ": missing \"kind\"");
  const auto kind = spec.at("kind").get<std::string>();
  const json params = spec.value("params", json::object());
  const std::string at = where + "." + kind;
  if (kind == "euclidean") {
    detail::reject_unknown(params, {}, at);
    return RadialFunction::power(1.0, 1.0);
  }
  if (kind == "hyperbolic") {
    detail::reject_unknown(params, {}, at);
    return RadialFunction::sinh(1.0, 1.0);
  }
  if (kind == "constant") {
    detail::reject_unknown(params, {"c"}, at);
    return RadialFunction::constant(detail::number(params, "c", at, 1.0));
  }
  if (kind == "power") {
    detail::reject_unknown(params, {"c", "p"}, at);
    return RadialFunction::power(detail::number(params, "c", at, 1.0), detail::number(params, "p", at));
  }
  if (kind == "sinh") {
    detail::reject_unknown(params, {"c", "b"}, at);
    return RadialFunction::sinh(detail::number(params, "c", at, 1.0), detail::number(params, "b", at, 1.0));
  }
  if (kind == "exp_power") {
    detail::reject_unknown(params, {"a", "p"}, at);
    return RadialFunction::exp_power(detail::number(params, "a", at), detail::number(params, "p", at));
  }
  if (kind == "product") {
    detail::reject_unknown(params, {"factors"}, at);
    if (!params.contains("factors") || !params.at("factors").is_array())
      throw SpecError(at + ": \"factors\" must be an array");
    std::vector<RadialFunction> fs;
    int i = 0;
    for (const auto& f : params.at("factors")) fs.push_back(parse_radial(f, at + "[" + std::to_string(i++) + "]"));
    return RadialFunction::product(std::move(fs));
  }
  if (kind == "custom-series") {
    detail::reject_unknown(params, {"terms"}, at);
    if (!params.contains("terms") || !params.at("terms").is_array())
      throw SpecError(at + ": \"terms\" must be an array");
    std::vector<SeriesTerm> ts;
    for (const auto& t : params.at("terms")) ts.push_back(detail::parse_term(t, at));
    return RadialFunction::series(std::move(ts));
  }
  throw SpecError(where + ": unknown kind \"" + kind + "\"");
}

/// Builds a Surface from {"h": ..., "f": ..., "g"?: ..., "n"?: int}.
inline Surface make_surface(const json& spec) {
  detail::reject_unknown(spec, {"h", "f", "g", "n"}, "surface");
  if (!spec.contains("h")) throw SpecError("surface: missing \"h\"");
  if (!spec.contains("f")) throw SpecError("surface: missing \"f\"");
  auto h = parse_radial(spec.at("h"), "h");
  auto f = parse_radial(spec.at("f"), "f");
  std::optional<RadialFunction> g;
  if (spec.contains("g")) g = parse_radial(spec.at("g"), "g");
  int n = 2;
  if (spec.contains("n")) {
    const auto& v = spec.at("n");
    if (!v.is_number_integer()) throw SpecError("surface: \"n\" must be an integer");
    n = v.get<int>();
  }
  return Surface(std::move(h), std::move(f), std::move(g), n);
}

inline Surface make_surface(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("surface: invalid JSON: ") + e.what());
  }
  return make_surface(j);
}

// Common surfaces
inline Surface euclidean_plane() { return Surface(RadialFunction::power(1.0, 1.0), RadialFunction::constant()); }
inline Surface hyperbolic_plane() { return Surface(RadialFunction::sinh(), RadialFunction::constant()); }
inline Surface gaussian_euclidean() { return Surface(RadialFunction::power(1.0, 1.0), RadialFunction::exp_power(1.0, 2.0)); }
inline Surface borell_hyperbolic() { return Surface(RadialFunction::sinh(), RadialFunction::exp_power(1.0, 2.0)); }

}  // namespace isoperim
