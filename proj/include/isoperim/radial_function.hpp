#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace isoperim {

/// Raised for malformed surface descriptions: unknown kinds, bad parameters.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Default upper radius for probe grids.
inline constexpr double kDefaultRCap = 50.0;

/// One basis term c * B(r) of a custom series.
struct SeriesTerm {
  enum class Basis { power, sinh, cosh, exp_power };

  double coef = 1.0;
  Basis basis = Basis::power;
  double a = 1.0;  // exponent k for power, scale b for sinh/cosh, a for exp(a r^p)
  double p = 1.0;  // only used by exp_power

  struct Jet {
    double v, d1, d2;
  };

  Jet eval(double r) const {
    switch (basis) {
      case Basis::power: {
        const double k = a;
        if (k == 0.0) return {coef, 0.0, 0.0};
        const double v = std::pow(r, k);
        return {coef * v, coef * k * v / r, coef * k * (k - 1.0) * v / (r * r)};
      }
      case Basis::sinh: {
        const double s = std::sinh(a * r), c = std::cosh(a * r);
        return {coef * s, coef * a * c, coef * a * a * s};
      }
      case Basis::cosh: {
        const double s = std::sinh(a * r), c = std::cosh(a * r);
        return {coef * c, coef * a * s, coef * a * a * c};
      }
      case Basis::exp_power: {
        const double rp = std::pow(r, p);
        const double e = std::exp(a * rp);
        const double g1 = a * p * rp / r;
        const double g2 = a * p * (p - 1.0) * rp / (r * r);
        return {coef * e, coef * e * g1, coef * e * (g2 + g1 * g1)};
      }
    }
    return {0.0, 0.0, 0.0};
  }
};

/**
 * A positive radial profile r -> value(r) with analytic first and second
 * log-derivatives.
 *
 * Used for the metric factor h, the volume density f and the perimeter
 * density g. Catalog kinds carry closed-form derivatives; products add
 * log-derivatives; custom series differentiate term by term.
 *
 * Instances are immutable and cheap to copy (children are shared).
 */
class RadialFunction {
 public:
  enum class Kind { constant, power, sinh, exp_power, product, series };

  RadialFunction() : RadialFunction(Kind::constant, {1.0}) {}

  /// c
  static RadialFunction constant(double c = 1.0) {
    if (!(c > 0.0)) throw SpecError("constant: c must be positive");
    return RadialFunction(Kind::constant, {c});
  }
  /// c r^p
  static RadialFunction power(double c, double p) {
    if (!(c > 0.0)) throw SpecError("power: c must be positive");
    if (!std::isfinite(p)) throw SpecError("power: p must be finite");
    return RadialFunction(Kind::power, {c, p});
  }
  /// c sinh(b r)
  static RadialFunction sinh(double c = 1.0, double b = 1.0) {
    if (!(c > 0.0) || !(b > 0.0)) throw SpecError("sinh: c and b must be positive");
    return RadialFunction(Kind::sinh, {c, b});
  }
  /// exp(a r^p), a > 0, p >= 1
  static RadialFunction exp_power(double a, double p) {
    if (!(a > 0.0)) throw SpecError("exp_power: a must be positive");
    if (!(p >= 1.0) || !std::isfinite(p)) throw SpecError("exp_power: p must be >= 1");
    return RadialFunction(Kind::exp_power, {a, p});
  }
  static RadialFunction product(std::vector<RadialFunction> factors) {
    if (factors.empty()) throw SpecError("product: needs at least one factor");
    RadialFunction out(Kind::product, {});
    out.children_ = std::make_shared<const std::vector<RadialFunction>>(std::move(factors));
    return out;
  }
  /// Sum of basis terms; must stay positive on (0, r_cap].
  static RadialFunction series(std::vector<SeriesTerm> terms, double r_cap = kDefaultRCap) {
    if (terms.empty()) throw SpecError("custom-series: needs at least one term");
    for (const auto& t : terms) {
      if (!std::isfinite(t.coef) || !std::isfinite(t.a) || !std::isfinite(t.p))
        throw SpecError("custom-series: non-finite term parameter");
      if ((t.basis == SeriesTerm::Basis::sinh || t.basis == SeriesTerm::Basis::cosh) && !(t.a > 0.0))
        throw SpecError("custom-series: sinh/cosh scale must be positive");
      if (t.basis == SeriesTerm::Basis::exp_power && (!(t.a > 0.0) || !(t.p >= 1.0)))
        throw SpecError("custom-series: exp_power needs a > 0 and p >= 1");
    }
    RadialFunction out(Kind::series, {});
    out.terms_ = std::make_shared<const std::vector<SeriesTerm>>(std::move(terms));
    // Positivity on a log-spaced probe grid.
    constexpr int kProbe = 512;
    const double lo = std::log(1e-8), hi = std::log(r_cap);
    for (int i = 0; i < kProbe; ++i) {
      const double r = std::exp(lo + (hi - lo) * i / (kProbe - 1));
      const double v = out.series_jet(r).v;
      if (std::isfinite(v) && !(v > 0.0))
        throw SpecError("custom-series: value not positive at r = " + std::to_string(r));
    }
    return out;
  }

  Kind kind() const { return kind_; }
  std::span<const double> params() const { return params_; }
  std::span<const RadialFunction> factors() const {
    return children_ ? std::span<const RadialFunction>(*children_) : std::span<const RadialFunction>();
  }
  std::span<const SeriesTerm> terms() const {
    return terms_ ? std::span<const SeriesTerm>(*terms_) : std::span<const SeriesTerm>();
  }

  double log_value(double r) const {
    switch (kind_) {
      case Kind::constant: return std::log(params_[0]);
      case Kind::power: return std::log(params_[0]) + params_[1] * std::log(r);
      case Kind::sinh: {
        const double x = params_[1] * r;
        // log sinh x without overflow for large x
        const double ls = x > 20.0 ? x - std::log(2.0) + std::log1p(-std::exp(-2.0 * x)) : std::log(std::sinh(x));
        return std::log(params_[0]) + ls;
      }
      case Kind::exp_power: return params_[0] * std::pow(r, params_[1]);
      case Kind::product: {
        double s = 0.0;
        for (const auto& c : *children_) s += c.log_value(r);
        return s;
      }
      case Kind::series: return std::log(series_jet(r).v);
    }
    return 0.0;
  }

  double value(double r) const {
    switch (kind_) {
      case Kind::constant: return params_[0];
      case Kind::power: return params_[0] * std::pow(r, params_[1]);
      case Kind::sinh: return params_[0] * std::sinh(params_[1] * r);
      case Kind::series: return series_jet(r).v;
      default: return std::exp(log_value(r));
    }
  }

  /// d/dr log value(r)
  double dlog(double r) const {
    switch (kind_) {
      case Kind::constant: return 0.0;
      case Kind::power: return params_[1] / r;
      case Kind::sinh: {
        const double b = params_[1];
        return b / std::tanh(b * r);
      }
      case Kind::exp_power: {
        const double a = params_[0], p = params_[1];
        return a * p * std::pow(r, p - 1.0);
      }
      case Kind::product: {
        double s = 0.0;
        for (const auto& c : *children_) s += c.dlog(r);
        return s;
      }
      case Kind::series: {
        const auto j = series_jet(r);
        return j.d1 / j.v;
      }
    }
    return 0.0;
  }

  /// d^2/dr^2 log value(r)
  double d2log(double r) const {
    switch (kind_) {
      case Kind::constant: return 0.0;
      case Kind::power: return -params_[1] / (r * r);
      case Kind::sinh: {
        const double b = params_[1];
        const double s = std::sinh(b * r);
        return -b * b / (s * s);
      }
      case Kind::exp_power: {
        const double a = params_[0], p = params_[1];
        return a * p * (p - 1.0) * std::pow(r, p - 2.0);
      }
      case Kind::product: {
        double s = 0.0;
        for (const auto& c : *children_) s += c.d2log(r);
        return s;
      }
      case Kind::series: {
        const auto j = series_jet(r);
        const double g = j.d1 / j.v;
        return j.d2 / j.v - g * g;
      }
    }
    return 0.0;
  }

  /// d/dr value(r)
  double derivative(double r) const { return dlog(r) * value(r); }

  std::string describe() const {
    auto num = [](double x) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", x);
      return std::string(buf);
    };
    switch (kind_) {
      case Kind::constant: return num(params_[0]);
      case Kind::power: return num(params_[0]) + "*r^" + num(params_[1]);
      case Kind::sinh: return num(params_[0]) + "*sinh(" + num(params_[1]) + "r)";
      case Kind::exp_power: return "exp(" + num(params_[0]) + "*r^" + num(params_[1]) + ")";
      case Kind::product: {
        std::string s;
        for (const auto& c : *children_) s += (s.empty() ? "" : " * ") + c.describe();
        return "(" + s + ")";
      }
      case Kind::series: return "series[" + std::to_string(terms_->size()) + "]";
    }
    return "?";
  }

 private:
  RadialFunction(Kind k, std::vector<double> params) : kind_(k), params_(std::move(params)) {}

  SeriesTerm::Jet series_jet(double r) const {
    SeriesTerm::Jet s{0.0, 0.0, 0.0};
    for (const auto& t : *terms_) {
      const auto j = t.eval(r);
      s.v += j.v;
      s.d1 += j.d1;
      s.d2 += j.d2;
    }
    return s;
  }

  Kind kind_;
  std::vector<double> params_;
  std::shared_ptr<const std::vector<RadialFunction>> children_;
  std::shared_ptr<const std::vector<SeriesTerm>> terms_;
};

}  // namespace isoperim
