#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace isoperim {

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One accepted step of the Dormand-Prince pair with its continuous extension.
template <std::size_t N>
struct DenseStep {
  using State = std::array<double, N>;

  double t0 = 0.0;
  double h = 0.0;
  std::array<State, 5> c{};  // Hairer's rcont1..rcont5

  double t1() const { return t0 + h; }

  State eval(double t) const {
    const double s = (t - t0) / h;
    const double s1 = 1.0 - s;
    State y;
    for (std::size_t i = 0; i < N; ++i)
      y[i] = c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])));
    return y;
  }
};

struct StepperOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double h_init = 0.0;  // 0 = automatic
  double h_max = 0.0;   // 0 = unbounded
  long max_steps = 1000000;
};

enum class StepperStatus { reached_end, stopped, step_limit };

/**
 * Explicit embedded Runge-Kutta pair of orders 5(4) (Dormand & Prince) with
 * a 4th-order dense output.
 *
 * `rhs(t, y, dy)` returns false when y lies outside the domain of the
 * vector field; the step is then rejected and retried with a quarter of
 * the step size. `on_step(step, y1)` is called after every accepted step and
 * returns false to stop.
 */
template <std::size_t N>
class DormandPrince {
 public:
  using State = std::array<double, N>;

  explicit DormandPrince(StepperOptions opts = {}) : opts_(opts) {
    if (!(opts_.rtol > 0.0) || !(opts_.atol > 0.0)) throw std::invalid_argument("stepper: tolerances must be positive");
  }

  template <class Rhs, class OnStep>
  StepperStatus run(Rhs&& rhs, double t0, const State& y0, double t_end, OnStep&& on_step) const {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                            a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    State k1, k2, k3, k4, k5, k6, k7, ytmp, y1, y = y0;
    double t = t0;
    if (!rhs(t, y, k1)) throw IntegrationError("stepper: initial state outside the domain of the vector field");

    double h = opts_.h_init > 0.0 ? opts_.h_init : initial_step(rhs, t, y, k1, t_end);
    bool last_rejected = false;

    auto combine = [&](State& out, double hh, std::initializer_list<std::pair<double, const State*>> terms) {
      for (std::size_t i = 0; i < N; ++i) {
        double s = 0.0;
        for (const auto& [w, k] : terms) s += w * (*k)[i];
        out[i] = y[i] + hh * s;
      }
    };

    for (long n = 0; n < opts_.max_steps; ++n) {
      if (t >= t_end) return StepperStatus::reached_end;
      if (opts_.h_max > 0.0) h = std::min(h, opts_.h_max);
      bool hits_end = false;
      if (t + h >= t_end) {
        h = t_end - t;
        hits_end = true;
      }
      if (hits_end && h <= 1e-14 * std::max(1.0, std::fabs(t))) return StepperStatus::reached_end;
      if (h < 1e-14 * std::max(1.0, std::fabs(t)))
        throw IntegrationError("stepper: step size underflow at t = " + std::to_string(t));

      bool ok = true;
      combine(ytmp, h, {{a21, &k1}});
      ok = ok && rhs(t + c2 * h, ytmp, k2);
      if (ok) combine(ytmp, h, {{a31, &k1}, {a32, &k2}});
      ok = ok && rhs(t + c3 * h, ytmp, k3);
      if (ok) combine(ytmp, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
      ok = ok && rhs(t + c4 * h, ytmp, k4);
      if (ok) combine(ytmp, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
      ok = ok && rhs(t + c5 * h, ytmp, k5);
      if (ok) combine(ytmp, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
      ok = ok && rhs(t + h, ytmp, k6);
      if (ok) combine(y1, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
      ok = ok && rhs(t + h, y1, k7);
      if (!ok) {
        h *= 0.25;
        last_rejected = true;
        continue;
      }

      double err = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double sc = opts_.atol + opts_.rtol * std::max(std::fabs(y[i]), std::fabs(y1[i]));
        err += (e / sc) * (e / sc);
      }
      err = std::sqrt(err / static_cast<double>(N));
      if (!std::isfinite(err)) {
        h *= 0.25;
        last_rejected = true;
        continue;
      }

      if (err <= 1.0) {
        DenseStep<N> step;
        step.t0 = t;
        step.h = h;
        for (std::size_t i = 0; i < N; ++i) {
          const double dy = y1[i] - y[i];
          const double bspl = h * k1[i] - dy;
          step.c[0][i] = y[i];
          step.c[1][i] = dy;
          step.c[2][i] = bspl;
          step.c[3][i] = dy - h * k7[i] - bspl;
          step.c[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
        t = hits_end ? t_end : t + h;
        y = y1;
        k1 = k7;
        if (!on_step(step, y)) return StepperStatus::stopped;
        double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        if (last_rejected) fac = std::min(fac, 1.0);
        h *= fac;
        last_rejected = false;
      } else {
        h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        last_rejected = true;
      }
    }
    return StepperStatus::step_limit;
  }

 private:
  template <class Rhs>
  double initial_step(Rhs& rhs, double t, const State& y, const State& f0, double t_end) const {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = opts_.atol + opts_.rtol * std::fabs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = std::sqrt(d0 / N);
    d1 = std::sqrt(d1 / N);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, t_end - t);
    State y1, f1;
    for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + h0 * f0[i];
    if (!rhs(t + h0, y1, f1)) return std::max(1e-6 * h0, 1e-10);
    double d2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = opts_.atol + opts_.rtol * std::fabs(y[i]);
      d2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
    }
    d2 = std::sqrt(d2 / N) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    return std::min({100.0 * h0, h1, t_end - t});
  }

  StepperOptions opts_;
};

}  // namespace isoperim
