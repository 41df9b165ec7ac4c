#pragma once

#include <algorithm>
#include <cmath>
#include <mutex>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace isoperim {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
  bool converged = false;
};

namespace detail {

// 15-point Kronrod nodes with the embedded 7-point Gauss rule.
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(const F& f, double a, double b) {
  const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = hw * kXgk[j];
    const double s = f(c - dx) + f(c + dx);
    kron += kWgk[j] * s;
    if (j % 2 == 1) gauss += kWg[j / 2] * s;
  }
  return {a, b, kron * hw, std::fabs((kron - gauss) * hw)};
}

}  // namespace detail

/**
 * Globally adaptive Gauss-Kronrod (7/15) quadrature of f over [a, b].
 * Bisects the panel with the largest error estimate until the summed
 * estimate falls below max(abs_tol, rel_tol * |I|).
 */
template <class F>
QuadResult integrate_adaptive(const F& f, double a, double b, double abs_tol = 1e-15,
                              double rel_tol = 1e-14, int max_panels = 4000) {
  QuadResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<detail::Panel> heap;
  heap.push(detail::gk15(f, a, b));
  double total = heap.top().value, err = heap.top().error;
  while (err > std::max(abs_tol, rel_tol * std::fabs(total)) && static_cast<int>(heap.size()) < max_panels) {
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      heap.push(worst);
      break;
    }
    const auto left = detail::gk15(f, worst.a, mid);
    const auto right = detail::gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the drift of the running updates.
  total = 0.0;
  err = 0.0;
  out.intervals = static_cast<int>(heap.size());
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = err;
  out.converged = std::isfinite(total) && err <= std::max(abs_tol, rel_tol * std::fabs(total)) * 1.0000001;
  return out;
}

/**
 * Memoized primitive F(r) = int_0^r w(s) ds of a non-negative integrand.
 *
 * Cumulative values are cached at uniformly spaced nodes; a query adds one
 * adaptive partial panel to the nearest node below. The cache grows lazily
 * and is guarded by a mutex so a shared primitive can be queried from
 * several threads.
 */
template <class W>
class MemoPrimitive {
 public:
  explicit MemoPrimitive(W integrand, double node_spacing = 0.25)
      : w_(std::move(integrand)), dx_(node_spacing), cumulative_{0.0} {}

  double operator()(double r) const {
    if (!(r >= 0.0)) throw std::domain_error("primitive: r must be non-negative");
    if (r == 0.0) return 0.0;
    if (r / dx_ > 1e6) throw std::domain_error("primitive: r too large for the node cache");
    const auto k = static_cast<std::size_t>(std::floor(r / dx_));
    const double base = node_value(k);
    if (!std::isfinite(base)) return base;
    const double r_k = static_cast<double>(k) * dx_;
    return base + piece(r_k, r, base);
  }

  std::size_t cached_nodes() const {
    std::lock_guard<std::mutex> lock(mu_);
    return cumulative_.size();
  }

 private:
  double piece(double a, double b, double base) const {
    if (b <= a) return 0.0;
    const double scale = 1.0 + std::fabs(base);
    auto q = integrate_adaptive(w_, a, b, 1e-14 * scale * (b - a) / dx_, 1e-13);
    if (!std::isfinite(q.value)) return q.value;
    if (!q.converged && q.error > 1e-12 * (scale + std::fabs(q.value)) * (b - a) / dx_)
      throw QuadratureError("primitive: adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                            std::to_string(b) + "]");
    return q.value;
  }

  double node_value(std::size_t k) const {
    std::lock_guard<std::mutex> lock(mu_);
    while (cumulative_.size() <= k) {
      const std::size_t j = cumulative_.size() - 1;
      const double prev = cumulative_.back();
      if (!std::isfinite(prev)) {
        cumulative_.push_back(prev);
        continue;
      }
      const double a = static_cast<double>(j) * dx_;
      cumulative_.push_back(prev + piece(a, a + dx_, prev));
    }
    return cumulative_[k];
  }

  W w_;
  double dx_;
  mutable std::mutex mu_;
  mutable std::vector<double> cumulative_;
};

}  // namespace isoperim
