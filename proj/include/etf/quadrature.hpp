#pragma once

#include <array>
#include <cmath>
#include <queue>
#include <vector>

#include "etf/numeric_core.hpp"

namespace etf {

struct QuadResult {
  Complex value;
  double error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double lo, hi;
  Complex value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

/// 15-point Kronrod rule on t in [lo, hi] of g(a + t (b - a)) (b - a).
template <class F>
Panel kronrod_panel(F& g, Complex a, Complex d, double lo, double hi) {
  double half = 0.5 * (hi - lo);
  double mid = 0.5 * (hi + lo);
  Complex fc = g(a + mid * d);
  Complex kron = fc * kKronrodWeights[7];
  Complex gauss = fc * kGaussWeights[3];
  double abs_sum = std::abs(fc) * kKronrodWeights[7];
  std::array<Complex, 15> vals{};
  vals[7] = fc;
  for (int j = 0; j < 7; ++j) {
    double x = half * kKronrodNodes[static_cast<size_t>(j)];
    Complex f1 = g(a + (mid - x) * d);
    Complex f2 = g(a + (mid + x) * d);
    vals[static_cast<size_t>(j)] = f1;
    vals[static_cast<size_t>(14 - j)] = f2;
    kron += (f1 + f2) * kKronrodWeights[static_cast<size_t>(j)];
    abs_sum += (std::abs(f1) + std::abs(f2)) * kKronrodWeights[static_cast<size_t>(j)];
    if (j % 2 == 1) gauss += (f1 + f2) * kGaussWeights[static_cast<size_t>(j / 2)];
  }
  Complex mean = kron * 0.5;
  double asc = std::abs(fc - mean) * kKronrodWeights[7];
  for (int j = 0; j < 7; ++j) {
    asc += (std::abs(vals[static_cast<size_t>(j)] - mean) + std::abs(vals[static_cast<size_t>(14 - j)] - mean)) *
           kKronrodWeights[static_cast<size_t>(j)];
  }
  double scale = std::abs(d) * half;
  kron *= d * half;
  gauss *= d * half;
  asc *= scale;
  abs_sum *= scale;
  double err = std::abs(kron - gauss);
  // Usual Kronrod error sharpening; the raw difference is far too pessimistic
  // on smooth integrands.
  if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
  err = std::max(err, 10.0 * 2.22e-16 * abs_sum);
  return {lo, hi, kron, err};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod quadrature of g along the segment [a, b].
/// Stops once the summed error is below max(abs_tol, rel_tol |I|).
template <class F>
QuadResult integrate_segment(F&& g, Complex a, Complex b, double abs_tol, double rel_tol,
                             int max_panels = 4000) {
  QuadResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  Complex d = b - a;
  std::priority_queue<detail::Panel> heap;
  detail::Panel first = detail::kronrod_panel(g, a, d, 0.0, 1.0);
  out.evaluations = 15;
  Complex total = first.value;
  double err = first.error;
  heap.push(first);
  int panels = 1;
  while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (panels >= max_panels) {
      out.value = total;
      out.error = err;
      out.converged = false;
      return out;
    }
    detail::Panel worst = heap.top();
    heap.pop();
    double mid = 0.5 * (worst.lo + worst.hi);
    detail::Panel left = detail::kronrod_panel(g, a, d, worst.lo, mid);
    detail::Panel right = detail::kronrod_panel(g, a, d, mid, worst.hi);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
    // Periodic resummation limits drift from the running updates.
    if (panels % 64 == 0) {
      auto copy = heap;
      total = {};
      err = 0.0;
      while (!copy.empty()) {
        total += copy.top().value;
        err += copy.top().error;
        copy.pop();
      }
    }
  }
  out.value = total;
  out.error = err;
  out.converged = true;
  return out;
}

}  // namespace etf
