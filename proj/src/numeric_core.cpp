#include "etf/numeric_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace etf {

namespace {

// Largest log-modulus whose exponential is a finite double.
constexpr double kLogDoubleMax = 709.782712893384;

// e^{i a}, exact on the coordinate axes.
Complex unit(double a) {
  if (a == 0.0) return {1.0, 0.0};
  if (a == kPi) return {-1.0, 0.0};
  if (a == kPi / 2) return {0.0, 1.0};
  if (a == -kPi / 2) return {0.0, -1.0};
  return {std::cos(a), std::sin(a)};
}

void two_sum(double a, double b, double& s, double& err) {
  s = a + b;
  double bb = s - a;
  err = (a - (s - bb)) + (b - bb);
}

LogComplex make(double hi, double lo, double arg, bool arg_valid) {
  LogComplex r;
  if (std::isnan(hi) || std::isnan(lo) || std::isnan(arg)) {
    throw NumericError("NaN in log-modulus arithmetic");
  }
  if (hi == -kInf) return LogComplex::zero();
  double s = 0.0;
  double e = 0.0;
  two_sum(hi, lo, s, e);
  r.log_mod = s;
  r.log_mod_lo = std::isfinite(s) ? e : 0.0;
  r.arg = arg_valid ? normalize_angle(arg) : 0.0;
  r.arg_valid = arg_valid;
  if (r.log_mod >= kSaturationLogMod) {
    r.saturated = true;
    r.arg_valid = false;
    r.arg = 0.0;
  }
  return r;
}

}  // namespace

double normalize_angle(double a) {
  if (!std::isfinite(a)) throw NumericError("non-finite angle");
  double r = std::remainder(a, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  return r;
}

LogComplex LogComplex::polar(double log_mod, double arg) {
  return make(log_mod, 0.0, arg, true);
}

LogComplex LogComplex::from_complex(Complex w) {
  if (std::isnan(w.real()) || std::isnan(w.imag())) {
    throw NumericError("NaN passed to from_complex");
  }
  if (std::isinf(w.real()) || std::isinf(w.imag())) {
    throw Overflow("infinite value passed to from_complex");
  }
  if (w == Complex{}) return zero();
  double a = std::abs(w);
  double hi = std::log(a);
  // Recover the rounding of hi so exp(hi + lo) reproduces |w| closely.
  double lo = 0.0;
  if (std::fabs(hi) > 1.0) {
    double scaled = a * std::exp(-hi);
    if (std::isfinite(scaled) && scaled > 0.0) lo = std::log(scaled);
  }
  return make(hi, lo, std::arg(w), true);
}

LogComplex LogComplex::saturated_value(double log_mod) {
  LogComplex r;
  r.log_mod = std::max(log_mod, kSaturationLogMod);
  r.saturated = true;
  r.arg_valid = false;
  return r;
}

bool LogComplex::representable() const {
  return total_log_mod() < kLogDoubleMax;
}

Complex LogComplex::to_complex() const {
  if (is_zero()) return {};
  if (!representable()) throw Overflow("log_mod " + std::to_string(log_mod) + " exceeds double range");
  if (!arg_valid) throw ArgInvalid("argument of value is unknown");
  double r = std::exp(log_mod) * std::exp(log_mod_lo);
  if (log_mod > kLogDoubleMax - 1.0) r = std::exp(total_log_mod());
  return r * unit(arg);
}

LogComplex lc_mul(const LogComplex& a, const LogComplex& b) {
  if (a.is_zero() || b.is_zero()) return LogComplex::zero();
  double s = 0.0;
  double e = 0.0;
  two_sum(a.log_mod, b.log_mod, s, e);
  bool valid = a.arg_valid && b.arg_valid;
  LogComplex r = make(s, e + a.log_mod_lo + b.log_mod_lo, valid ? a.arg + b.arg : 0.0, valid);
  if (a.saturated || b.saturated) r.saturated = true;
  return r;
}

LogComplex lc_neg(const LogComplex& a) {
  LogComplex r = a;
  if (r.arg_valid) r.arg = normalize_angle(a.arg + kPi);
  return r;
}

LogComplex lc_div(const LogComplex& a, const LogComplex& b) {
  if (b.is_zero()) throw NumericError("division by zero");
  if (b.saturated) throw NumericError("division by a saturated value");
  LogComplex inv = b;
  inv.log_mod = -b.log_mod;
  inv.log_mod_lo = -b.log_mod_lo;
  inv.arg = b.arg_valid ? normalize_angle(-b.arg) : 0.0;
  inv.saturated = false;
  return lc_mul(a, inv);
}

LogComplex lc_add(const LogComplex& a, const LogComplex& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.saturated || b.saturated) {
    if (a.saturated && b.saturated) return a.log_mod >= b.log_mod ? a : b;
    return a.saturated ? a : b;
  }
  const LogComplex& big = a.log_mod >= b.log_mod ? a : b;
  const LogComplex& small = a.log_mod >= b.log_mod ? b : a;
  double gap = big.log_mod - small.log_mod;
  if (gap > kDominanceNats) return big;
  if (!big.arg_valid || !small.arg_valid) {
    // Magnitude bound only.
    return make(big.log_mod, big.log_mod_lo + std::log1p(std::exp(-gap)), 0.0, false);
  }
  double rel = std::exp(small.total_log_mod() - big.total_log_mod());
  Complex sum = unit(big.arg) + rel * unit(small.arg);
  if (sum == Complex{}) return LogComplex::zero();
  return make(big.log_mod, big.log_mod_lo + std::log(std::abs(sum)), std::arg(sum), true);
}

LogComplex lc_exp(const LogComplex& w) {
  if (w.is_zero()) return LogComplex::one();
  if (!w.arg_valid) throw DirectionUndecidable("exponent has no valid argument");
  double c = unit(w.arg).real();
  if (w.log_mod > kDirectExpLimit) {
    if (std::fabs(c) < kDirectionTieTol) {
      throw DirectionUndecidable("|cos(arg)| below tie tolerance at log_mod " + std::to_string(w.log_mod));
    }
    if (c > 0) return LogComplex::saturated_value();
    return LogComplex::zero();
  }
  double m = std::exp(w.total_log_mod());
  double re = m * c;
  double im = m * unit(w.arg).imag();
  if (re >= kSaturationLogMod) return LogComplex::saturated_value(re);
  // Beyond ~1e15 the imaginary part carries no information about the angle.
  bool valid = std::fabs(im) < 1e15;
  LogComplex r = make(re, 0.0, valid ? im : 0.0, valid);
  return r;
}

double log_real_part(const LogComplex& w) {
  if (w.is_zero() || !w.arg_valid) throw ArgInvalid("real part undefined");
  double c = std::cos(w.arg);
  if (c <= 0) throw NumericError("real part is not positive");
  return w.total_log_mod() + std::log(c);
}

// ---------------------------------------------------------------------------

Polynomial::Polynomial(std::vector<Complex> ascending) : coeffs_(std::move(ascending)) {
  finish();
}

Polynomial Polynomial::monomial(Complex c, int degree) {
  std::vector<Complex> v(static_cast<size_t>(degree) + 1);
  v.back() = c;
  return Polynomial(std::move(v));
}

void Polynomial::finish() {
  for (const auto& c : coeffs_) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
      throw NumericError("non-finite polynomial coefficient");
    }
  }
  while (!coeffs_.empty() && coeffs_.back() == Complex{}) coeffs_.pop_back();
  int n = degree();
  dominance_ = -kInf;
  root_radius_ = 0.0;
  if (n < 1) return;
  double lead = std::abs(coeffs_.back());
  double worst = -kInf;
  for (int k = 0; k < n; ++k) {
    double m = std::abs(coeffs_[static_cast<size_t>(k)]);
    if (m == 0.0) continue;
    double r = std::log(m / lead) / (n - k);
    worst = std::max(worst, r);
  }
  if (worst == -kInf) {  // pure monomial
    dominance_ = kDominanceNats;
    return;
  }
  root_radius_ = std::exp(worst);
  dominance_ = kDominanceNats + worst;
}

Complex Polynomial::coeff(int k) const {
  if (k < 0 || k > degree()) return {};
  return coeffs_[static_cast<size_t>(k)];
}

Complex Polynomial::operator()(Complex z) const { return poly_eval(*this, z); }

Polynomial Polynomial::derivative() const {
  if (degree() < 1) return {};
  std::vector<Complex> d(coeffs_.size() - 1);
  for (size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = static_cast<double>(k) * coeffs_[k];
  return Polynomial(std::move(d));
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  std::vector<Complex> v(std::max(a.coeffs_.size(), b.coeffs_.size()));
  for (size_t k = 0; k < v.size(); ++k) v[k] = a.coeff(static_cast<int>(k)) + b.coeff(static_cast<int>(k));
  return Polynomial(std::move(v));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + Complex(-1.0) * b; }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.is_zero() || b.is_zero()) return {};
  std::vector<Complex> v(a.coeffs_.size() + b.coeffs_.size() - 1);
  for (size_t i = 0; i < a.coeffs_.size(); ++i)
    for (size_t j = 0; j < b.coeffs_.size(); ++j) v[i + j] += a.coeffs_[i] * b.coeffs_[j];
  return Polynomial(std::move(v));
}

Polynomial operator*(Complex s, const Polynomial& a) {
  std::vector<Complex> v(a.coeffs_);
  for (auto& c : v) c *= s;
  return Polynomial(std::move(v));
}

Complex poly_eval(const Polynomial& p, Complex z) {
  auto c = p.coeffs();
  Complex acc{};
  for (size_t k = c.size(); k-- > 0;) acc = acc * z + c[k];
  return acc;
}

LogComplex poly_eval_lc(const Polynomial& p, const LogComplex& z) {
  int n = p.degree();
  if (n < 0) return LogComplex::zero();
  if (n == 0 || z.is_zero()) return LogComplex::from_complex(p.coeff(0));
  if (z.total_log_mod() > p.dominance_log_radius()) {
    LogComplex lead = LogComplex::from_complex(p.leading());
    LogComplex zn = z;
    zn.log_mod = n * z.log_mod;
    zn.log_mod_lo = n * z.log_mod_lo;
    zn.arg = z.arg_valid ? normalize_angle(n * z.arg) : 0.0;
    zn.saturated = z.saturated;
    LogComplex r = lc_mul(lead, zn);
    if (z.saturated) r.saturated = true;
    return r;
  }
  if (!z.arg_valid) throw ArgInvalid("polynomial argument has no valid angle");
  // Direct evaluation when every partial sum stays in range.
  double max_coeff = 0.0;
  for (const auto& c : p.coeffs()) max_coeff = std::max(max_coeff, std::abs(c));
  if (n * z.total_log_mod() + std::log(max_coeff) + std::log(n + 1.0) < 700.0) {
    return LogComplex::from_complex(poly_eval(p, z.to_complex()));
  }
  LogComplex acc = LogComplex::zero();
  auto c = p.coeffs();
  for (size_t k = c.size(); k-- > 0;) acc = lc_add(lc_mul(acc, z), LogComplex::from_complex(c[k]));
  return acc;
}

std::vector<Complex> poly_roots(const Polynomial& p, double tol) {
  int n = p.degree();
  if (n < 1) return {};
  auto c = p.coeffs();
  if (n == 1) return {-c[0] / c[1]};
  Polynomial dp = p.derivative();

  double radius = 0.0;
  for (int k = 0; k < n; ++k) radius = std::max(radius, std::abs(c[static_cast<size_t>(k)] / c[static_cast<size_t>(n)]));
  radius += 1.0;
  std::vector<Complex> z(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) z[static_cast<size_t>(j)] = std::polar(radius, kTwoPi * j / n + 0.4);

  auto accepted = [&](Complex r) {
    double m = std::max(1.0, std::abs(r));
    double scale = 0.0;
    double pw = 1.0;
    for (const auto& ck : c) {
      scale += std::abs(ck) * pw;
      pw *= m;
    }
    return std::abs(poly_eval(p, r)) <= tol * scale;
  };

  for (int iter = 0; iter < 200; ++iter) {
    bool moved = false;
    for (size_t j = 0; j < z.size(); ++j) {
      Complex pv = poly_eval(p, z[j]);
      if (pv == Complex{}) continue;
      Complex ratio = pv / poly_eval(dp, z[j]);
      Complex sum{};
      for (size_t k = 0; k < z.size(); ++k) {
        if (k != j) sum += 1.0 / (z[j] - z[k]);
      }
      Complex w = ratio / (1.0 - ratio * sum);
      if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) continue;
      z[j] -= w;
      if (std::abs(w) > 1e-15 * std::max(1.0, std::abs(z[j]))) moved = true;
    }
    if (std::all_of(z.begin(), z.end(), accepted)) return z;
    if (!moved) break;
  }
  throw NonConvergence("root finder did not converge for degree " + std::to_string(n));
}

}  // namespace etf
