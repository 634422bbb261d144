#pragma once

#include <complex>
#include <limits>
#include <span>
#include <vector>

#include "etf/errors.hpp"

namespace etf {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// log_mod at or above which a value counts as escaped.
inline constexpr double kSaturationLogMod = 1e6;
/// Operands further apart than this (in nats) do not affect a sum.
inline constexpr double kDominanceNats = 40.0;
/// Largest log-modulus of an exponent that is still evaluated directly.
inline constexpr double kDirectExpLimit = 700.0;
/// |cos(arg)| below this makes the growth direction of exp undecidable.
inline constexpr double kDirectionTieTol = 1e-12;

/// Maps an angle into (-pi, pi].
double normalize_angle(double a);

/// Complex number stored as log|w| and arg w.
///
/// log_mod is kept as an unevaluated sum log_mod + log_mod_lo so that values
/// near the ends of the double range survive a round trip.
struct LogComplex {
  double log_mod = -kInf;
  double arg = 0.0;
  bool arg_valid = false;
  bool saturated = false;
  double log_mod_lo = 0.0;

  static LogComplex zero() { return {}; }
  static LogComplex one() { return polar(0.0, 0.0); }
  static LogComplex polar(double log_mod, double arg);
  static LogComplex from_complex(Complex w);
  /// Marker for a value known only to exceed the saturation threshold.
  static LogComplex saturated_value(double log_mod = kSaturationLogMod);

  bool is_zero() const { return log_mod == -kInf; }
  double total_log_mod() const { return log_mod + log_mod_lo; }
  /// True when to_complex() would not overflow.
  bool representable() const;
  /// Underflows quietly to 0; throws Overflow past the double range.
  Complex to_complex() const;
};

LogComplex lc_mul(const LogComplex& a, const LogComplex& b);
LogComplex lc_div(const LogComplex& a, const LogComplex& b);
LogComplex lc_neg(const LogComplex& a);
LogComplex lc_add(const LogComplex& a, const LogComplex& b);
LogComplex lc_exp(const LogComplex& w);

/// ln(Re w) for Re w > 0; usable when Re w itself overflows.
double log_real_part(const LogComplex& w);

/// Dense polynomial with ascending coefficients and no trailing zeros.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<Complex> ascending);
  static Polynomial monomial(Complex c, int degree);
  static Polynomial constant(Complex c) { return monomial(c, 0); }

  /// -1 for the zero polynomial.
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.empty(); }
  std::span<const Complex> coeffs() const { return coeffs_; }
  Complex coeff(int k) const;
  Complex leading() const { return coeffs_.empty() ? Complex{} : coeffs_.back(); }

  Complex operator()(Complex z) const;
  Polynomial derivative() const;

  /// log|z| beyond which the leading term dominates every other term by
  /// at least kDominanceNats.
  double dominance_log_radius() const { return dominance_; }
  /// max_k |c_k / c_n|^{1/(n-k)}, a bound on the size of the roots.
  double root_radius() const { return root_radius_; }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(Complex s, const Polynomial& a);
  friend bool operator==(const Polynomial& a, const Polynomial& b) = default;

 private:
  void finish();

  std::vector<Complex> coeffs_;
  double dominance_ = -kInf;
  double root_radius_ = 0.0;
};

Complex poly_eval(const Polynomial& p, Complex z);
LogComplex poly_eval_lc(const Polynomial& p, const LogComplex& z);

/// All roots with multiplicity (Aberth iteration). Every returned root r
/// satisfies |p(r)| <= tol * sum_k |c_k| max(1,|r|)^k.
std::vector<Complex> poly_roots(const Polynomial& p, double tol = 1e-12);

}  // namespace etf
