#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "etf/numeric_core.hpp"

namespace etf {

/// f(z) = integral from 0 to z of P(t) exp(Q(t)) dt + c
struct IntegralForm {
  Polynomial P;
  Polynomial Q;
  Complex c;
};

/// f(z) = P exp(Q) + Pt exp(Qt)
struct ExpSumForm {
  Polynomial P;
  Polynomial Q;
  Polynomial Pt;
  Polynomial Qt;
};

/// Knobs shared by evaluation and the region G = {|Re Q| >= |z|^delta, |z| > M}.
struct ModelOptions {
  double R_switch = 50.0;  // handoff radius from quadrature to the expansion
  double delta = 0.25;
  double M = 10.0;
};

struct FunctionSpec {
  std::variant<IntegralForm, ExpSumForm> form;
  ModelOptions options;
  std::string name;

  static FunctionSpec integral(Polynomial P, Polynomial Q, Complex c, std::string name = "");
  static FunctionSpec expsum(Polynomial P, Polynomial Q, Polynomial Pt, Polynomial Qt, std::string name = "");

  bool is_integral() const { return std::holds_alternative<IntegralForm>(form); }
  const IntegralForm& integral_form() const { return std::get<IntegralForm>(form); }
  const ExpSumForm& expsum_form() const { return std::get<ExpSumForm>(form); }
  const Polynomial& Q() const;
  /// Throws InvalidSpec when the family constraints are violated.
  void validate() const;
};

/// a = (27 pi^2 / 16)^(1/3), b = ln sqrt(a/3), computed in extended precision.
struct CubicExampleConstants {
  long double a;
  long double b;
};
CubicExampleConstants cubic_example_constants();

/// Named presets: "rees-exp" (lambda e^z), "hemke-cubic", "sinh-cubic".
FunctionSpec preset(std::string_view name, Complex lambda = 1.0);
std::vector<std::string> preset_names();
/// Parses the JSON config format; unknown keys are rejected.
FunctionSpec parse_spec_json(const std::string& text);
FunctionSpec load_spec_file(const std::string& path);
std::string spec_to_json(const FunctionSpec& spec);

struct SectorGeometry {
  int deg_q = 0;
  Complex q;
  std::vector<double> phi;
  std::vector<Complex> s;
  /// For the sum form: sectors along which f is unbounded.
  std::vector<bool> escapes;
  double delta = 0.25;
  double M = 10.0;
};

struct AsymptoticValueReport {
  struct Sector {
    double phi = 0.0;
    Complex value;
    bool escapes_to_infinity = false;
    double quadrature_error = 0.0;
    double tail_bound = 0.0;
    double radius = 0.0;  // length of the ray actually integrated
  };
  struct Group {
    Complex value;
    int multiplicity = 0;
  };
  std::vector<Sector> sectors;
  std::vector<Group> groups;  // finite values only
};

/// Critical directions phi_k = ((2k+1) pi - arg q) / deg Q, sorted in [0, 2 pi).
std::vector<double> sector_angles(const FunctionSpec& spec);
AsymptoticValueReport asymptotic_values(const FunctionSpec& spec, double R_max = 1e3, double tol = 1e-12);
/// Critical points with multiplicity.
std::vector<Complex> critical_points(const FunctionSpec& spec, double tol = 1e-12);

/// Index of the phi_k closest to arg z (ties go to the smaller index).
std::pair<int, Complex> nearest_asymptotic(const SectorGeometry& geom, const LogComplex& z);

struct GMembership {
  bool member = false;
  double margin = -kInf;  // log|Re Q(z)| - delta log|z|
  int re_q_sign = 0;
};
GMembership in_G(const SectorGeometry& geom, const FunctionSpec& spec, const LogComplex& z);

/// Result of the large-|z| evaluation.
struct LcEval {
  LogComplex value;
  /// ln(log|f|) when the value saturated (log|f| itself is not representable).
  std::optional<double> log_log_mod;
  /// The exponential correction is more than 40 nats below the asymptotic value.
  bool near_asymptotic = false;
  double correction_log_mod = -kInf;
};

/// A function spec bundled with its precomputed sector geometry.
/// All methods are const and safe to call concurrently.
class FunctionModel {
 public:
  explicit FunctionModel(FunctionSpec spec, double tol = 1e-12);

  const FunctionSpec& spec() const { return spec_; }
  const SectorGeometry& geometry() const { return geom_; }
  const AsymptoticValueReport& asymptotic_report() const { return report_; }
  double tol() const { return tol_; }
  double R_switch() const { return spec_.options.R_switch; }

  /// Ordinary complex value; throws Overflow when out of double range.
  Complex evaluate(Complex z) const;
  /// Accurate value at moderate |z| in log form (never overflows).
  LogComplex evaluate_moderate(Complex z) const;
  /// Asymptotic expansion for large |z| (direct formula for the sum form).
  LcEval evaluate_lc(const LogComplex& z) const;
  /// One orbit step: evaluate_moderate below R_switch, evaluate_lc above.
  LcEval step(const LogComplex& z) const;

  LogComplex derivative(const LogComplex& z) const;
  Complex derivative(Complex z) const;

  /// f(z) - s_bar(z) with s_bar the asymptotic value of the nearest sector,
  /// computed without cancellation. Integral form only.
  LogComplex remainder(Complex z) const;
  /// (f(z) - s_bar(z)) exp(-Q(z)).
  Complex scaled_remainder(Complex z) const;

  std::vector<Complex> critical_points() const;

 private:
  struct Descent;
  Descent descend(Complex z) const;
  LogComplex straight_value(Complex z) const;
  LogComplex expansion_value(Complex t) const;

  FunctionSpec spec_;
  double tol_;
  SectorGeometry geom_;
  AsymptoticValueReport report_;
  Polynomial dQ_;
  Polynomial d2Q_;
  double dominance_radius_ = 0.0;
  double max_abs_s_ = 0.0;
};

}  // namespace etf
