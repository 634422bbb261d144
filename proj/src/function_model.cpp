#include "etf/function_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "etf/quadrature.hpp"

namespace etf {

namespace {

// Drop in Re Q (nats) after which the rest of a descent path is negligible.
constexpr double kDescentDrop = 60.0;
// Paths with |Q(z) - Q(0)| below this are integrated on the straight segment.
constexpr double kStraightLimit = 60.0;
constexpr int kMaxDescentSteps = 4000;
constexpr double kGroupTol = 1e-6;

double wrap_2pi(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

double angular_distance(double a, double b) {
  double d = std::fabs(wrap_2pi(a) - wrap_2pi(b));
  return std::min(d, kTwoPi - d);
}

std::vector<double> angles_for(const Polynomial& Q) {
  int n = Q.degree();
  std::vector<double> out;
  double aq = std::arg(Q.leading());
  for (int k = 1; k <= n; ++k) out.push_back(wrap_2pi(((2 * k + 1) * kPi - aq) / n));
  std::sort(out.begin(), out.end());
  return out;
}

bool decays_along(const Polynomial& Q, double phi) {
  return (Q.leading() * std::polar(1.0, Q.degree() * phi)).real() < 0.0;
}

struct StraightParts {
  Complex shift;  // Q at the sampled maximum of Re Q on [0, z]
  Complex integral;
};

// Integral of P e^{Q - shift} over [0, z].
StraightParts straight_parts(const IntegralForm& f, Complex z, double tol) {
  Complex shift = poly_eval(f.Q, Complex{});
  for (int j = 1; j <= 32; ++j) {
    Complex q = poly_eval(f.Q, z * (j / 32.0));
    if (q.real() > shift.real()) shift = q;
  }
  auto g = [&](Complex t) { return poly_eval(f.P, t) * std::exp(poly_eval(f.Q, t) - shift); };
  double abs_tol = shift.real() > -700.0 ? 0.5 * tol * std::exp(-shift.real()) : 0.0;
  QuadResult r = integrate_segment(g, Complex{}, z, abs_tol, 0.5 * tol, 20000);
  if (!r.converged) throw QuadratureError("quadrature on [0, z] did not converge");
  return {shift, r.value};
}

// Short paths are integrated directly; long ones, and targets where f is
// exponentially small, follow the steepest descent of Re Q.
// The straight path is also avoided when Re Q along it climbs well above
// both ends, since the result then cancels a much larger integrand.
bool use_straight(const IntegralForm& f, Complex z) {
  Complex q0 = poly_eval(f.Q, Complex{});
  Complex qz = poly_eval(f.Q, z);
  Complex dq = qz - q0;
  if (std::abs(dq) > kStraightLimit || dq.real() <= -25.0) return false;
  double top = std::max(q0.real(), qz.real());
  for (int j = 1; j < 32; ++j) {
    if (poly_eval(f.Q, z * (j / 32.0)).real() > top + 3.0) return false;
  }
  return true;
}

// Coefficients of Q(z + u) - Q(z) in powers of u.
Polynomial taylor_shift(const Polynomial& Q, Complex z) {
  std::vector<Complex> c(Q.coeffs().begin(), Q.coeffs().end());
  int n = static_cast<int>(c.size()) - 1;
  for (int k = 0; k < n; ++k)
    for (int j = n - 1; j >= k; --j) c[static_cast<size_t>(j)] += z * c[static_cast<size_t>(j) + 1];
  if (!c.empty()) c[0] = 0.0;
  return Polynomial(std::move(c));
}

LogComplex lc(Complex w) { return LogComplex::from_complex(w); }

struct PolyExp {
  LogComplex value;
  double log_re_q = -kInf;  // ln Re Q(z) when the value saturates
};

// e^{Q(z)}. Once |Q(z)| passes the saturation level its angle is dropped,
// but the sign of Re Q still follows from the leading term and arg z.
PolyExp exp_of_poly(const Polynomial& Q, const LogComplex& z) {
  PolyExp out;
  LogComplex q = poly_eval_lc(Q, z);
  if (q.saturated && !z.saturated && z.arg_valid && Q.degree() >= 1 && z.total_log_mod() > Q.dominance_log_radius()) {
    double c = std::cos(Q.degree() * z.arg + std::arg(Q.leading()));
    if (std::fabs(c) < kDirectionTieTol) throw DirectionUndecidable("Re Q(z) has no decidable sign");
    if (c < 0) return out;
    out.value = LogComplex::saturated_value();
    out.log_re_q = q.total_log_mod() + std::log(c);
    return out;
  }
  out.value = lc_exp(q);
  if (out.value.saturated) out.log_re_q = log_real_part(q);
  return out;
}

Polynomial parse_poly(const nlohmann::json& j, const char* key) {
  if (!j.is_array()) throw InvalidSpec(std::string(key) + " must be an array of coefficients");
  std::vector<Complex> c;
  for (const auto& e : j) {
    if (e.is_number()) {
      c.emplace_back(e.get<double>(), 0.0);
    } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
      c.emplace_back(e[0].get<double>(), e[1].get<double>());
    } else {
      throw InvalidSpec(std::string(key) + ": coefficient must be a number or [re, im]");
    }
  }
  return Polynomial(std::move(c));
}

nlohmann::json poly_json(const Polynomial& p) {
  auto out = nlohmann::json::array();
  for (const auto& c : p.coeffs()) out.push_back({c.real(), c.imag()});
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Specs

FunctionSpec FunctionSpec::integral(Polynomial P, Polynomial Q, Complex c, std::string name) {
  FunctionSpec s;
  s.form = IntegralForm{std::move(P), std::move(Q), c};
  s.name = std::move(name);
  return s;
}

FunctionSpec FunctionSpec::expsum(Polynomial P, Polynomial Q, Polynomial Pt, Polynomial Qt, std::string name) {
  FunctionSpec s;
  s.form = ExpSumForm{std::move(P), std::move(Q), std::move(Pt), std::move(Qt)};
  s.name = std::move(name);
  return s;
}

const Polynomial& FunctionSpec::Q() const {
  return is_integral() ? integral_form().Q : expsum_form().Q;
}

void FunctionSpec::validate() const {
  if (!(options.delta > 0.0 && options.delta < 1.0)) throw InvalidSpec("delta must lie in (0, 1)");
  if (!(options.M > 0.0)) throw InvalidSpec("M must be positive");
  if (!(options.R_switch > 0.0)) throw InvalidSpec("R_switch must be positive");
  if (is_integral()) {
    const auto& f = integral_form();
    if (f.P.is_zero()) throw InvalidSpec("P must not be the zero polynomial");
    if (f.Q.degree() < 1) throw InvalidSpec("Q must not be constant");
    if (!std::isfinite(f.c.real()) || !std::isfinite(f.c.imag())) throw InvalidSpec("c must be finite");
    return;
  }
  const auto& f = expsum_form();
  int n = f.Q.degree();
  if (n < 1 || f.Qt.degree() != n) throw InvalidSpec("Q and Qt must share a degree n >= 1");
  if (f.P.is_zero() || f.Pt.is_zero()) throw InvalidSpec("P and Pt must not be zero");
  // arg(qt) - arg(q) must be an odd multiple of pi/n.
  double units = wrap_2pi(std::arg(f.Qt.leading()) - std::arg(f.Q.leading())) / (kPi / n);
  double nearest = std::round(units);
  long m = static_cast<long>(nearest);
  bool close = std::fabs(units - nearest) <= 1e-9 / (kPi / n) + 1e-9;
  if (!close || m % 2 == 0) {
    throw InvalidSpec("leading coefficients of Q and Qt must differ in argument by an odd multiple of pi/n");
  }
}

CubicExampleConstants cubic_example_constants() {
  const long double pi = 3.141592653589793238462643383279502884L;
  long double a = std::cbrt(27.0L * pi * pi / 16.0L);
  long double b = std::log(std::sqrt(a / 3.0L));
  return {a, b};
}

std::vector<std::string> preset_names() { return {"rees-exp", "hemke-cubic", "sinh-cubic"}; }

FunctionSpec preset(std::string_view name, Complex lambda) {
  if (name == "rees-exp") {
    // lambda e^z = integral of lambda e^t plus lambda
    return FunctionSpec::integral(Polynomial::constant(lambda), Polynomial({0.0, 1.0}), lambda, "rees-exp");
  }
  if (name == "hemke-cubic") {
    auto k = cubic_example_constants();
    double a = static_cast<double>(k.a);
    double b = static_cast<double>(k.b);
    return FunctionSpec::integral(Polynomial({a, 0.0, 3.0}), Polynomial({b, a, 0.0, 1.0}),
                                  static_cast<double>(std::exp(k.b)), "hemke-cubic");
  }
  if (name == "sinh-cubic") {
    return FunctionSpec::expsum(Polynomial::constant(1.0), Polynomial::monomial(1.0, 3),
                                Polynomial::constant(-1.0), Polynomial::monomial(-1.0, 3), "sinh-cubic");
  }
  throw InvalidSpec("unknown preset '" + std::string(name) + "'");
}

FunctionSpec parse_spec_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidSpec(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidSpec("spec must be a JSON object");
  if (!j.contains("form") || !j["form"].is_string()) throw InvalidSpec("missing \"form\"");
  std::string form = j["form"];
  std::vector<std::string> allowed = {"form", "name", "R_switch", "delta", "M", "P", "Q"};
  if (form == "integral") {
    allowed.push_back("c");
  } else if (form == "expsum") {
    allowed.push_back("Pt");
    allowed.push_back("Qt");
  } else {
    throw InvalidSpec("form must be \"integral\" or \"expsum\"");
  }
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw InvalidSpec("unknown key \"" + item.key() + "\"");
    }
  }
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw InvalidSpec(std::string("missing \"") + key + "\"");
    return j[key];
  };
  FunctionSpec spec;
  if (form == "integral") {
    Complex c{};
    if (j.contains("c")) {
      const auto& cj = j["c"];
      if (cj.is_number()) {
        c = cj.get<double>();
      } else if (cj.is_array() && cj.size() == 2 && cj[0].is_number() && cj[1].is_number()) {
        c = {cj[0].get<double>(), cj[1].get<double>()};
      } else {
        throw InvalidSpec("c must be a number or [re, im]");
      }
    }
    spec = FunctionSpec::integral(parse_poly(need("P"), "P"), parse_poly(need("Q"), "Q"), c);
  } else {
    spec = FunctionSpec::expsum(parse_poly(need("P"), "P"), parse_poly(need("Q"), "Q"), parse_poly(need("Pt"), "Pt"),
                                parse_poly(need("Qt"), "Qt"));
  }
  auto number = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) throw InvalidSpec(std::string(key) + " must be a number");
    out = j[key].get<double>();
  };
  number("R_switch", spec.options.R_switch);
  number("delta", spec.options.delta);
  number("M", spec.options.M);
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw InvalidSpec("name must be a string");
    spec.name = j["name"];
  }
  spec.validate();
  return spec;
}

FunctionSpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec_json(ss.str());
}

std::string spec_to_json(const FunctionSpec& spec) {
  nlohmann::json j;
  if (spec.is_integral()) {
    const auto& f = spec.integral_form();
    j["form"] = "integral";
    j["P"] = poly_json(f.P);
    j["Q"] = poly_json(f.Q);
    j["c"] = {f.c.real(), f.c.imag()};
  } else {
    const auto& f = spec.expsum_form();
    j["form"] = "expsum";
    j["P"] = poly_json(f.P);
    j["Q"] = poly_json(f.Q);
    j["Pt"] = poly_json(f.Pt);
    j["Qt"] = poly_json(f.Qt);
  }
  if (!spec.name.empty()) j["name"] = spec.name;
  j["R_switch"] = spec.options.R_switch;
  j["delta"] = spec.options.delta;
  j["M"] = spec.options.M;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Geometry

std::vector<double> sector_angles(const FunctionSpec& spec) {
  if (spec.is_integral()) return angles_for(spec.integral_form().Q);
  auto a = angles_for(spec.expsum_form().Q);
  auto b = angles_for(spec.expsum_form().Qt);
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  return a;
}

AsymptoticValueReport asymptotic_values(const FunctionSpec& spec, double R_max, double tol) {
  spec.validate();
  AsymptoticValueReport rep;
  if (!spec.is_integral()) {
    const auto& f = spec.expsum_form();
    for (double phi : sector_angles(spec)) {
      AsymptoticValueReport::Sector s;
      s.phi = phi;
      s.escapes_to_infinity = !(decays_along(f.Q, phi) && decays_along(f.Qt, phi));
      rep.sectors.push_back(s);
    }
  } else {
    const auto& f = spec.integral_form();
    Polynomial dQ = f.Q.derivative();
    for (double phi : sector_angles(spec)) {
      Complex u = std::polar(1.0, phi);
      // Grow R until the tail estimate |P| e^{Re Q} / (-d/dr Re Q) is small.
      double R = 1.0;
      double tail = kInf;
      while (true) {
        Complex t = R * u;
        double slope = -(poly_eval(dQ, t) * u).real();
        double mag = std::abs(poly_eval(f.P, t)) * std::exp(poly_eval(f.Q, t).real());
        if (slope > 0.0) {
          // Factor 2 covers the polynomial growth of P beyond R.
          tail = 2.0 * mag / slope * (1.0 + f.P.degree() / (R * slope));
          if (tail <= 0.5 * tol) break;
        }
        R *= 1.25;
        if (R > R_max) {
          throw TailNotDecaying("Re Q does not decay along the ray at angle " + std::to_string(phi));
        }
      }
      auto g = [&](Complex t) { return poly_eval(f.P, t) * std::exp(poly_eval(f.Q, t)); };
      QuadResult r = integrate_segment(g, Complex{}, R * u, 0.5 * tol, 0.5 * tol, 20000);
      if (!r.converged) throw QuadratureError("quadrature along asymptotic ray did not converge");
      AsymptoticValueReport::Sector s;
      s.phi = phi;
      s.value = f.c + r.value;
      s.quadrature_error = r.error;
      s.tail_bound = tail;
      s.radius = R;
      rep.sectors.push_back(s);
    }
  }
  for (const auto& s : rep.sectors) {
    if (s.escapes_to_infinity) continue;
    auto it = std::find_if(rep.groups.begin(), rep.groups.end(),
                           [&](const auto& g) { return std::abs(g.value - s.value) <= kGroupTol; });
    if (it == rep.groups.end()) {
      rep.groups.push_back({s.value, 1});
    } else {
      ++it->multiplicity;
    }
  }
  return rep;
}

std::vector<Complex> critical_points(const FunctionSpec& spec, double tol) {
  if (spec.is_integral()) return poly_roots(spec.integral_form().P, tol);
  const auto& f = spec.expsum_form();
  Polynomial sum = f.Q + f.Qt;
  double scale = 0.0;
  for (const auto& c : f.Q.coeffs()) scale = std::max(scale, std::abs(c));
  for (const auto& c : sum.coeffs()) {
    if (std::abs(c) > 1e-14 * scale) throw Unsupported("critical points need Qt = -Q for the sum form");
  }
  // f' = A e^Q + B e^{-Q}; keep the zeros shared by A and B.
  Polynomial A = f.P.derivative() + f.P * f.Q.derivative();
  Polynomial B = f.Pt.derivative() + f.Pt * f.Qt.derivative();
  std::vector<Complex> out;
  if (A.degree() < 1) return out;
  double bscale = 0.0;
  for (const auto& c : B.coeffs()) bscale += std::abs(c);
  for (Complex r : poly_roots(A, tol)) {
    double m = std::max(1.0, std::abs(r));
    if (std::abs(poly_eval(B, r)) <= std::sqrt(tol) * bscale * std::pow(m, B.degree())) out.push_back(r);
  }
  return out;
}

std::pair<int, Complex> nearest_asymptotic(const SectorGeometry& geom, const LogComplex& z) {
  if (!z.arg_valid) throw ArgInvalid("nearest_asymptotic needs a valid argument");
  int best = 0;
  double best_d = kInf;
  for (size_t k = 0; k < geom.phi.size(); ++k) {
    double d = angular_distance(z.arg, geom.phi[k]);
    if (d < best_d - 1e-12) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  Complex s = best < static_cast<int>(geom.s.size()) ? geom.s[static_cast<size_t>(best)] : Complex{};
  return {best, s};
}

GMembership in_G(const SectorGeometry& geom, const FunctionSpec& spec, const LogComplex& z) {
  GMembership out;
  if (z.is_zero() || !std::isfinite(z.log_mod)) return out;
  LogComplex q = poly_eval_lc(spec.Q(), z);
  if (q.is_zero() || !q.arg_valid) return out;
  double c = std::cos(q.arg);
  out.re_q_sign = c > 0 ? 1 : (c < 0 ? -1 : 0);
  if (c == 0.0) return out;
  out.margin = q.total_log_mod() + std::log(std::fabs(c)) - geom.delta * z.total_log_mod();
  out.member = out.margin >= 0.0 && z.total_log_mod() > std::log(geom.M);
  return out;
}

// ---------------------------------------------------------------------------
// Model

struct FunctionModel::Descent {
  bool ok = false;
  bool valley = false;
  int valley_index = 0;
  Complex Qz;
  Complex integral;  // integral from t_end to z of P e^{Q - Q(z)}
  Complex t_end;
};

FunctionModel::FunctionModel(FunctionSpec spec, double tol) : spec_(std::move(spec)), tol_(tol) {
  spec_.validate();
  const Polynomial& Q = spec_.Q();
  geom_.deg_q = Q.degree();
  geom_.q = Q.leading();
  geom_.delta = spec_.options.delta;
  geom_.M = spec_.options.M;
  report_ = asymptotic_values(spec_, 1e3, tol_);
  for (const auto& s : report_.sectors) {
    geom_.phi.push_back(s.phi);
    geom_.escapes.push_back(s.escapes_to_infinity);
    // Snap to the group representative so equal values compare bitwise equal.
    Complex v = s.value;
    for (const auto& g : report_.groups) {
      if (!s.escapes_to_infinity && std::abs(g.value - v) <= kGroupTol) {
        v = g.value;
        break;
      }
    }
    geom_.s.push_back(v);
    max_abs_s_ = std::max(max_abs_s_, std::abs(v));
  }
  dQ_ = Q.derivative();
  d2Q_ = dQ_.derivative();
  dominance_radius_ = std::max(1.0, 4.0 * Q.root_radius());
}

FunctionModel::Descent FunctionModel::descend(Complex z) const {
  const auto& f = spec_.integral_form();
  Descent out;
  out.Qz = poly_eval(f.Q, z);
  const double growth_floor = 45.0 + std::log1p(2.0 * max_abs_s_);
  double scale = std::abs(poly_eval(f.P, z)) / std::max(std::abs(poly_eval(dQ_, z)), 1e-300);
  if (scale == 0.0) scale = 1e-300;
  // Work in u = t - z: Q(z + u) - Q(z) is then free of cancellation noise
  // near z, where the integrand is largest.
  Polynomial dz = taylor_shift(f.Q, z);
  auto g = [&](Complex u) { return poly_eval(f.P, z + u) * std::exp(poly_eval(dz, u)); };

  Complex u{};
  Complex acc{};
  Complex t = z;
  for (int step = 0; step < kMaxDescentSteps; ++step) {
    t = z + u;
    Complex dq = poly_eval(dQ_, t);
    double adq = std::abs(dq);
    if (adq == 0.0) return out;
    double drop = poly_eval(dz, u).real();
    double reQ = out.Qz.real() + drop;
    bool far = std::abs(t) >= dominance_radius_;
    if (drop < -kDescentDrop && far) {
      if (reQ < -45.0) {
        out.valley = true;
        out.valley_index = nearest_asymptotic(geom_, LogComplex::from_complex(t)).first;
        break;
      }
      if (reQ > growth_floor) break;
    }
    double curv = std::abs(poly_eval(d2Q_, t));
    double h = 0.5 * (1.0 + std::abs(t));
    if (curv > 0.0) h = std::min(h, 0.2 * adq / curv);
    bool negligible = drop < -kDescentDrop - 10.0;
    h = std::min(h, (negligible ? std::max(8.0, 0.25 * std::fabs(reQ)) : 6.0) / adq);
    Complex next = u - h * std::conj(dq) / adq;
    if (!negligible) {
      QuadResult r = integrate_segment(g, u, next, 0.2 * tol_ * scale, 0.2 * tol_, 2000);
      if (!r.converged) return out;
      acc += r.value;
    }
    u = next;
    if (step + 1 == kMaxDescentSteps) return out;
  }
  out.ok = true;
  out.t_end = t;
  out.integral = -acc;
  return out;
}

LogComplex FunctionModel::straight_value(Complex z) const {
  const auto& f = spec_.integral_form();
  StraightParts p = straight_parts(f, z, tol_);
  return lc_add(lc(f.c), lc_mul(lc_exp(lc(p.shift)), lc(p.integral)));
}

LogComplex FunctionModel::expansion_value(Complex t) const {
  const auto& f = spec_.integral_form();
  LogComplex lt = lc(t);
  Complex s = nearest_asymptotic(geom_, lt).second;
  LogComplex term = lc_div(lc_mul(lc(poly_eval(f.P, t)), lc_exp(lc(poly_eval(f.Q, t)))), lc(poly_eval(dQ_, t)));
  return lc_add(lc(s), term);
}

LogComplex FunctionModel::evaluate_moderate(Complex z) const {
  if (!spec_.is_integral()) {
    const auto& f = spec_.expsum_form();
    LogComplex a = lc_mul(lc(poly_eval(f.P, z)), lc_exp(lc(poly_eval(f.Q, z))));
    LogComplex b = lc_mul(lc(poly_eval(f.Pt, z)), lc_exp(lc(poly_eval(f.Qt, z))));
    return lc_add(a, b);
  }
  const auto& f = spec_.integral_form();
  // A straight path that stalls at the roundoff floor falls back to descent.
  if (use_straight(f, z)) {
    try {
      return straight_value(z);
    } catch (const QuadratureError&) {
    }
  }
  Descent d = descend(z);
  if (!d.ok) return straight_value(z);
  LogComplex main = lc_mul(lc_exp(lc(d.Qz)), lc(d.integral));
  if (d.valley) return lc_add(lc(geom_.s[static_cast<size_t>(d.valley_index)]), main);
  return lc_add(expansion_value(d.t_end), main);
}

Complex FunctionModel::evaluate(Complex z) const { return evaluate_moderate(z).to_complex(); }

LcEval FunctionModel::evaluate_lc(const LogComplex& z) const {
  LcEval out;
  if (!spec_.is_integral()) {
    const auto& f = spec_.expsum_form();
    PolyExp e1 = exp_of_poly(f.Q, z), e2 = exp_of_poly(f.Qt, z);
    LogComplex a = lc_mul(poly_eval_lc(f.P, z), e1.value);
    LogComplex b = lc_mul(poly_eval_lc(f.Pt, z), e2.value);
    out.value = lc_add(a, b);
    if (out.value.saturated) {
      double ll = -kInf;
      if (a.saturated) ll = std::max(ll, e1.log_re_q);
      if (b.saturated) ll = std::max(ll, e2.log_re_q);
      out.log_log_mod = ll;
    }
    return out;
  }
  const auto& f = spec_.integral_form();
  Complex s = nearest_asymptotic(geom_, z).second;
  LogComplex q = poly_eval_lc(f.Q, z);
  PolyExp pe = exp_of_poly(f.Q, z);
  LogComplex e = pe.value;
  LogComplex ls = lc(s);
  if (e.saturated) {
    out.value = e;
    out.log_log_mod = pe.log_re_q;
    return out;
  }
  if (e.is_zero()) {
    // Re Q is hugely negative; the correction's log-modulus is Re Q itself.
    out.correction_log_mod = q.saturated ? -kInf : -std::exp(std::min(q.total_log_mod(), 709.0)) * std::fabs(std::cos(q.arg));
    out.near_asymptotic = !ls.is_zero();
    out.value = ls;
    return out;
  }
  LogComplex term = lc_div(lc_mul(poly_eval_lc(f.P, z), e), poly_eval_lc(dQ_, z));
  out.correction_log_mod = term.total_log_mod();
  out.near_asymptotic = !ls.is_zero() && out.correction_log_mod < ls.log_mod - kDominanceNats;
  out.value = lc_add(ls, term);
  return out;
}

LcEval FunctionModel::step(const LogComplex& z) const {
  if (z.saturated) throw ArgInvalid("cannot iterate a saturated value");
  if (spec_.is_integral() && z.total_log_mod() <= std::log(R_switch())) {
    LcEval out;
    out.value = evaluate_moderate(z.to_complex());
    if (out.value.saturated) out.log_log_mod = std::log(out.value.log_mod);
    return out;
  }
  return evaluate_lc(z);
}

LogComplex FunctionModel::derivative(const LogComplex& z) const {
  if (spec_.is_integral()) {
    const auto& f = spec_.integral_form();
    return lc_mul(poly_eval_lc(f.P, z), exp_of_poly(f.Q, z).value);
  }
  const auto& f = spec_.expsum_form();
  Polynomial A = f.P.derivative() + f.P * f.Q.derivative();
  Polynomial B = f.Pt.derivative() + f.Pt * f.Qt.derivative();
  return lc_add(lc_mul(poly_eval_lc(A, z), exp_of_poly(f.Q, z).value),
                lc_mul(poly_eval_lc(B, z), exp_of_poly(f.Qt, z).value));
}

Complex FunctionModel::derivative(Complex z) const { return derivative(lc(z)).to_complex(); }

LogComplex FunctionModel::remainder(Complex z) const {
  if (!spec_.is_integral()) throw Unsupported("remainder is defined for the integral form");
  const auto& f = spec_.integral_form();
  LogComplex lz = lc(z);
  Complex s = lz.is_zero() ? geom_.s.front() : nearest_asymptotic(geom_, lz).second;
  Complex Qz = poly_eval(f.Q, z);
  // Below the base level the straight path would subtract two values near
  // c - s; a valley descent gives f - s directly.
  if (Qz.real() < poly_eval(f.Q, Complex{}).real()) {
    Descent d = descend(z);
    if (d.ok && d.valley && geom_.s[static_cast<size_t>(d.valley_index)] == s)
      return lc_mul(lc_exp(lc(d.Qz)), lc(d.integral));
  }
  if (use_straight(f, z)) {
    try {
      StraightParts p = straight_parts(f, z, tol_);
      return lc_add(lc(f.c - s), lc_mul(lc_exp(lc(p.shift)), lc(p.integral)));
    } catch (const QuadratureError&) {
    }
  }
  Descent d = descend(z);
  if (d.ok) {
    LogComplex main = lc_mul(lc_exp(lc(d.Qz)), lc(d.integral));
    if (d.valley) return lc_add(lc(geom_.s[static_cast<size_t>(d.valley_index)] - s), main);
    LogComplex end = lc_div(lc_mul(lc(poly_eval(f.P, d.t_end)), lc_exp(lc(poly_eval(f.Q, d.t_end)))),
                            lc(poly_eval(dQ_, d.t_end)));
    Complex s_end = nearest_asymptotic(geom_, lc(d.t_end)).second;
    return lc_add(lc_add(lc(s_end - s), end), main);
  }
  StraightParts p = straight_parts(f, z, tol_);
  return lc_add(lc(f.c - s), lc_mul(lc_exp(lc(p.shift)), lc(p.integral)));
}

Complex FunctionModel::scaled_remainder(Complex z) const {
  Complex Qz = poly_eval(spec_.integral_form().Q, z);
  return lc_div(remainder(z), lc_exp(lc(Qz))).to_complex();
}

std::vector<Complex> FunctionModel::critical_points() const { return etf::critical_points(spec_, tol_); }

}  // namespace etf
