#include <doctest.h>

#include <cmath>
#include <complex>

#include "etf/orbit_engine.hpp"

using namespace etf;

namespace {

const FunctionModel& cubic() {
  static FunctionModel m(preset("hemke-cubic"));
  return m;
}

// f = exp(Q) exactly for the cubic example, since P = Q' and c = exp(Q(0)).
long double cubic_q(long double x) {
  auto k = cubic_example_constants();
  return x * x * x + k.a * x + k.b;
}

Complex critical_plus() {
  return {0.0, static_cast<double>(std::sqrt(cubic_example_constants().a / 3.0L))};
}

OrbitRecord record_from_log_mods(const std::vector<double>& lm) {
  OrbitRecord r;
  for (double x : lm) r.points.push_back(LogComplex::polar(x, 0.0));
  return r;
}

}  // namespace

TEST_CASE("orbit of 0 under the cubic example escapes") {
  auto rec = iterate_orbit(cubic(), Complex(0.0), 50);
  REQUIRE(rec.points.size() == 5);
  CHECK(rec.points[0].is_zero());
  long double z1 = std::exp(cubic_q(0.0L));
  long double z2 = std::exp(cubic_q(z1));
  long double lm3 = cubic_q(z2);
  CHECK(rec.points[1].to_complex().real() == doctest::Approx(static_cast<double>(z1)).epsilon(1e-13));
  CHECK(rec.points[2].to_complex().real() == doctest::Approx(static_cast<double>(z2)).epsilon(1e-12));
  CHECK(rec.points[3].total_log_mod() == doctest::Approx(static_cast<double>(lm3)).epsilon(1e-12));
  CHECK(rec.points[3].arg == 0.0);
  CHECK(rec.points[4].saturated);
  CHECK(rec.stop_reason == StopReason::Saturated);

  REQUIRE(std::holds_alternative<ExponentialEscape>(rec.classification));
  REQUIRE(rec.delta_hat);
  double d2 = static_cast<double>(std::log(lm3) / std::log(z2));
  // The saturated step contributes ln Re Q(z3) / log|z3| = 3 + O(1e-4).
  CHECK(*rec.delta_hat == doctest::Approx(std::min(d2, 3.0)).epsilon(1e-3));
  CHECK(std::fabs(*rec.delta_hat - 3.0) < 0.1);
}

TEST_CASE("critical points of the cubic example are superattracting fixed points") {
  for (Complex z : {critical_plus(), std::conj(critical_plus())}) {
    CHECK(std::abs(cubic().evaluate(z) - z) < 1e-9);
    CHECK(std::abs(cubic().derivative(z)) < 1e-12);
    auto rec = iterate_orbit(cubic(), z, 50);
    CHECK(rec.stop_reason == StopReason::CycleFound);
    auto* a = std::get_if<AttractedToCycle>(&rec.classification);
    REQUIRE(a);
    CHECK(a->period == 1);
    CHECK(a->multiplier_log_mod < -20);
    CHECK_FALSE(rec.delta_hat);
  }
}

TEST_CASE("nearby points fall into the superattracting fixed point") {
  auto rec = iterate_orbit(cubic(), critical_plus() + 1e-3, 50);
  auto* a = std::get_if<AttractedToCycle>(&rec.classification);
  REQUIRE(a);
  CHECK(a->period == 1);
  CHECK(a->multiplier_log_mod < 0);
  CHECK(std::abs(rec.points.back().to_complex() - critical_plus()) < 1e-9);
  auto info = detect_cycle(rec, &cubic());
  CHECK(info.found);
  CHECK(info.period == 1);
  REQUIRE(info.multiplier_log_mod);
  CHECK(*info.multiplier_log_mod < 0);
}

TEST_CASE("sinh example fixes 0") {
  FunctionModel m(preset("sinh-cubic"));
  auto rec = iterate_orbit(m, Complex(0.0), 20);
  REQUIRE(rec.points.size() == 2);
  CHECK(rec.points[1].is_zero());
  CHECK(rec.stop_reason == StopReason::CycleFound);
  // f'(0) = 0, so the fixed point is superattracting.
  auto* a = std::get_if<AttractedToCycle>(&rec.classification);
  REQUIRE(a);
  CHECK(a->period == 1);
  auto info = detect_cycle(rec);
  CHECK(info.preperiod == 0);
  CHECK(info.period == 1);
}

TEST_CASE("classify_escape examples") {
  std::vector<double> linear;
  for (int k = 10; k <= 400; ++k) linear.push_back(k);
  auto [esc, d] = classify_escape(record_from_log_mods(linear));
  CHECK_FALSE(esc);
  CHECK(d < 0.05);

  // exp iterated from 1: log|z_n| = 0, 1, e, e^e, ... computed in long double.
  std::vector<double> tower;
  long double x = 0.0L;
  for (int i = 0; i < 5; ++i) {
    tower.push_back(static_cast<double>(x));
    x = std::exp(x);
  }
  auto [esc2, d2] = classify_escape(record_from_log_mods(tower));
  CHECK(esc2);
  CHECK(d2 == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(classify_escape(record_from_log_mods({0.0, 1.0, 5.0, 6.0})), InsufficientTail);
  CHECK_THROWS_AS(classify_escape(record_from_log_mods({50.0, 60.0, 1.0})), InsufficientTail);
}

TEST_CASE("detect_cycle on plain sequences") {
  Complex s(0.3, -1.2);
  auto c = detect_cycle(std::vector<Complex>(6, s));
  CHECK(c.found);
  CHECK(c.period == 1);
  CHECK(c.preperiod == 0);

  Complex a(1, 2), b(-3, 0.5);
  c = detect_cycle(std::vector<Complex>{a, b, a, b, a, b});
  CHECK(c.found);
  CHECK(c.period == 2);
  CHECK(c.preperiod == 0);

  c = detect_cycle(std::vector<Complex>{5.0, 4.0, a, b, Complex(7, 7), a, b, Complex(7, 7)});
  CHECK(c.found);
  CHECK(c.period == 3);
  CHECK(c.preperiod == 2);

  // Relative tolerance: a 1e-12 perturbation at modulus 1e3 still repeats.
  c = detect_cycle(std::vector<Complex>{1e3, 1e3 + 1e-9});
  CHECK(c.found);
  c = detect_cycle(std::vector<Complex>{1.0, 2.0, 3.0, 4.0});
  CHECK_FALSE(c.found);
  c = detect_cycle(std::vector<Complex>{1.0, 2.0, 1.0}, 1e-9, 1);
  CHECK_FALSE(c.found);
}

TEST_CASE("singular orbits of lambda exp") {
  FunctionModel m2pi(preset("rees-exp", Complex(0.0, kTwoPi)));
  auto rep = singular_orbit_report(m2pi, 100);
  REQUIRE(rep.orbits.size() == 1);
  CHECK(rep.orbits[0].role == SingularRole::Asymptotic);
  CHECK(std::abs(rep.orbits[0].value) < 1e-8);
  auto* p = std::get_if<Preperiodic>(&rep.orbits[0].record.classification);
  REQUIRE(p);
  CHECK(p->preperiod == 1);
  CHECK(p->period == 1);
  CHECK(std::abs(rep.orbits[0].record.points[1].to_complex() - Complex(0, kTwoPi)) < 1e-12);

  FunctionModel mexp(preset("rees-exp"));
  rep = singular_orbit_report(mexp, 100);
  REQUIRE(rep.orbits.size() == 1);
  auto* e = std::get_if<ExponentialEscape>(&rep.orbits[0].record.classification);
  REQUIRE(e);
  CHECK(std::fabs(e->delta_hat - 1.0) < 0.05);
}

TEST_CASE("singular report of the cubic example") {
  auto rep = singular_orbit_report(cubic(), 100);
  int asym = 0, crit = 0;
  for (const auto& o : rep.orbits) {
    if (o.role == SingularRole::Asymptotic) {
      asym += o.multiplicity;
      CHECK(std::holds_alternative<ExponentialEscape>(o.record.classification));
    } else {
      crit += o.multiplicity;
      CHECK(std::holds_alternative<AttractedToCycle>(o.record.classification));
      CHECK(std::abs(o.value - o.singular_point) < 1e-9);
      CHECK(o.on_cycle);
    }
  }
  CHECK(asym == 3);
  CHECK(crit == 2);
}

TEST_CASE("recurrence verdicts") {
  auto v = recurrence_verdict(singular_orbit_report(cubic(), 100));
  CHECK(v.verdict == Verdict::NotRecurrent);
  bool flagged = false;
  for (const auto& line : v.justification) flagged |= line == "mixed: attracted critical values";
  CHECK(flagged);
  CHECK(v.numerical_evidence_only);

  FunctionModel m2pi(preset("rees-exp", Complex(0.0, kTwoPi)));
  CHECK(recurrence_verdict(singular_orbit_report(m2pi, 100)).verdict == Verdict::RecurrentErgodic);
  FunctionModel mexp(preset("rees-exp"));
  CHECK(recurrence_verdict(singular_orbit_report(mexp, 100)).verdict == Verdict::NotRecurrent);
  FunctionModel msinh(preset("sinh-cubic"));
  CHECK(recurrence_verdict(singular_orbit_report(msinh, 100)).verdict == Verdict::Inconclusive);
}

TEST_CASE("escape certification is stable under a larger budget") {
  for (Complex z0 : {Complex(0.0), Complex(0.4, 0.1), Complex(1.5, -0.3), Complex(-0.2, 1.9)}) {
    auto a = iterate_orbit(cubic(), z0, 40);
    auto b = iterate_orbit(cubic(), z0, 80);
    if (std::holds_alternative<ExponentialEscape>(a.classification)) {
      CHECK(std::holds_alternative<ExponentialEscape>(b.classification));
      CHECK(*a.delta_hat == *b.delta_hat);
    }
    // Deterministic: identical inputs give identical points.
    auto c = iterate_orbit(cubic(), z0, 40);
    REQUIRE(c.points.size() == a.points.size());
    for (size_t i = 0; i < a.points.size(); ++i) {
      CHECK(c.points[i].log_mod == a.points[i].log_mod);
      CHECK(c.points[i].arg == a.points[i].arg);
    }
  }
}

TEST_CASE("exp orbits give delta_hat near 1") {
  FunctionModel mexp(preset("rees-exp"));
  for (double x0 : {0.5, 1.0, 2.0, 3.0}) {
    auto rec = iterate_orbit(mexp, Complex(x0, 0.0), 50);
    REQUIRE(rec.delta_hat);
    CHECK(std::fabs(*rec.delta_hat - 1.0) < 0.05);
  }
}

TEST_CASE("evaluation errors are recorded, not thrown") {
  // Imaginary part beyond 1e15 leaves no usable argument for the next step.
  FunctionModel mexp(preset("rees-exp"));
  auto rec = iterate_orbit(mexp, LogComplex::polar(40.0, kPi / 2), orbit_options_for(mexp, 10));
  CHECK(rec.stop_reason == StopReason::ErrorState);
  CHECK(rec.error_index >= 1);
  CHECK_FALSE(rec.error.empty());
  CHECK(std::holds_alternative<Undecided>(rec.classification));
  CHECK_THROWS_AS(iterate_orbit(mexp, Complex(1.0), 0), InvalidParams);
}
