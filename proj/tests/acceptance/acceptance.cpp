// Acceptance run: one PASS/FAIL line per criterion with its wall time.
// Criteria 3 and 5 cannot be met as stated (see README); they are evaluated
// at the stated tolerances and reported red. The exit code is 0 when every
// other criterion passes and those two still fail as analysed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "etf/lemma_checks.hpp"
#include "etf/measure_lab.hpp"
#include "etf/renderer.hpp"

using namespace etf;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

const FunctionModel& cubic() {
  static FunctionModel m(preset("hemke-cubic"));
  return m;
}

Outcome fixed_points() {
  FunctionModel m(preset("hemke-cubic"));
  auto k = cubic_example_constants();
  double y = static_cast<double>(std::sqrt(k.a / 3.0L));
  double worst_f = 0, worst_d = 0;
  for (double s : {1.0, -1.0}) {
    Complex z(0.0, s * y);
    worst_f = std::max(worst_f, std::abs(m.evaluate(z) - z));
    worst_d = std::max(worst_d, std::abs(m.derivative(z)));
  }
  return {worst_f < 1e-9 && worst_d < 1e-12, "z* = +-" + fmt("%.9f", y) + "i, max |f(z*) - z*| = " +
                                                  fmt("%.3g", worst_f) + ", max |f'(z*)| = " + fmt("%.3g", worst_d)};
}

Outcome asymptotic() {
  auto h = asymptotic_values(preset("hemke-cubic"));
  double worst = 0;
  for (const auto& s : h.sectors) worst = std::max(worst, std::abs(s.value));
  auto e = asymptotic_values(preset("rees-exp"));
  double ez = std::abs(e.sectors.at(0).value);
  bool ok = h.sectors.size() == 3 && worst < 1e-6 && e.sectors.size() == 1 && ez < 1e-8;
  return {ok, "cubic: " + std::to_string(h.sectors.size()) + " sectors, max |s_k| = " + fmt("%.3g", worst) +
                  "; exp: |s| = " + fmt("%.3g", ez)};
}

Outcome asymptotic_orbit() {
  OrbitRecord r = iterate_orbit(cubic(), Complex(0.0), 200);
  // Closed form f = e^Q in extended precision for comparison.
  auto k = cubic_example_constants();
  long double z1 = std::exp(k.b);
  long double z2 = std::exp(z1 * z1 * z1 + k.a * z1 + k.b);
  long double q3 = z2 * z2 * z2 + k.a * z2 + k.b;
  bool shape = r.points.size() == 5 && r.points[4].saturated && r.stop_reason == StopReason::Saturated;
  double m1 = shape ? std::exp(r.points[1].total_log_mod()) : NAN;
  double m2 = shape ? std::exp(r.points[2].total_log_mod()) : NAN;
  double l3 = shape ? r.points[3].total_log_mod() : NAN;
  // The first value is e^b; the criterion gives it without a tolerance.
  bool ok = shape && std::fabs(r.points[1].total_log_mod() - static_cast<double>(k.b)) < 1e-12 &&
            std::fabs(m2 - 21.347) <= 1e-2 && std::fabs(l3 - 9782.0) <= 1.0;
  double delta = r.delta_hat.value_or(NAN);
  ok = ok && std::holds_alternative<ExponentialEscape>(r.classification) && std::fabs(delta - 3.0) <= 0.1;
  return {ok, "|z1| = " + fmt("%.6f", m1) + " (target e^b), |z2| = " + fmt("%.4f", m2) +
                  " (target 21.347 +- 0.01), log|z3| = " + fmt("%.2f", l3) + " (target 9782.0 +- 1.0), delta_hat = " +
                  fmt("%.4f", delta) + "; closed form: |z1| = " + fmt("%.6f", static_cast<double>(z1)) + ", |z2| = " +
                  fmt("%.4f", static_cast<double>(z2)) + ", log|z3| = " + fmt("%.2f", static_cast<double>(q3))};
}

Outcome verdicts() {
  auto v1 = recurrence_verdict(singular_orbit_report(cubic())).verdict;
  auto v2 = recurrence_verdict(singular_orbit_report(FunctionModel(preset("rees-exp")))).verdict;
  auto v3 = recurrence_verdict(singular_orbit_report(FunctionModel(preset("rees-exp", Complex(0, kTwoPi))))).verdict;
  bool ok = v1 == Verdict::NotRecurrent && v2 == Verdict::NotRecurrent && v3 == Verdict::RecurrentErgodic;
  return {ok, std::string("cubic: ") + to_string(v1) + ", e^z: " + to_string(v2) + ", 2 pi i e^z: " + to_string(v3)};
}

Outcome condition_a() {
  ParameterSet p;
  p.delta1 = 1.9;
  p.delta2 = 2.1;
  p.epsilon = 0.2;
  auto r = check_condition_a(cubic(), p, 10000, 20, 200, 1);
  std::string d = std::to_string(r.n_violations) + " violations over " + std::to_string(r.n_samples) +
                  " bound evaluations at 10^4 points of G, worst margin " + fmt("%.3f", r.worst_margin);
  if (!r.witnesses.empty()) d += "; e.g. " + r.witnesses.front().input + " observed " + fmt("%.4f", r.witnesses.front().observed) +
                                 " bound " + fmt("%.4f", r.witnesses.front().bound);
  return {r.passed() && r.n_samples > 0, d};
}

Outcome density_trend() {
  std::vector<DensityEstimate> est;
  for (double m0 : {10.0, 20.0, 40.0}) est.push_back(estimate_escape_density(cubic(), {Complex(m0, 0.0), 0.5}, 10000, 200, 1));
  bool ok = true;
  std::string d;
  for (size_t i = 0; i < est.size(); ++i) {
    const auto& e = est[i];
    ok = ok && e.fraction >= 0.95;
    if (i > 0) {
      const auto& p = est[i - 1];
      bool overlap = e.ci95_high >= p.ci95_low && p.ci95_high >= e.ci95_low;
      ok = ok && (e.fraction >= p.fraction || overlap);
    }
    d += (i ? "; " : "") + std::string("M0=") + fmt("%g", e.region.center.real()) + ": " + fmt("%.4f", e.fraction) +
         " [" + fmt("%.4f", e.ci95_low) + ", " + fmt("%.4f", e.ci95_high) + "]";
  }
  return {ok, d + " (seed 1, n = 10^4)"};
}

Outcome tail_trend() {
  FunctionModel m(preset("sinh-cubic"));
  auto t = estimate_nonescaping_tail(m, {2.0, 4.0, 8.0}, 10000, 200, 1);
  bool ok = t[0].nonescaping.fraction > t[1].nonescaping.fraction && t[1].nonescaping.fraction > t[2].nonescaping.fraction &&
            1.0 - t[2].nonescaping.fraction >= 0.9;
  std::string d;
  for (const auto& a : t)
    d += fmt("R=%g: ", a.R) + std::to_string(a.nonescaping.n_hit) + "/" + std::to_string(a.nonescaping.n_samples) +
         " non-escaping; ";
  return {ok, d + "escaping at R=8: " + fmt("%.4f", 1.0 - t[2].nonescaping.fraction) + " (seed 1)"};
}

bool dark(Rgb c) { return c[0] + c[1] + c[2] < 3 * 80; }

Outcome figures() {
  using clock = std::chrono::steady_clock;
  std::string d;
  bool ok = true;
  double slowest = 0;
  auto render_twice = [&](const FunctionModel& m, Rendering& first) {
    ImageSpec img;  // [-2, 2]^2 at 512 x 512, 200 iterations
    img.threads = 1;
    auto t0 = clock::now();
    first = render_classification(m, img);
    slowest = std::max(slowest, std::chrono::duration<double>(clock::now() - t0).count());
    img.threads = 2;
    t0 = clock::now();
    Rendering second = render_classification(m, img);
    slowest = std::max(slowest, std::chrono::duration<double>(clock::now() - t0).count());
    return encode_ppm(first.image) == encode_ppm(second.image);
  };

  ImageSpec img;
  Rendering r3;
  bool same3 = render_twice(cubic(), r3);
  auto k = cubic_example_constants();
  double y = static_cast<double>(std::sqrt(k.a / 3.0L));
  std::set<int> basins;
  for (double s : {1.0, -1.0}) {
    auto [i, j] = img.pixel_of(Complex(0.0, s * y));
    bool in = r3.class_at(i, j) == PixelClass::Attracted && dark(r3.image.at(i, j));
    ok = ok && in;
    if (in) basins.insert(r3.basin_at(i, j));
  }
  ok = ok && basins.size() == 2 && same3;
  d += "cubic: " + std::to_string(basins.size()) + " distinct dark basins at +-" + fmt("%.6f", y) + "i, identical " +
       (same3 ? "yes" : "no");

  Rendering r5;
  bool same5 = render_twice(FunctionModel(preset("sinh-cubic")), r5);
  auto [i0, j0] = img.pixel_of(Complex(0.0, 0.0));
  bool zero_dark = r5.class_at(i0, j0) == PixelClass::Attracted && dark(r5.image.at(i0, j0));
  ok = ok && zero_dark && same5 && slowest < 120.0;
  d += "; sinh: basin at 0 " + std::string(zero_dark ? "dark" : "missing") + ", identical " + (same5 ? "yes" : "no") +
       "; slowest render " + fmt("%.1f s", slowest);
  return {ok, d};
}

Outcome lemma_suite() {
  int checks = 0, failed = 0;
  std::string names;
  for (const auto& fam : lemma_suite_names()) {
    if (fam == "condition-a") continue;  // criterion 5
    SuiteOptions opt;
    opt.only = fam;
    for (const auto& r : run_lemma_suite(&cubic(), opt)) {
      ++checks;
      if (!r.passed()) {
        ++failed;
        names += " " + r.name;
      }
    }
  }
  double eq = std::fabs(check_koebe_bounds(koebe_map(), 64).worst_margin);
  bool ok = failed == 0 && eq <= 1e-10;
  return {ok, std::to_string(checks) + " checks, " + std::to_string(failed) + " with violations" + names +
                  "; Koebe equality margin " + fmt("%.2g", eq)};
}

Outcome schedule() {
  Schedule s = mk_schedule(100.0, 0.5, 0.5, 5, 0.0);
  double rel = std::fabs(s.M.at(1) - std::exp(10.0)) / std::exp(10.0);
  return {rel <= 1e-9 && s.product_check, "M_1 = " + fmt("%.10f", s.M[1]) + " (relative error " + fmt("%.2g", rel) +
                                              "), product " + fmt("%.6f", s.product) + " >= bound " + fmt("%.6f", s.bound)};
}

struct Criterion {
  int id;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, 1.0, fixed_points},    {2, 5.0, asymptotic},     {3, 1.0, asymptotic_orbit}, {4, 5.0, verdicts},
      {5, 30.0, condition_a},    {6, 300.0, density_trend}, {7, 300.0, tail_trend},     {8, 240.0, figures},
      {9, 120.0, lemma_suite},   {10, 1.0, schedule}};
  const std::set<int> known_red{3, 5};

  int passed = 0;
  bool healthy = true;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = secs <= c.budget_s;
    bool pass = o.pass && in_time;
    passed += pass;
    std::printf("criterion %2d: %s [%.2f s of %.0f s] %s%s\n", c.id, pass ? "PASS" : "FAIL", secs, c.budget_s,
                o.detail.c_str(), in_time ? "" : " (over time budget)");
    if (known_red.count(c.id)) {
      if (pass) {
        std::printf("criterion %2d: unexpectedly passed; the analysis in the README needs revisiting\n", c.id);
        healthy = false;
      }
    } else if (!pass) {
      healthy = false;
    }
    std::fflush(stdout);
  }
  std::printf("summary: %d of %zu criteria pass; 3 and 5 are red as analysed\n", passed, criteria.size());
  return healthy ? 0 : 1;
}
