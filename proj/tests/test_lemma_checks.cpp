#include <doctest.h>

#include <cmath>

#include "etf/lemma_checks.hpp"

using namespace etf;

namespace {

const FunctionModel& cubic() {
  static FunctionModel m(preset("hemke-cubic"));
  return m;
}

const FunctionModel& rees() {
  static FunctionModel m(preset("rees-exp"));
  return m;
}

}  // namespace

TEST_CASE("koebe bounds hold for univalent witnesses") {
  for (const auto& map : {identity_map(), koebe_map(), koebe_map(1.0), normalized_exp_map(1.0)}) {
    auto r = check_koebe_bounds(map, 64);
    INFO(r.to_text());
    CHECK(r.passed());
    CHECK(r.n_samples > 3 * 64 * 64);
  }
}

TEST_CASE("koebe map attains the bounds on the positive axis") {
  auto k = koebe_map();
  CHECK(std::abs(k.f(0.5)) == doctest::Approx(2.0).epsilon(1e-15));
  auto r = check_koebe_bounds(k, 64);
  CHECK(std::fabs(r.worst_margin) <= 1e-10);
  // A rotated copy attains them on the rotated ray.
  auto rr = check_koebe_bounds(koebe_map(kTwoPi / 64 * 5), 64);
  CHECK(std::fabs(rr.worst_margin) <= 1e-10);
  // The identity is sharp only at the origin, where both growth bounds vanish.
  CHECK(std::fabs(check_koebe_bounds(identity_map(), 64).worst_margin) <= 1e-12);
}

TEST_CASE("koebe check catches maps outside the class") {
  HolomorphicMap bad{"critical-inside", [](Complex z) { return z + 0.9 * z * z; },
                     [](Complex z) { return 1.0 + 1.8 * z; }, {}, {}, {}};
  auto r = check_koebe_bounds(bad, 64);
  CHECK_FALSE(r.passed());
  CHECK_FALSE(r.witnesses.empty());

  HolomorphicMap scaled{"scaled", [](Complex z) { return 2.0 * z; }, [](Complex) { return Complex(2.0); }, {}, {}, {}};
  CHECK_FALSE(check_koebe_bounds(scaled, 16).passed());
}

TEST_CASE("ball image inclusion examples") {
  auto e = check_ball_image_inclusion(exp_map(), 0.0, 0.5, 4096);
  CHECK(e.passed());
  REQUIRE_FALSE(e.witnesses.empty());
  CHECK(e.witnesses.back().bound == doctest::Approx(std::exp(-0.5) * 0.5).epsilon(1e-12));
  CHECK(e.witnesses.back().observed == doctest::Approx(1 - std::exp(-0.5)).epsilon(1e-6));

  auto a = check_ball_image_inclusion(affine_map(2.0, 1.0), Complex(0.3, -2), 0.7, 4096);
  CHECK(a.passed());
  CHECK(std::fabs(a.worst_margin) < 1e-14);

  auto s = check_ball_image_inclusion(square_map(), 1.0, 0.5, 4096);
  CHECK(s.passed());
  CHECK(s.witnesses.back().bound == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.witnesses.back().observed == doctest::Approx(0.75).epsilon(1e-6));
}

TEST_CASE("distortion estimates") {
  SquareRegion unit{0.0, 0.5};
  for (const auto& d : estimate_distortion(affine_map(Complex(1, 2), 3.0), unit, {1.0, 0.5, 0.1}, 16)) {
    CHECK(d.sup_inf_ratio == doctest::Approx(1.0).epsilon(1e-14));
  }
  // |exp'| = e^{Re z}: on c S the ratio is e^{c * side}.
  std::vector<double> cs{1.0, 0.5, 0.25, 0.1, 0.01};
  auto reps = estimate_distortion(exp_map(), unit, cs, 33);
  for (size_t i = 0; i < reps.size(); ++i) {
    CHECK(reps[i].sup_inf_ratio == doctest::Approx(std::exp(cs[i])).epsilon(1e-12));
    CHECK(reps[i].sup_inf_ratio >= 1.0);
    if (i > 0) CHECK(reps[i].sup_inf_ratio <= reps[i - 1].sup_inf_ratio);
  }
  // Small squares: within 1e-3 of 1 at c = 0.01.
  for (const auto& map : {exp_map(), square_map(), koebe_map()}) {
    auto d = estimate_distortion(map, {Complex(0.3, 0.2), 0.005}, {0.01}, 17);
    CHECK(d.front().sup_inf_ratio - 1.0 < 1e-3);
  }
}

TEST_CASE("distortion of the cubic example on a cover-sized square") {
  // Diameter of the cover squares near |z| = 30 with c = 1/2 and delta2 = 2.1.
  double diam = 0.25 * std::pow(30.0, -2.1);
  SquareRegion S{30.0, diam / (2 * std::sqrt(2.0))};
  auto d = estimate_distortion(model_map(cubic()), S, {1.0, 0.5, 0.25}, 9);
  CHECK(d[1].sup_inf_ratio <= 1.5);
  CHECK(d[2].sup_inf_ratio <= d[1].sup_inf_ratio);
  CHECK(d[1].sup_inf_ratio <= d[0].sup_inf_ratio);
}

TEST_CASE("condition (a) for exp") {
  ParameterSet p;
  p.delta1 = -0.1;
  p.delta2 = 0.1;
  p.epsilon = 0.2;
  auto r = check_condition_a(rees(), p, 2000, 20, 200, 5);
  INFO(r.to_text());
  CHECK(r.passed());
  CHECK(r.n_skipped > 0);
}

TEST_CASE("condition (a) for the cubic example") {
  ParameterSet p;
  p.delta1 = 1.9;
  p.delta2 = 2.1;
  p.epsilon = 0.2;
  // f'/(f - s) = 3 z^2 + a exactly, which exceeds |z|^2.1 until |z| = 3^10.
  auto near = check_condition_a(cubic(), p, 500, 20, 200, 5);
  CHECK(near.n_violations > 0);
  auto far = check_condition_a(cubic(), p, 2000, 1e5, 1e6, 5);
  INFO(far.to_text());
  CHECK(far.passed());
}

TEST_CASE("injectivity radius for exp") {
  auto r = check_injectivity_radius(exp_map(), 0.0, 0.9 * kPi, 100000, 9);
  CHECK(r.passed());
  CHECK(r.n_samples + r.n_skipped == 100000);
  // Collisions need distance 2 pi, so a radius of 1.1 pi is still clean.
  CHECK(check_injectivity_radius(exp_map(), 0.0, 1.1 * kPi, 100000, 10).passed());
  CHECK(detects_collision(exp_map(), 0.0, Complex(0, kTwoPi)));
  CHECK_FALSE(detects_collision(exp_map(), 0.0, Complex(0, 1)));
}

TEST_CASE("injectivity radius for the cubic example") {
  for (Complex z : {Complex(30, 0), std::polar(30.0, 0.3), std::polar(40.0, kPi / 3)}) {
    double radius = injectivity_radius(cubic(), z, 0.05);
    CHECK(radius == doctest::Approx(0.95 * kPi / std::abs(3.0 * z * z + 2.553766)).epsilon(1e-5));
    auto r = check_injectivity_radius(model_map(cubic()), z, radius, 2000, 3);
    INFO(r.to_text());
    CHECK(r.passed());
  }
}

TEST_CASE("raster statistics of the unit square") {
  Shape sq{"unit", [](Complex z) { return z.real() > 0 && z.real() < 1 && z.imag() > 0 && z.imag() < 1; },
           Complex(-0.25, -0.25), Complex(1.25, 1.25), 1.0};
  auto st = rasterize(sq, 2048);
  CHECK(st.area == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(st.diam == doctest::Approx(std::sqrt(2.0)).epsilon(2e-3));
  auto r = check_quasisquare_bounds({sq});
  INFO(r.to_text());
  CHECK(r.passed());
  // Area bound meas >= diam^2 / 2 is an equality for the square.
  CHECK(r.worst_margin < 0.01);
}

TEST_CASE("quasi-square bounds for images of squares") {
  std::vector<Shape> shapes{image_of_square(exp_map(), {Complex(0.2, 0.1), 0.05}),
                            image_of_square(exp_map(), {Complex(-1, 2), 0.3}),
                            image_of_square(affine_map(Complex(1, 1), 2.0), {0.0, 1.0}),
                            image_of_square(square_map(), {Complex(1.0, 0.5), 0.2})};
  CHECK(shapes[0].k == doctest::Approx(std::exp(0.1)).epsilon(1e-12));
  CHECK(shapes[2].k == doctest::Approx(1.0).epsilon(1e-14));
  auto r = check_quasisquare_bounds(shapes, 1024);
  INFO(r.to_text());
  CHECK(r.passed());
  CHECK(r.n_samples == 12);
}

TEST_CASE("density transfer") {
  auto left_half = [](Complex z) { return z.real() < 0.0; };
  auto id = check_density_transfer(identity_map(), left_half, {0.0, 1.0}, 1024);
  INFO(id.to_text());
  CHECK(id.passed());
  // K = 1: both densities are 1/2 up to raster rounding.
  CHECK(std::fabs(id.worst_margin) <= id.slack);

  auto aff = check_density_transfer(affine_map(Complex(0.5, -2), Complex(3, 1)), left_half, {0.0, 1.0}, 1024);
  CHECK(aff.passed());
  CHECK(std::fabs(aff.worst_margin) <= aff.slack);

  auto ex = check_density_transfer(exp_map(), [](Complex z) { return z.real() < 0.05; }, {Complex(0.05, 0.3), 0.5});
  INFO(ex.to_text());
  CHECK(ex.passed());
}

TEST_CASE("asymptotic residual") {
  ResidualFit fit;
  auto e = check_asymptotic_residual(rees(), 200, 5, 40, 1, &fit);
  CHECK(e.passed());
  CHECK(fit.finite_samples == 0);

  auto h = check_asymptotic_residual(cubic(), 200, 5, 40, 2, &fit);
  INFO(h.to_text());
  CHECK(h.passed());
  CHECK(fit.finite_samples == 0);

  FunctionModel generic(FunctionSpec::integral(Polynomial::constant(1.0), Polynomial::monomial(1.0, 3), 0.0, "z3"));
  auto g = check_asymptotic_residual(generic, 300, 5, 12, 3, &fit);
  INFO(g.to_text());
  CHECK(g.passed());
  CHECK(fit.finite_samples > 250);
  CHECK(fit.slope <= 0.1);
  CHECK(std::isfinite(fit.log_C));
}
