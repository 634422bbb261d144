#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "etf/function_model.hpp"
#include "etf/measure_lab.hpp"

namespace etf {

struct Witness {
  std::string input;  // enough to reproduce the sample, seed included
  double observed = 0.0;
  double bound = 0.0;
};

struct CheckResult {
  std::string name;
  int n_samples = 0;
  int n_violations = 0;
  int n_skipped = 0;
  /// Smallest normalized distance to the bound over all samples; negative
  /// means violated. Equality cases sit at 0.
  double worst_margin = kInf;
  double slack = 0.0;
  std::vector<Witness> witnesses;  // violations first, then the tightest sample
  std::vector<std::string> notes;

  bool passed() const { return n_violations == 0; }
  std::string to_text() const;
};

/// A holomorphic map with its derivative. The log-form members are used when
/// present; they avoid overflow for maps like exp(z^3).
struct HolomorphicMap {
  std::string name;
  std::function<Complex(Complex)> f;
  std::function<Complex(Complex)> df;
  std::function<LogComplex(Complex)> f_log;
  std::function<LogComplex(Complex)> df_log;
  std::function<Complex(Complex)> inverse;  // optional local inverse

  LogComplex value_log(Complex z) const;
  LogComplex derivative_log(Complex z) const;
};

HolomorphicMap identity_map();
/// k(z) = z / (1 - z)^2 rotated: e^{-i t} k(e^{i t} z).
HolomorphicMap koebe_map(double rotation = 0.0);
/// (e^{r z} - 1) / r, univalent on the unit disk for 0 < r < pi.
HolomorphicMap normalized_exp_map(double r);
HolomorphicMap affine_map(Complex a, Complex b);
HolomorphicMap square_map();
HolomorphicMap exp_map();
/// The function of a model; values come from the model's evaluators. For the
/// integral form f_log is f - s, which is f up to a locally constant shift.
HolomorphicMap model_map(const FunctionModel& model);

/// Growth, distortion and ratio bounds for a normalized univalent map of the
/// unit disk on a polar grid of |z| <= 0.95, plus containment of B(0, rho/4)
/// in f(B(0, rho)) by winding numbers of the image of |z| = rho.
CheckResult check_koebe_bounds(const HolomorphicMap& map, int grid_n, int n_boundary = 65536);

/// min over |z - z0| = r of |f(z) - f(z0)| >= inf_{B(z0, r)} |f'| r - slack.
CheckResult check_ball_image_inclusion(const HolomorphicMap& map, Complex z0, double r, int n_boundary);

struct DistortionReport {
  SquareRegion square;
  double c = 1.0;
  double sup_inf_ratio = 1.0;
};

/// sup/inf of |f'| on c S for each c, sampled on a grid_n x grid_n grid.
std::vector<DistortionReport> estimate_distortion(const HolomorphicMap& map, const SquareRegion& square,
                                                  const std::vector<double>& c_list, int grid_n);

/// Samples n points of G with rmin <= |z| <= rmax and checks the dichotomy
/// (|f - s| <= exp(-|z|^eps) or |f| >= exp(|z|^eps)) and
/// delta1 log|z| <= log|f'| - log|f - s| <= delta2 log|z|.
CheckResult check_condition_a(const FunctionModel& model, const ParameterSet& params, int n, double rmin, double rmax,
                              std::uint64_t seed);

/// Random pairs in B(z, radius) must not collide:
/// |f(z1) - f(z2)| < 1e-9 |f(z1)| with |z1 - z2| > 1e-9 is a violation.
CheckResult check_injectivity_radius(const HolomorphicMap& map, Complex z, double radius, int n_pairs,
                                     std::uint64_t seed);
/// The radius (1 - delta') pi / |Q'(z)|.
double injectivity_radius(const FunctionModel& model, Complex z, double delta_prime);
/// True when the pair collides in the sense used above.
bool detects_collision(const HolomorphicMap& map, Complex z1, Complex z2);

/// A planar region given by membership, with a bounding box and the
/// distortion bound k of the map that produced it.
struct Shape {
  std::string name;
  std::function<bool(Complex)> inside;
  Complex lo, hi;
  double k = 1.0;
};

/// Square S mapped by `map` (which needs an inverse); k is measured.
Shape image_of_square(const HolomorphicMap& map, const SquareRegion& square, int grid_n = 64);

struct RasterStats {
  double area = 0.0;
  double diam = 0.0;
  double pixel = 0.0;          // pixel side
  double boundary_area = 0.0;  // area of pixels on the raster boundary
};
/// Area and diameter of a shape rasterized at res x res over its box.
RasterStats rasterize(const Shape& shape, int res);

/// meas(D) >= diam(D)^2 / (2 k^2) and meas(D within eps of its boundary) <=
/// 4 eps k^2 diam(D) for eps in {diam/100, diam/20}, rasterized at `res`.
CheckResult check_quasisquare_bounds(const std::vector<Shape>& shapes, int res = 2048);

/// meas(M n D) / meas(D) <= K^2 meas(f(M) n f(D)) / meas(f(D)) for D a square
/// and K the measured distortion of f on D.
CheckResult check_density_transfer(const HolomorphicMap& map, const std::function<bool(Complex)>& M,
                                   const SquareRegion& D, int res = 2048);

/// Residual of the one-term expansion normalized by |z|^(deg P - deg Q) e^{Re Q}:
/// log|f - s - P e^Q / Q'| - (deg P - deg Q) log|z| - Re Q. Reports the maximum
/// (the fitted constant, in log form) and the regression slope against log|z|.
struct ResidualFit {
  double log_C = -kInf;
  double slope = 0.0;
  int finite_samples = 0;
};
CheckResult check_asymptotic_residual(const FunctionModel& model, int n, double rmin, double rmax, std::uint64_t seed,
                                      ResidualFit* fit = nullptr, double max_slope = 0.1);

/// The standard witnesses of every check, plus the model-specific ones when a
/// model is given. `only` selects one check family by name ("" runs all).
struct SuiteOptions {
  std::string only;
  int condition_samples = 2000;
  double rmin = 20.0;
  double rmax = 200.0;
  double epsilon = 0.2;
  std::uint64_t seed = 1;
  int raster = 2048;
};
const std::vector<std::string>& lemma_suite_names();
std::vector<CheckResult> run_lemma_suite(const FunctionModel* model, const SuiteOptions& opt = {});

}  // namespace etf
