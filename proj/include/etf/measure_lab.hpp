#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "etf/function_model.hpp"
#include "etf/orbit_engine.hpp"

namespace etf {

/// Exponents of the density theorem's conditions (a) to (c).
struct ParameterSet {
  double epsilon = 0.2;
  double delta1 = 1.9;
  double delta2 = 2.1;
  double beta = 0.0;
  double tau = 0.5;
  double B = 1.0;
  double M = 10.0;

  /// Throws InvalidParams unless -delta1 < beta < tau < 1 and delta1 <= delta2.
  void validate() const;
};

/// eta = (tau - beta) / max{1, 2 - 2 tau}; throws InvalidParams when tau <= beta.
double eta(const ParameterSet& p);

struct Schedule {
  std::vector<double> M;  // M_0 .. M_kmax, capped at 1e300
  bool capped = false;
  double product = 1.0;   // prod_{k>=1} (1 - M_k^(beta - tau) / 4)
  double bound = 0.0;     // 1 - M_1^(beta - tau)
  bool product_check = false;
};

/// M_{k+1} = exp(min{1, 1/(2 - 2 tau)} M_k^epsilon).
Schedule mk_schedule(double M0, double epsilon, double tau, int k_max, double beta = 0.0);

struct SquareRegion {
  Complex center;
  double half_side = 0.0;

  double diam() const;
  double area() const { return 4.0 * half_side * half_side; }
};

struct SquareCover {
  std::vector<SquareRegion> squares;
  double window_area = 0.0;
  double discarded_area = 0.0;
};

/// Quadtree refinement of window until diam S <= (c/2) (sup_{S/c} |z|)^(-delta2),
/// dropping squares that may come within |z|^(-delta1)/2 of the complement of G.
/// The band test is conservative (Lipschitz bound on Re Q), so it may drop a
/// few squares just outside the band but never keeps one inside it.
SquareCover build_square_cover(const FunctionModel& model, const SquareRegion& window, const ParameterSet& params,
                               double c, std::size_t max_squares = 4'000'000);

enum class HitPredicate { EscapedOrShadowsA, Escaped, NonEscaping };
const char* to_string(HitPredicate h);

struct DensityEstimate {
  SquareRegion region;            // square samples
  double r_inner = 0.0;           // annulus samples when r_outer > 0
  double r_outer = 0.0;
  int n_samples = 0;
  int n_hit = 0;
  int error_count = 0;
  int shadow_count = 0;           // orbits that came within eps_shadow of the orbit of A
  double fraction = 0.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
  HitPredicate hit_predicate = HitPredicate::EscapedOrShadowsA;
};

/// Wilson score interval at 95%.
std::pair<double, double> wilson_interval(int hits, int n);

/// Counter-based uniform in [0, 1): depends only on (seed, index, lane).
double uniform01(std::uint64_t seed, std::uint64_t index, std::uint64_t lane);

/// Resolves a thread-count hint: n > 0 as given, else ETF_THREADS, else hardware.
int resolve_threads(int hint);
/// Runs fn(i) for i in [0, n) on up to `threads` threads.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Hit = orbit escapes exponentially or saturates. Sampling uses per-index
/// seeds, so the result does not depend on `threads`.
DensityEstimate estimate_escape_density(const FunctionModel& model, const SquareRegion& region, int n, int max_iter,
                                        std::uint64_t seed, double eps_shadow = 1e-3, int threads = 0);

struct AnnulusEstimate {
  double R = 0.0;
  DensityEstimate nonescaping;
  double tail_term = 0.0;  // fraction * 2 pi (R + 0.5)
};

/// Non-escaping fraction on each annulus R <= |z| <= R + 1 (area-uniform samples).
std::vector<AnnulusEstimate> estimate_nonescaping_tail(const FunctionModel& model, const std::vector<double>& radii,
                                                       int n_per_annulus, int max_iter, std::uint64_t seed,
                                                       int threads = 0);

struct ChannelGeometry {
  double channel_width_lb = 0.0;
  double gap_width_ub = 0.0;
  /// Arc length on |z| = R of the component of the complement of G around
  /// the first zero of Re Q, found by bisection on G membership.
  double empirical_channel_width = 0.0;
  double channel_center_angle = 0.0;
};

ChannelGeometry channel_gap_geometry(const FunctionModel& model, double R, double delta_prime);

}  // namespace etf
