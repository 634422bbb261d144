#include "etf/measure_lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace etf {

void ParameterSet::validate() const {
  if (!(tau < 1.0)) throw InvalidParams("tau must be below 1");
  if (!(beta < tau)) throw InvalidParams("beta must be below tau");
  if (!(-delta1 < beta)) throw InvalidParams("beta must exceed -delta1");
  if (!(delta1 <= delta2)) throw InvalidParams("delta1 must not exceed delta2");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidParams("epsilon must lie in (0, 1)");
}

double eta(const ParameterSet& p) {
  if (!(p.tau > p.beta)) throw InvalidParams("eta needs tau > beta");
  return (p.tau - p.beta) / std::max(1.0, 2.0 - 2.0 * p.tau);
}

Schedule mk_schedule(double M0, double epsilon, double tau, int k_max, double beta) {
  if (!(M0 > 1.0)) throw InvalidParams("M0 must exceed 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidParams("epsilon must lie in (0, 1)");
  if (!(tau < 1.0)) throw InvalidParams("tau must be below 1");
  const double cap = 1e300;
  const double factor = std::min(1.0, 1.0 / (2.0 - 2.0 * tau));
  Schedule s;
  s.M.push_back(M0);
  for (int k = 0; k < k_max; ++k) {
    double prev = s.M.back();
    double log_next = factor * std::pow(prev, epsilon);
    if (prev >= cap || log_next > std::log(cap)) {
      s.capped = true;
      s.M.push_back(cap);
    } else {
      s.M.push_back(std::exp(log_next));
    }
  }
  // Terms beyond the cap are 1 - 0 to double precision.
  for (size_t k = 1; k < s.M.size(); ++k) s.product *= 1.0 - std::pow(s.M[k], beta - tau) / 4.0;
  s.bound = s.M.size() > 1 ? 1.0 - std::pow(s.M[1], beta - tau) : 1.0;
  s.product_check = tau > beta && s.M.size() > 1 && s.product >= s.bound;
  return s;
}

double SquareRegion::diam() const { return 2.0 * std::sqrt(2.0) * half_side; }

namespace {

enum class SquareFate { Keep, Discard, Inside, Refine };

struct CoverContext {
  const Polynomial& Q;
  double delta;
  double M;
  const ParameterSet& params;
  double c;

  double lipschitz(double r) const {
    double s = 0.0;
    for (int k = 1; k <= Q.degree(); ++k) s += k * std::abs(Q.coeff(k)) * std::pow(r, k - 1);
    return s;
  }

  SquareFate fate(const SquareRegion& S) const {
    double h = S.half_side;
    double rc = std::abs(S.center);
    double inf_abs = std::max(0.0, rc - std::sqrt(2.0) * h);
    double sup_scaled = rc + std::sqrt(2.0) * h / c;
    double rho = params.delta1 > 0 ? 0.5 * std::pow(std::max(inf_abs, 1e-300), -params.delta1)
                                   : 0.5 * std::pow(rc + std::sqrt(2.0) * h, -params.delta1);
    double cover = std::sqrt(2.0) * h / 4.0;  // covering radius of the 5 x 5 grid
    double L = lipschitz(rc + std::sqrt(2.0) * h + rho);

    bool all_outside = true;  // every point of S lies outside G
    bool all_keep = true;     // every point of S has its rho-ball inside G
    for (int i = 0; i <= 4; ++i) {
      for (int j = 0; j <= 4; ++j) {
        Complex z = S.center + Complex((i - 2) * 0.5 * h, (j - 2) * 0.5 * h);
        double az = std::abs(z);
        double re = std::fabs(poly_eval(Q, z).real());
        bool out = az + cover <= M || re + L * cover < std::pow(std::max(az - cover, 0.0), delta);
        all_outside = all_outside && out;
        double d = cover + rho;
        bool keep = az - d > M && re - L * d >= std::pow(az + d, delta);
        all_keep = all_keep && keep;
      }
    }
    if (all_outside) return SquareFate::Inside;
    double bound = 0.5 * c * std::pow(sup_scaled, -params.delta2);
    if (S.diam() > bound) return SquareFate::Refine;
    return all_keep ? SquareFate::Keep : SquareFate::Discard;
  }
};

}  // namespace

SquareCover build_square_cover(const FunctionModel& model, const SquareRegion& window, const ParameterSet& params,
                               double c, std::size_t max_squares) {
  if (!(c > 0.0 && c < 1.0)) throw InvalidParams("cover shrink constant c must lie in (0, 1)");
  if (!(window.half_side > 0.0)) throw InvalidParams("window must have positive size");
  CoverContext ctx{model.spec().Q(), model.geometry().delta, model.geometry().M, params, c};
  SquareCover out;
  out.window_area = window.area();
  std::vector<SquareRegion> stack{window};
  std::size_t visited = 0;
  while (!stack.empty()) {
    SquareRegion S = stack.back();
    stack.pop_back();
    if (++visited + stack.size() > max_squares) {
      throw TooManySquares("square cover needs more than " + std::to_string(max_squares) + " squares");
    }
    switch (ctx.fate(S)) {
      case SquareFate::Keep:
        out.squares.push_back(S);
        break;
      case SquareFate::Discard:
      case SquareFate::Inside:
        out.discarded_area += S.area();
        break;
      case SquareFate::Refine: {
        double h = 0.5 * S.half_side;
        // Pushed in reverse so the output runs row by row from the lower left.
        for (Complex o : {Complex(h, h), Complex(-h, h), Complex(h, -h), Complex(-h, -h)}) {
          stack.push_back({S.center + o, h});
        }
        break;
      }
    }
  }
  if (out.squares.empty()) throw WindowTooSmall("every square of the window lies in the discarded band");
  return out;
}

const char* to_string(HitPredicate h) {
  switch (h) {
    case HitPredicate::EscapedOrShadowsA: return "EscapedOrShadowsA";
    case HitPredicate::Escaped: return "Escaped";
    case HitPredicate::NonEscaping: return "NonEscaping";
  }
  return "?";
}

std::pair<double, double> wilson_interval(int hits, int n) {
  if (n <= 0) return {0.0, 1.0};
  const double z = 1.959963984540054;
  double p = static_cast<double>(hits) / n;
  double denom = 1.0 + z * z / n;
  double centre = (p + z * z / (2.0 * n)) / denom;
  double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double uniform01(std::uint64_t seed, std::uint64_t index, std::uint64_t lane) {
  // splitmix64 finalizer over a combined counter.
  std::uint64_t x = seed ^ (index * 0x9E3779B97F4A7C15ULL) ^ (lane * 0xD1B54A32D192ED03ULL);
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

int resolve_threads(int hint) {
  if (hint > 0) return hint;
  if (const char* env = std::getenv("ETF_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t t = static_cast<std::size_t>(std::max(1, threads));
  t = std::min(t, std::max<std::size_t>(n, 1));
  if (t == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  const std::size_t chunk = 64;
  auto worker = [&] {
    for (;;) {
      std::size_t lo = next.fetch_add(chunk);
      if (lo >= n) return;
      for (std::size_t i = lo; i < std::min(n, lo + chunk); ++i) fn(i);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k + 1 < t; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

namespace {

enum class Outcome : std::uint8_t { Escaped, Stayed, Error };

struct SampleResult {
  Outcome outcome = Outcome::Stayed;
  bool shadowed = false;
};

// Small points on the forward orbits of the asymptotic values.
std::vector<Complex> asymptotic_orbit_points(const FunctionModel& model, int max_iter) {
  std::vector<Complex> pts;
  for (const auto& g : model.asymptotic_report().groups) {
    auto rec = iterate_orbit(model, LogComplex::from_complex(g.value), orbit_options_for(model, max_iter));
    for (const auto& w : rec.points) {
      if (w.is_zero()) {
        pts.emplace_back();
      } else if (!w.saturated && w.arg_valid && w.representable()) {
        pts.push_back(w.to_complex());
      }
    }
  }
  return pts;
}

SampleResult run_sample(const FunctionModel& model, Complex z, const OrbitOptions& opt,
                        const std::vector<Complex>& shadow_pts, double eps_shadow) {
  SampleResult r;
  OrbitRecord rec = iterate_orbit(model, LogComplex::from_complex(z), opt);
  if (rec.stop_reason == StopReason::ErrorState) {
    r.outcome = Outcome::Error;
  } else if (rec.stop_reason == StopReason::Saturated || std::holds_alternative<ExponentialEscape>(rec.classification)) {
    r.outcome = Outcome::Escaped;
  }
  for (size_t i = 1; i < rec.points.size() && !r.shadowed; ++i) {
    const auto& w = rec.points[i];
    if (w.saturated || !w.representable() || (!w.is_zero() && !w.arg_valid)) continue;
    Complex c = w.to_complex();
    for (Complex a : shadow_pts) {
      if (std::abs(c - a) <= eps_shadow * std::max(1.0, std::abs(a))) {
        r.shadowed = true;
        break;
      }
    }
  }
  return r;
}

void finish(DensityEstimate& d) {
  d.fraction = d.n_samples > 0 ? static_cast<double>(d.n_hit) / d.n_samples : 0.0;
  auto [lo, hi] = wilson_interval(d.n_hit, d.n_samples);
  d.ci95_low = std::min(lo, d.fraction);
  d.ci95_high = std::max(hi, d.fraction);
}

}  // namespace

DensityEstimate estimate_escape_density(const FunctionModel& model, const SquareRegion& region, int n, int max_iter,
                                        std::uint64_t seed, double eps_shadow, int threads) {
  if (n < 1) throw InvalidParams("sample count must be positive");
  OrbitOptions opt = orbit_options_for(model, max_iter);
  auto shadow = asymptotic_orbit_points(model, max_iter);
  std::vector<SampleResult> res(static_cast<size_t>(n));
  parallel_for(res.size(), resolve_threads(threads), [&](std::size_t i) {
    double u = uniform01(seed, i, 0), v = uniform01(seed, i, 1);
    Complex z = region.center + region.half_side * Complex(2.0 * u - 1.0, 2.0 * v - 1.0);
    res[i] = run_sample(model, z, opt, shadow, eps_shadow);
  });
  DensityEstimate d;
  d.region = region;
  d.n_samples = n;
  d.hit_predicate = HitPredicate::EscapedOrShadowsA;
  for (const auto& r : res) {
    d.n_hit += r.outcome == Outcome::Escaped;
    d.error_count += r.outcome == Outcome::Error;
    d.shadow_count += r.shadowed;
  }
  finish(d);
  return d;
}

std::vector<AnnulusEstimate> estimate_nonescaping_tail(const FunctionModel& model, const std::vector<double>& radii,
                                                       int n_per_annulus, int max_iter, std::uint64_t seed,
                                                       int threads) {
  std::vector<AnnulusEstimate> out;
  if (n_per_annulus <= 0) return out;
  if (radii.size() < 2) throw InvalidParams("need at least two radii");
  for (size_t k = 0; k + 1 < radii.size(); ++k) {
    if (!(radii[k] < radii[k + 1])) throw InvalidParams("radii must be strictly ascending");
  }
  OrbitOptions opt = orbit_options_for(model, max_iter);
  auto shadow = asymptotic_orbit_points(model, max_iter);
  const std::size_t n = static_cast<std::size_t>(n_per_annulus);
  for (size_t k = 0; k < radii.size(); ++k) {
    double R = radii[k];
    std::vector<SampleResult> res(n);
    // Each annulus gets its own counter range so annuli are independent.
    std::uint64_t base = static_cast<std::uint64_t>(k) * n;
    parallel_for(n, resolve_threads(threads), [&](std::size_t i) {
      double u = uniform01(seed, base + i, 0), v = uniform01(seed, base + i, 1);
      double r = std::sqrt(R * R + (2.0 * R + 1.0) * u);
      res[i] = run_sample(model, std::polar(r, kTwoPi * v), opt, shadow, 1e-3);
    });
    AnnulusEstimate a;
    a.R = R;
    a.nonescaping.r_inner = R;
    a.nonescaping.r_outer = R + 1.0;
    a.nonescaping.n_samples = n_per_annulus;
    a.nonescaping.hit_predicate = HitPredicate::NonEscaping;
    for (const auto& r : res) {
      a.nonescaping.n_hit += r.outcome == Outcome::Stayed;
      a.nonescaping.error_count += r.outcome == Outcome::Error;
      a.nonescaping.shadow_count += r.shadowed;
    }
    finish(a.nonescaping);
    a.tail_term = a.nonescaping.fraction * kTwoPi * (R + 0.5);
    out.push_back(a);
  }
  return out;
}

ChannelGeometry channel_gap_geometry(const FunctionModel& model, double R, double delta_prime) {
  const auto& geom = model.geometry();
  if (!(R > geom.M)) throw InvalidParams("R must exceed M");
  const int d = geom.deg_q;
  const double aq = std::abs(geom.q);
  const double scale = std::pow(R, 1.0 - d) / aq;
  const double frac = (1.0 - 3.0 * delta_prime) / d;
  ChannelGeometry out;
  out.channel_width_lb = frac * kTwoPi * scale;
  out.gap_width_ub = (2.0 - frac) * kPi * scale;

  // Zero of Re Q on the circle nearest the leading-term estimate.
  const Polynomial& Q = model.spec().Q();
  auto re_q = [&](double th) { return poly_eval(Q, std::polar(R, th)).real(); };
  double th0 = (kPi / 2 - std::arg(geom.q)) / d;
  double lo = th0 - kPi / (2 * d), hi = th0 + kPi / (2 * d);
  double flo = re_q(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-16 * std::max(1.0, std::fabs(th0)); ++i) {
    double mid = 0.5 * (lo + hi);
    double fm = re_q(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  double thc = 0.5 * (lo + hi);
  out.channel_center_angle = thc;

  auto member = [&](double th) { return in_G(geom, model.spec(), LogComplex::polar(std::log(R), th)).member; };
  auto half_width = [&](double dir) {
    double limit = kPi / (2 * d);
    double s = 1e-15 * std::max(1.0, std::fabs(thc));
    while (s < limit && !member(thc + dir * s)) s *= 2.0;
    if (s >= limit) return limit;
    double a = s / 2, b = s;  // a outside G, b inside
    for (int i = 0; i < 200 && b - a > 1e-15 * b; ++i) {
      double m = 0.5 * (a + b);
      (member(thc + dir * m) ? b : a) = m;
    }
    return 0.5 * (a + b);
  };
  out.empirical_channel_width = R * (half_width(1.0) + half_width(-1.0));
  return out;
}

}  // namespace etf
