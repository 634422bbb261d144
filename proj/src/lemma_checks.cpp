#include "etf/lemma_checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace etf {

namespace {

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string num(Complex z) { return "(" + num(z.real()) + "," + num(z.imag()) + ")"; }

LogComplex lc(Complex z) { return LogComplex::from_complex(z); }

// Records one sample: margin < -slack is a violation. Keeps the tightest
// passing sample as a witness too, so equality cases are visible.
struct Recorder {
  explicit Recorder(CheckResult& r) : res(r) {}
  CheckResult& res;
  Witness tightest;
  double tight_margin = kInf;

  void add(double margin, const std::string& input, double observed, double bound) {
    ++res.n_samples;
    res.worst_margin = std::min(res.worst_margin, margin);
    if (margin < -res.slack) {
      ++res.n_violations;
      if (res.witnesses.size() < 20) res.witnesses.push_back({input, observed, bound});
    } else if (margin < tight_margin) {
      tight_margin = margin;
      tightest = {input, observed, bound};
    }
  }
  void finish() {
    if (std::isfinite(tight_margin)) res.witnesses.push_back(tightest);
  }
};

double rel_margin_lower(double obs, double lo) { return (obs - lo) / std::max(std::fabs(lo), 1e-300); }
double rel_margin_upper(double obs, double hi) { return (hi - obs) / std::max(std::fabs(hi), 1e-300); }

int winding_number(const std::vector<Complex>& curve, Complex w) {
  double total = 0.0;
  for (size_t k = 0; k < curve.size(); ++k) {
    Complex a = curve[k] - w;
    Complex b = curve[(k + 1) % curve.size()] - w;
    total += std::arg(b / a);
  }
  return static_cast<int>(std::lround(total / kTwoPi));
}

}  // namespace

std::string CheckResult::to_text() const {
  std::ostringstream os;
  os << "check: " << name << "\n";
  os << "samples: " << n_samples << "\n";
  os << "violations: " << n_violations << "\n";
  if (n_skipped) os << "skipped: " << n_skipped << "\n";
  os << "worst_margin: " << num(worst_margin) << "\n";
  os << "slack: " << num(slack) << "\n";
  for (const auto& w : witnesses) {
    os << "witness: " << w.input << " observed=" << num(w.observed) << " bound=" << num(w.bound) << "\n";
  }
  for (const auto& n : notes) os << "note: " << n << "\n";
  os << "status: " << (passed() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

LogComplex HolomorphicMap::value_log(Complex z) const { return f_log ? f_log(z) : lc(f(z)); }
LogComplex HolomorphicMap::derivative_log(Complex z) const { return df_log ? df_log(z) : lc(df(z)); }

HolomorphicMap identity_map() {
  return {"identity", [](Complex z) { return z; }, [](Complex) { return Complex(1.0); }, {}, {},
          [](Complex w) { return w; }};
}

HolomorphicMap koebe_map(double rotation) {
  Complex u = std::polar(1.0, rotation);
  HolomorphicMap m;
  m.name = rotation == 0.0 ? "koebe" : "koebe-rotated-" + num(rotation);
  m.f = [u](Complex z) {
    Complex v = u * z;
    return v / ((1.0 - v) * (1.0 - v)) / u;
  };
  m.df = [u](Complex z) {
    Complex v = u * z;
    return (1.0 + v) / ((1.0 - v) * (1.0 - v) * (1.0 - v));
  };
  return m;
}

HolomorphicMap normalized_exp_map(double r) {
  HolomorphicMap m;
  m.name = "normalized-exp-" + num(r);
  m.f = [r](Complex z) { return (std::exp(r * z) - 1.0) / r; };
  m.df = [r](Complex z) { return std::exp(r * z); };
  return m;
}

HolomorphicMap affine_map(Complex a, Complex b) {
  return {"affine", [a, b](Complex z) { return a * z + b; }, [a](Complex) { return a; }, {}, {},
          [a, b](Complex w) { return (w - b) / a; }};
}

HolomorphicMap square_map() {
  return {"square", [](Complex z) { return z * z; }, [](Complex z) { return 2.0 * z; }, {}, {},
          [](Complex w) { return std::sqrt(w); }};
}

HolomorphicMap exp_map() {
  HolomorphicMap m{"exp", [](Complex z) { return std::exp(z); }, [](Complex z) { return std::exp(z); }, {}, {},
                   [](Complex w) { return std::log(w); }};
  m.f_log = [](Complex z) { return lc_exp(lc(z)); };
  m.df_log = m.f_log;
  return m;
}

HolomorphicMap model_map(const FunctionModel& model) {
  HolomorphicMap m;
  m.name = model.spec().name.empty() ? "model" : model.spec().name;
  const FunctionModel* p = &model;
  m.f = [p](Complex z) { return p->evaluate(z); };
  m.df = [p](Complex z) { return p->derivative(z); };
  // f - s with s the nearest asymptotic value: the checks only use
  // differences, and f itself rounds to s deep in a valley.
  if (model.spec().is_integral())
    m.f_log = [p](Complex z) { return p->remainder(z); };
  else
    m.f_log = [p](Complex z) { return p->step(lc(z)).value; };
  m.df_log = [p](Complex z) { return p->derivative(lc(z)); };
  return m;
}

CheckResult check_koebe_bounds(const HolomorphicMap& map, int grid_n, int n_boundary) {
  CheckResult res;
  res.name = "koebe_bounds:" + map.name;
  res.slack = 1e-12;
  Recorder rec(res);

  if (std::abs(map.f(0.0)) > 1e-14 || std::abs(map.df(0.0) - 1.0) > 1e-14) {
    res.notes.push_back("map is not normalized: f(0) = " + num(map.f(0.0)) + ", f'(0) = " + num(map.df(0.0)));
    ++res.n_violations;
  }

  std::vector<double> radii;
  for (int i = 1; i <= grid_n; ++i) radii.push_back(0.95 * i / grid_n);
  for (double r : {0.25, 0.5, 0.75}) radii.push_back(r);
  for (double rho : radii) {
    for (int j = 0; j < grid_n; ++j) {
      Complex z = std::polar(rho, kTwoPi * j / grid_n);
      Complex fz = map.f(z), dfz = map.df(z);
      std::string in = "z=" + num(z);
      double g = std::abs(fz);
      double glo = rho / ((1 + rho) * (1 + rho)), ghi = rho / ((1 - rho) * (1 - rho));
      rec.add(std::min(rel_margin_lower(g, glo), rel_margin_upper(g, ghi)), in + " |f|", g,
              rel_margin_lower(g, glo) < rel_margin_upper(g, ghi) ? glo : ghi);
      double d = std::abs(dfz);
      double dlo = (1 - rho) / std::pow(1 + rho, 3), dhi = (1 + rho) / std::pow(1 - rho, 3);
      rec.add(std::min(rel_margin_lower(d, dlo), rel_margin_upper(d, dhi)), in + " |f'|", d,
              rel_margin_lower(d, dlo) < rel_margin_upper(d, dhi) ? dlo : dhi);
      double q = std::abs(z * dfz / fz);
      double qlo = (1 - rho) / (1 + rho), qhi = (1 + rho) / (1 - rho);
      rec.add(std::min(rel_margin_lower(q, qlo), rel_margin_upper(q, qhi)), in + " |z f'/f|", q,
              rel_margin_lower(q, qlo) < rel_margin_upper(q, qhi) ? qlo : qhi);
    }
  }

  // One quarter of the radius is covered: B(0, rho/4) inside f(B(0, rho)).
  const double rho_b = 0.999;
  std::vector<Complex> curve(static_cast<size_t>(n_boundary));
  for (int k = 0; k < n_boundary; ++k) curve[static_cast<size_t>(k)] = map.f(std::polar(rho_b, kTwoPi * k / n_boundary));
  double r_in = rho_b / 4 * (1 - 1e-6);
  std::vector<Complex> targets{0.0};
  for (int k = 0; k < 64; ++k) targets.push_back(std::polar(r_in, kTwoPi * k / 64));
  for (int k = 0; k < 16; ++k) targets.push_back(std::polar(r_in / 2, kTwoPi * k / 16));
  for (Complex w : targets) {
    int wn = winding_number(curve, w);
    rec.add(wn == 1 ? 0.0 : -1.0, "quarter-disk w=" + num(w) + " rho=" + num(rho_b), wn, 1.0);
  }
  rec.finish();
  return res;
}

CheckResult check_ball_image_inclusion(const HolomorphicMap& map, Complex z0, double r, int n_boundary) {
  CheckResult res;
  res.name = "ball_image_inclusion:" + map.name;
  Recorder rec(res);
  double inf_d = kInf, sup_d = 0.0;
  const int m = 32, na = 64;
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; j < (i == 0 ? 1 : na); ++j) {
      double d = std::abs(map.df(z0 + std::polar(r * i / m, kTwoPi * j / na)));
      inf_d = std::min(inf_d, d);
      sup_d = std::max(sup_d, d);
    }
  }
  double gap = kTwoPi * r / n_boundary;
  res.slack = 2.0 * gap * sup_d;
  Complex f0 = map.f(z0);
  double observed = kInf;
  Complex arg_min;
  for (int k = 0; k < n_boundary; ++k) {
    Complex z = z0 + std::polar(r, kTwoPi * k / n_boundary);
    double d = std::abs(map.f(z) - f0);
    if (d < observed) {
      observed = d;
      arg_min = z;
    }
  }
  double bound = inf_d * r;
  // Margin in absolute units so the slack compares like with like.
  rec.add(observed - bound, "z0=" + num(z0) + " r=" + num(r) + " argmin=" + num(arg_min), observed, bound);
  res.n_samples = n_boundary;
  rec.finish();
  return res;
}

std::vector<DistortionReport> estimate_distortion(const HolomorphicMap& map, const SquareRegion& square,
                                                  const std::vector<double>& c_list, int grid_n) {
  std::vector<DistortionReport> out;
  int g = std::max(grid_n, 2);
  for (double c : c_list) {
    double lo = kInf, hi = -kInf;
    double h = c * square.half_side;
    for (int i = 0; i < g; ++i) {
      for (int j = 0; j < g; ++j) {
        Complex z = square.center + h * Complex(-1.0 + 2.0 * i / (g - 1), -1.0 + 2.0 * j / (g - 1));
        double l = map.derivative_log(z).total_log_mod();
        lo = std::min(lo, l);
        hi = std::max(hi, l);
      }
    }
    out.push_back({square, c, std::exp(hi - lo)});
  }
  return out;
}

CheckResult check_condition_a(const FunctionModel& model, const ParameterSet& params, int n, double rmin, double rmax,
                              std::uint64_t seed) {
  if (!model.spec().is_integral()) throw Unsupported("condition (a) needs finite asymptotic values");
  CheckResult res;
  res.name = "condition_a:" + model.spec().name;
  res.slack = 1e-9;
  Recorder rec(res);
  const auto& f = model.spec().integral_form();
  Polynomial dQ = f.Q.derivative();
  std::uint64_t idx = 0;
  const std::uint64_t max_draws = static_cast<std::uint64_t>(n) * 1000 + 1000;
  int accepted = 0;
  while (accepted < n && idx < max_draws) {
    double u = uniform01(seed, idx, 0), v = uniform01(seed, idx, 1);
    ++idx;
    double r = std::sqrt(rmin * rmin + (rmax * rmax - rmin * rmin) * u);
    Complex z = std::polar(r, kTwoPi * v);
    LogComplex lz = lc(z);
    GMembership g = in_G(model.geometry(), model.spec(), lz);
    if (!g.member) {
      ++res.n_skipped;
      continue;
    }
    ++accepted;
    Complex s = nearest_asymptotic(model.geometry(), lz).second;
    // Work with (f - s) e^{-Q} and f' e^{-Q} = P so that the ratio never
    // subtracts two log-moduli of size Re Q.
    Complex Qz = poly_eval(f.Q, z);
    Complex scaled = r <= model.R_switch() ? model.scaled_remainder(z) : poly_eval(f.P, z) / poly_eval(dQ, z);
    double lrem = Qz.real() + std::log(std::abs(scaled));
    double log_z = std::log(r);
    double ze = std::pow(r, params.epsilon);
    std::string in = "seed=" + std::to_string(seed) + " index=" + std::to_string(idx - 1) + " z=" + num(z);

    if (g.re_q_sign < 0) {
      rec.add((-ze - lrem) / ze, in + " log|f-s|", lrem, -ze);
    } else {
      double lf = lrem;
      if (lrem < 700.0) lf = lc_add(lc(s), lc_mul(lc_exp(lc(Qz)), lc(scaled))).total_log_mod();
      rec.add((lf - ze) / ze, in + " log|f|", lf, ze);
    }
    double ratio = std::log(std::abs(poly_eval(f.P, z))) - std::log(std::abs(scaled));
    double lo = params.delta1 * log_z, hi = params.delta2 * log_z;
    rec.add((ratio - lo) / log_z, in + " log|f'/(f-s)| lower", ratio, lo);
    rec.add((hi - ratio) / log_z, in + " log|f'/(f-s)| upper", ratio, hi);
  }
  if (accepted < n) res.notes.push_back("only " + std::to_string(accepted) + " points of G found in the range");
  res.notes.push_back("samples in G: " + std::to_string(accepted));
  rec.finish();
  return res;
}

bool detects_collision(const HolomorphicMap& map, Complex z1, Complex z2) {
  if (std::abs(z1 - z2) <= 1e-9) return false;
  LogComplex a = map.value_log(z1), b = map.value_log(z2);
  LogComplex d = lc_add(a, lc_neg(b));
  if (d.is_zero()) return true;
  return d.total_log_mod() < std::log(1e-9) + a.total_log_mod();
}

double injectivity_radius(const FunctionModel& model, Complex z, double delta_prime) {
  return (1.0 - delta_prime) * kPi / std::abs(poly_eval(model.spec().Q().derivative(), z));
}

CheckResult check_injectivity_radius(const HolomorphicMap& map, Complex z, double radius, int n_pairs,
                                     std::uint64_t seed) {
  CheckResult res;
  res.name = "injectivity_radius:" + map.name;
  Recorder rec(res);
  for (int i = 0; i < n_pairs; ++i) {
    auto pick = [&](std::uint64_t lane) {
      double u = uniform01(seed, static_cast<std::uint64_t>(i), lane);
      double v = uniform01(seed, static_cast<std::uint64_t>(i), lane + 1);
      return z + std::polar(radius * std::sqrt(u), kTwoPi * v);
    };
    Complex z1 = pick(0), z2 = pick(2);
    if (std::abs(z1 - z2) <= 1e-9) {
      ++res.n_skipped;
      continue;
    }
    LogComplex a = map.value_log(z1), b = map.value_log(z2);
    LogComplex d = lc_add(a, lc_neg(b));
    double rel = d.is_zero() ? -kInf : d.total_log_mod() - a.total_log_mod();
    double margin = rel - std::log(1e-9);  // in nats above the collision threshold
    rec.add(margin, "seed=" + std::to_string(seed) + " pair=" + std::to_string(i) + " z1=" + num(z1) + " z2=" + num(z2),
            rel, std::log(1e-9));
  }
  res.notes.push_back("ball center " + num(z) + ", radius " + num(radius));
  rec.finish();
  return res;
}

Shape image_of_square(const HolomorphicMap& map, const SquareRegion& square, int grid_n) {
  if (!map.inverse) throw InvalidParams("image_of_square needs an inverse");
  Shape s;
  s.name = map.name + "(square " + num(square.center) + " half " + num(square.half_side) + ")";
  double lo_re = kInf, lo_im = kInf, hi_re = -kInf, hi_im = -kInf;
  const int nb = 4 * std::max(grid_n, 16);
  for (int k = 0; k < nb; ++k) {
    double t = -1.0 + 2.0 * (k % (nb / 4)) / (nb / 4);
    Complex e;
    switch (k / (nb / 4)) {
      case 0: e = {t, -1}; break;
      case 1: e = {1, t}; break;
      case 2: e = {-t, 1}; break;
      default: e = {-1, -t}; break;
    }
    Complex w = map.f(square.center + square.half_side * e);
    lo_re = std::min(lo_re, w.real());
    hi_re = std::max(hi_re, w.real());
    lo_im = std::min(lo_im, w.imag());
    hi_im = std::max(hi_im, w.imag());
  }
  double pad = 0.05 * std::max(hi_re - lo_re, hi_im - lo_im);
  s.lo = {lo_re - pad, lo_im - pad};
  s.hi = {hi_re + pad, hi_im + pad};
  auto inv = map.inverse;
  SquareRegion sq = square;
  s.inside = [inv, sq](Complex w) {
    Complex z = inv(w) - sq.center;
    return std::fabs(z.real()) < sq.half_side && std::fabs(z.imag()) < sq.half_side;
  };
  s.k = estimate_distortion(map, square, {1.0}, grid_n).front().sup_inf_ratio;
  return s;
}

namespace {

struct Raster {
  int res = 0;
  double px = 0.0;
  Complex origin;
  std::vector<std::uint8_t> in;

  Complex center(int i, int j) const { return origin + Complex((i + 0.5) * px, (j + 0.5) * px); }
  bool at(int i, int j) const {
    if (i < 0 || j < 0 || i >= res || j >= res) return false;
    return in[static_cast<size_t>(j) * static_cast<size_t>(res) + static_cast<size_t>(i)] != 0;
  }
};

Raster make_raster(const Shape& shape, int res) {
  Raster r;
  r.res = res;
  double w = shape.hi.real() - shape.lo.real(), h = shape.hi.imag() - shape.lo.imag();
  r.px = std::max(w, h) / res;
  r.origin = shape.lo;
  r.in.assign(static_cast<size_t>(res) * static_cast<size_t>(res), 0);
  for (int j = 0; j < res; ++j) {
    for (int i = 0; i < res; ++i) {
      r.in[static_cast<size_t>(j) * static_cast<size_t>(res) + static_cast<size_t>(i)] = shape.inside(r.center(i, j));
    }
  }
  return r;
}

double cross(Complex o, Complex a, Complex b) {
  return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
}

// Diameter of the union of inside pixels: convex hull of row-extreme corners.
double raster_diam(const Raster& r) {
  std::vector<Complex> pts;
  for (int j = 0; j < r.res; ++j) {
    int lo = -1, hi = -1;
    for (int i = 0; i < r.res; ++i) {
      if (r.at(i, j)) {
        if (lo < 0) lo = i;
        hi = i;
      }
    }
    if (lo < 0) continue;
    for (int dj : {0, 1}) {
      pts.push_back(r.origin + Complex(lo * r.px, (j + dj) * r.px));
      pts.push_back(r.origin + Complex((hi + 1) * r.px, (j + dj) * r.px));
    }
  }
  if (pts.size() < 2) return 0.0;
  std::sort(pts.begin(), pts.end(), [](Complex a, Complex b) {
    return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
  });
  std::vector<Complex> hull(2 * pts.size());
  size_t k = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  double best = 0.0;
  for (size_t a = 0; a < hull.size(); ++a) {
    for (size_t b = a + 1; b < hull.size(); ++b) best = std::max(best, std::abs(hull[a] - hull[b]));
  }
  return best;
}

// Exact squared Euclidean distance transform of one line (lower envelope of parabolas).
void edt_1d(const std::vector<double>& f, std::vector<double>& d) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(static_cast<size_t>(n));
  std::vector<double> z(static_cast<size_t>(n) + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s;
    for (;;) {
      int p = v[static_cast<size_t>(k)];
      s = ((f[static_cast<size_t>(q)] + q * q) - (f[static_cast<size_t>(p)] + p * p)) / (2.0 * (q - p));
      if (s <= z[static_cast<size_t>(k)] && k > 0) {
        --k;
      } else {
        break;
      }
    }
    if (s <= z[static_cast<size_t>(k)]) {
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      k = 0;
      continue;
    }
    ++k;
    v[static_cast<size_t>(k)] = q;
    z[static_cast<size_t>(k)] = s;
    z[static_cast<size_t>(k) + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<size_t>(k) + 1] < q) ++k;
    int p = v[static_cast<size_t>(k)];
    d[static_cast<size_t>(q)] = (q - p) * (q - p) + f[static_cast<size_t>(p)];
  }
}

// Squared distance, in pixels, from each pixel center to the nearest outside pixel center.
std::vector<double> distance_to_outside(const Raster& r) {
  const size_t n = static_cast<size_t>(r.res);
  const double big = 1e30;
  std::vector<double> g(n * n);
  for (size_t k = 0; k < n * n; ++k) g[k] = r.in[k] ? big : 0.0;
  std::vector<double> line(n), out(n);
  for (size_t j = 0; j < n; ++j) {
    for (size_t i = 0; i < n; ++i) line[i] = g[j * n + i];
    edt_1d(line, out);
    for (size_t i = 0; i < n; ++i) g[j * n + i] = out[i];
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) line[j] = g[j * n + i];
    edt_1d(line, out);
    for (size_t j = 0; j < n; ++j) g[j * n + i] = out[j];
  }
  return g;
}

RasterStats stats_of(const Raster& r) {
  RasterStats s;
  s.pixel = r.px;
  long count = 0, boundary = 0;
  for (int j = 0; j < r.res; ++j) {
    for (int i = 0; i < r.res; ++i) {
      if (!r.at(i, j)) continue;
      ++count;
      if (!r.at(i - 1, j) || !r.at(i + 1, j) || !r.at(i, j - 1) || !r.at(i, j + 1)) ++boundary;
    }
  }
  s.area = static_cast<double>(count) * r.px * r.px;
  s.boundary_area = static_cast<double>(boundary) * r.px * r.px;
  s.diam = raster_diam(r);
  return s;
}

}  // namespace

RasterStats rasterize(const Shape& shape, int res) { return stats_of(make_raster(shape, res)); }

CheckResult check_quasisquare_bounds(const std::vector<Shape>& shapes, int res) {
  CheckResult res_out;
  res_out.name = "quasisquare_bounds";
  Recorder rec(res_out);
  for (const auto& shape : shapes) {
    Raster r = make_raster(shape, res);
    RasterStats st = stats_of(r);
    double k2 = shape.k * shape.k;
    double dpx = 2.0 * std::sqrt(2.0) * st.pixel;
    // Pixel rounding can move the area by the boundary pixels and the
    // diameter by two pixel diagonals; both go into the comparison.
    double area_bound = std::pow(std::max(st.diam - dpx, 0.0), 2) / (2.0 * k2);
    double area_obs = st.area + st.boundary_area;
    rec.add((area_obs - area_bound) / std::max(area_bound, 1e-300), shape.name + " area k=" + num(shape.k), st.area,
            area_bound);

    auto dist2 = distance_to_outside(r);
    for (double frac : {0.01, 0.05}) {
      double eps = frac * st.diam;
      double lim = eps / st.pixel;
      long band = 0;
      for (size_t k = 0; k < dist2.size(); ++k) {
        if (r.in[k] && dist2[k] <= lim * lim) ++band;
      }
      double band_area = static_cast<double>(band) * st.pixel * st.pixel;
      double band_bound = 4.0 * eps * k2 * (st.diam + dpx);
      double obs = band_area - st.boundary_area;
      rec.add((band_bound - obs) / band_bound, shape.name + " band eps=" + num(eps), band_area, band_bound);
    }
  }
  rec.finish();
  return res_out;
}

CheckResult check_density_transfer(const HolomorphicMap& map, const std::function<bool(Complex)>& M,
                                   const SquareRegion& D, int res) {
  CheckResult out;
  out.name = "density_transfer:" + map.name;
  Recorder rec(out);

  // Density of M in D on D's own grid.
  long in_m = 0, total = 0;
  double px = 2.0 * D.half_side / res;
  Complex origin = D.center - Complex(D.half_side, D.half_side);
  for (int j = 0; j < res; ++j) {
    for (int i = 0; i < res; ++i) {
      ++total;
      in_m += M(origin + Complex((i + 0.5) * px, (j + 0.5) * px));
    }
  }
  double left = static_cast<double>(in_m) / static_cast<double>(total);

  Shape fd = image_of_square(map, D);
  Shape fm = fd;
  auto inv = map.inverse;
  auto inside = fd.inside;
  fm.inside = [inside, inv, &M](Complex w) { return inside(w) && M(inv(w)); };
  Raster rd = make_raster(fd, res), rm = make_raster(fm, res);
  RasterStats sd = stats_of(rd), sm = stats_of(rm);
  double right = sm.area / sd.area;
  double K = fd.k;
  // Each raster density can be off by its boundary pixels.
  out.slack = (sm.boundary_area + sd.boundary_area) / sd.area + 2.0 / res;
  double bound = K * K * right;
  rec.add(bound - left, "D=" + num(D.center) + " half=" + num(D.half_side) + " K=" + num(K), left, bound);
  out.notes.push_back("density in D: " + num(left) + ", density in f(D): " + num(right) + ", K: " + num(K));
  rec.finish();
  return out;
}

CheckResult check_asymptotic_residual(const FunctionModel& model, int n, double rmin, double rmax, std::uint64_t seed,
                                      ResidualFit* fit, double max_slope) {
  if (!model.spec().is_integral()) throw Unsupported("the expansion residual needs the integral form");
  CheckResult res;
  res.name = "asymptotic_residual:" + model.spec().name;
  Recorder rec(res);
  const auto& f = model.spec().integral_form();
  Polynomial dQ = f.Q.derivative();
  const int dp = f.P.degree(), dq = f.Q.degree();
  std::vector<double> xs, ys;
  int exact = 0, accepted = 0;
  double worst = -kInf;
  std::string worst_in;
  std::uint64_t idx = 0;
  const std::uint64_t max_draws = static_cast<std::uint64_t>(n) * 1000 + 1000;
  while (accepted < n && idx < max_draws) {
    double u = uniform01(seed, idx, 0), v = uniform01(seed, idx, 1);
    ++idx;
    double r = std::sqrt(rmin * rmin + (rmax * rmax - rmin * rmin) * u);
    Complex z = std::polar(r, kTwoPi * v);
    if (!in_G(model.geometry(), model.spec(), lc(z)).member) {
      ++res.n_skipped;
      continue;
    }
    ++accepted;
    ++res.n_samples;
    LogComplex rem = model.remainder(z);
    Complex Qz = poly_eval(f.Q, z);
    LogComplex term = lc_div(lc_mul(lc(poly_eval(f.P, z)), lc_exp(lc(Qz))), lc(poly_eval(dQ, z)));
    LogComplex diff = lc_add(rem, lc_neg(term));
    // Differences at the evaluation tolerance mean the expansion is exact.
    if (diff.is_zero() || diff.total_log_mod() < term.total_log_mod() + std::log(1e-10)) {
      ++exact;
      continue;
    }
    double resid = diff.total_log_mod() - (dp - dq) * std::log(r) - Qz.real();
    xs.push_back(std::log(r));
    ys.push_back(resid);
    if (resid > worst) {
      worst = resid;
      worst_in = "seed=" + std::to_string(seed) + " index=" + std::to_string(idx - 1) + " z=" + num(z);
    }
  }
  ResidualFit rf;
  rf.log_C = worst;
  rf.finite_samples = static_cast<int>(xs.size());
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    rf.slope = sxx > 0 ? sxy / sxx : 0.0;
  }
  if (fit) *fit = rf;
  res.worst_margin = max_slope - rf.slope;
  if (rf.slope > max_slope) {
    ++res.n_violations;
    res.witnesses.push_back({"regression over " + std::to_string(xs.size()) + " samples", rf.slope, max_slope});
  }
  if (!worst_in.empty()) res.witnesses.push_back({worst_in + " (largest residual)", worst, rf.log_C});
  res.notes.push_back("fitted log C: " + num(rf.log_C) + ", slope: " + num(rf.slope));
  res.notes.push_back("samples where the expansion is exact to 1e-10: " + std::to_string(exact));
  return res;
}

}  // namespace etf

namespace etf {

namespace {

// Ratios must start >= 1, shrink with c, and approach 1 for small c.
CheckResult distortion_check(const HolomorphicMap& map, const SquareRegion& sq, double limit_at_small_c) {
  CheckResult res;
  res.name = "distortion:" + map.name;
  res.slack = 1e-12;
  Recorder rec(res);
  const std::vector<double> cs{1.0, 0.5, 0.25, 0.1, 0.01};
  auto reps = estimate_distortion(map, sq, cs, 17);
  std::string where = "square center=" + num(sq.center) + " half_side=" + num(sq.half_side);
  for (size_t i = 0; i < reps.size(); ++i) {
    double r = reps[i].sup_inf_ratio;
    std::string in = where + " c=" + num(cs[i]);
    rec.add(r - 1.0, in + " ratio >= 1", r, 1.0);
    if (i > 0) rec.add(reps[i - 1].sup_inf_ratio - r, in + " non-increasing", r, reps[i - 1].sup_inf_ratio);
  }
  double last = reps.back().sup_inf_ratio;
  rec.add(limit_at_small_c - (last - 1.0), where + " c=0.01 close to 1", last - 1.0, limit_at_small_c);
  rec.finish();
  return res;
}

CheckResult collision_witness() {
  CheckResult res;
  res.name = "injectivity_converse:exp";
  Recorder rec(res);
  bool hit = detects_collision(exp_map(), 0.0, Complex(0, kTwoPi));
  bool clean = !detects_collision(exp_map(), 0.0, Complex(0, 1));
  rec.add(hit ? 0.0 : -1.0, "pair (0, 2 pi i) must collide", hit, 1.0);
  rec.add(clean ? 0.0 : -1.0, "pair (0, i) must not collide", !clean, 0.0);
  rec.finish();
  return res;
}

// A point of G with |z| = r where Re Q is largest.
Complex deep_point(const FunctionModel& model, double r) {
  const Polynomial& Q = model.spec().Q();
  return std::polar(r, -std::arg(Q.leading()) / Q.degree());
}

}  // namespace

const std::vector<std::string>& lemma_suite_names() {
  static const std::vector<std::string> names{"koebe",       "ball-inclusion", "distortion", "condition-a",
                                              "injectivity", "quasisquare",    "density",    "residual"};
  return names;
}

std::vector<CheckResult> run_lemma_suite(const FunctionModel* model, const SuiteOptions& opt) {
  bool known = opt.only.empty();
  for (const auto& n : lemma_suite_names()) known = known || n == opt.only;
  if (!known) throw InvalidParams("unknown check '" + opt.only + "'");
  auto want = [&](const char* n) { return opt.only.empty() || opt.only == n; };
  std::vector<CheckResult> out;

  if (want("koebe")) {
    for (const auto& m : {identity_map(), koebe_map(), koebe_map(1.0), normalized_exp_map(1.0)})
      out.push_back(check_koebe_bounds(m, 64));
  }
  if (want("ball-inclusion")) {
    out.push_back(check_ball_image_inclusion(exp_map(), 0.0, 0.5, 4096));
    out.push_back(check_ball_image_inclusion(affine_map(2.0, 1.0), Complex(0.3, -2), 0.7, 4096));
    out.push_back(check_ball_image_inclusion(square_map(), 1.0, 0.5, 4096));
  }
  if (want("distortion")) {
    out.push_back(distortion_check(affine_map(Complex(1, 2), 3.0), {0.0, 0.5}, 1e-12));
    out.push_back(distortion_check(exp_map(), {Complex(0.3, 0.2), 0.005}, 1e-3));
    out.push_back(distortion_check(square_map(), {Complex(0.3, 0.2), 0.005}, 1e-3));
    out.push_back(distortion_check(koebe_map(), {Complex(0.3, 0.2), 0.005}, 1e-3));
    if (model) {
      // A cover-sized square deep in G at |z| = 30.
      double diam = 0.25 * std::pow(30.0, -2.1);
      SquareRegion S{deep_point(*model, 30.0), diam / (2 * std::sqrt(2.0))};
      auto d = estimate_distortion(model_map(*model), S, {0.5}, 9);
      CheckResult res;
      res.name = "distortion:" + model->spec().name;
      Recorder rec(res);
      rec.add(1.5 - d[0].sup_inf_ratio, "square center=" + num(S.center) + " c=0.5", d[0].sup_inf_ratio, 1.5);
      rec.finish();
      res.notes.push_back("diagnostic threshold 1.5 on a square of diameter " + num(diam));
      out.push_back(res);
    }
  }
  if (want("condition-a") && model) {
    if (model->spec().is_integral()) {
      ParameterSet p;
      int d = model->spec().Q().degree();
      p.epsilon = opt.epsilon;
      p.delta1 = d - 1 - 0.1;
      p.delta2 = d - 1 + 0.1;
      out.push_back(check_condition_a(*model, p, opt.condition_samples, opt.rmin, opt.rmax, opt.seed));
    } else {
      CheckResult res;
      res.name = "condition_a:" + model->spec().name;
      res.notes.push_back("skipped: the sum form has no finite asymptotic values");
      out.push_back(res);
    }
  }
  if (want("injectivity")) {
    out.push_back(check_injectivity_radius(exp_map(), 0.0, 0.9 * kPi, 100000, 9));
    out.push_back(check_injectivity_radius(exp_map(), 0.0, 1.1 * kPi, 100000, 10));
    out.push_back(collision_witness());
    if (model) {
      Complex z = deep_point(*model, 30.0);
      out.push_back(check_injectivity_radius(model_map(*model), z, injectivity_radius(*model, z, 0.05), 2000, opt.seed));
    }
  }
  if (want("quasisquare")) {
    Shape unit{"unit-square", [](Complex z) { return z.real() > 0 && z.real() < 1 && z.imag() > 0 && z.imag() < 1; },
               Complex(-0.25, -0.25), Complex(1.25, 1.25), 1.0};
    out.push_back(check_quasisquare_bounds({unit, image_of_square(exp_map(), {Complex(0.2, 0.1), 0.05}),
                                            image_of_square(exp_map(), {Complex(-1, 2), 0.3}),
                                            image_of_square(square_map(), {Complex(1.0, 0.5), 0.2})},
                                           opt.raster));
  }
  if (want("density")) {
    auto left_half = [](Complex z) { return z.real() < 0.0; };
    out.push_back(check_density_transfer(identity_map(), left_half, {0.0, 1.0}, opt.raster));
    out.push_back(check_density_transfer(affine_map(Complex(0.5, -2), Complex(3, 1)), left_half, {0.0, 1.0}, opt.raster));
    out.push_back(check_density_transfer(exp_map(), [](Complex z) { return z.real() < 0.05; }, {Complex(0.05, 0.3), 0.5},
                                         opt.raster));
  }
  if (want("residual")) {
    FunctionModel generic(FunctionSpec::integral(Polynomial::constant(1.0), Polynomial::monomial(1.0, 3), 0.0, "z3"));
    out.push_back(check_asymptotic_residual(generic, 300, 5, 12, 3));
    if (model && model->spec().is_integral()) out.push_back(check_asymptotic_residual(*model, 200, 5, 40, opt.seed));
  }
  return out;
}

}  // namespace etf
