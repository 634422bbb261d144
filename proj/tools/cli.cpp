#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <ostream>

#include "etf/lemma_checks.hpp"
#include "etf/measure_lab.hpp"
#include "etf/renderer.hpp"

namespace etf {

namespace {

// Bad flag values that CLI11 cannot see; reported with exit code 2.
struct UsageError : std::runtime_error {
  UsageError(const std::string& what, std::string fix) : std::runtime_error(what), fix(std::move(fix)) {}
  std::string fix;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string num(double x) { return fmt("%.12g", x); }

std::vector<double> parse_numbers(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t end = s.find(',', pos);
    if (end == std::string::npos) end = s.size();
    std::string item = s.substr(pos, end - pos);
    char* stop = nullptr;
    double v = std::strtod(item.c_str(), &stop);
    if (item.empty() || *stop != '\0' || !std::isfinite(v))
      throw UsageError(flag + ": '" + item + "' is not a number", "use comma-separated decimals such as " + flag + " 1.5,-2");
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

Complex parse_complex(const std::string& s, const std::string& flag) {
  auto v = parse_numbers(s, flag);
  if (v.size() == 1) return {v[0], 0.0};
  if (v.size() == 2) return {v[0], v[1]};
  throw UsageError(flag + ": expected re or re,im, got '" + s + "'", "write the value as " + flag + " 0.5,-1");
}

// Accepts "2pi_i", "-pi", "i", "0.5", "1,2".
Complex parse_lambda(std::string s) {
  const std::string fix = "use a number, re,im, or a multiple of pi with an optional _i such as 2pi_i";
  if (s.find(',') != std::string::npos) return parse_complex(s, "--lambda");
  bool imag = false;
  for (const char* suffix : {"_i", "*i", "i"}) {
    std::string t(suffix);
    if (s.size() >= t.size() && s.compare(s.size() - t.size(), t.size(), t) == 0) {
      s.erase(s.size() - t.size());
      imag = true;
      break;
    }
  }
  double scale = 1.0;
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
    s.erase(s.size() - 2);
    if (!s.empty() && s.back() == '*') s.pop_back();
    scale = kPi;
  }
  double factor = 1.0;
  if (s == "-") {
    factor = -1.0;
  } else if (!s.empty()) {
    char* stop = nullptr;
    factor = std::strtod(s.c_str(), &stop);
    if (*stop != '\0' || !std::isfinite(factor)) throw UsageError("--lambda: cannot parse the value", fix);
  }
  double v = factor * scale;
  return imag ? Complex(0.0, v) : Complex(v, 0.0);
}

struct ModelFlags {
  std::string spec_file;
  std::string preset_name;
  std::string lambda;
  int threads = 0;
};

void add_model_flags(CLI::App* sub, ModelFlags& m, bool threads) {
  sub->add_option("--spec", m.spec_file, "JSON function spec file (default: none)");
  sub->add_option("--preset", m.preset_name, "named preset: rees-exp, hemke-cubic, sinh-cubic (default: none)");
  sub->add_option("--lambda", m.lambda, "rees-exp multiplier, e.g. 2pi_i or 1.5,0.2 (default 1)");
  if (threads) sub->add_option("--threads", m.threads, "worker threads; 0 uses ETF_THREADS, then the hardware");
}

std::optional<FunctionSpec> spec_from(const ModelFlags& m, bool required) {
  if (!m.spec_file.empty() && !m.preset_name.empty())
    throw UsageError("--spec and --preset are mutually exclusive", "pass only one of them");
  if (!m.lambda.empty() && m.preset_name != "rees-exp")
    throw UsageError("--lambda only applies to --preset rees-exp", "drop --lambda or use --preset rees-exp");
  if (!m.spec_file.empty()) return load_spec_file(m.spec_file);
  if (!m.preset_name.empty()) {
    bool known = false;
    for (const auto& n : preset_names()) known = known || n == m.preset_name;
    if (!known) throw UsageError("--preset: unknown preset '" + m.preset_name + "'", "use rees-exp, hemke-cubic or sinh-cubic");
    return preset(m.preset_name, m.lambda.empty() ? Complex(1.0) : parse_lambda(m.lambda));
  }
  if (required) throw UsageError("no function given", "pass --preset NAME or --spec FILE");
  return std::nullopt;
}

// The example's constants, printed so runs can be audited.
void print_constants(const ModelFlags& m, std::ostream& out) {
  if (m.preset_name != "hemke-cubic") return;
  auto k = cubic_example_constants();
  char buf[128];
  std::snprintf(buf, sizeof buf, "constants: a = %.15Lg, b = %.15Lg\n", k.a, k.b);
  out << buf;
}

std::string complex_text(Complex z) { return num(z.real()) + (z.imag() < 0 ? "-" : "+") + num(std::fabs(z.imag())) + "i"; }

int cmd_asymptotic(const ModelFlags& m, double r_max, double tol, std::ostream& out) {
  FunctionSpec spec = *spec_from(m, true);
  print_constants(m, out);
  AsymptoticValueReport rep = asymptotic_values(spec, r_max, tol);
  out << "sector,phi,value_re,value_im,escapes,quadrature_error,tail_bound,radius\n";
  for (size_t k = 0; k < rep.sectors.size(); ++k) {
    const auto& s = rep.sectors[k];
    out << k << "," << num(s.phi) << "," << num(s.value.real()) << "," << num(s.value.imag()) << ","
        << (s.escapes_to_infinity ? "true" : "false") << "," << fmt("%.3g", s.quadrature_error) << ","
        << fmt("%.3g", s.tail_bound) << "," << num(s.radius) << "\n";
  }
  out << "\ngroup,value_re,value_im,multiplicity\n";
  for (size_t g = 0; g < rep.groups.size(); ++g)
    out << g << "," << num(rep.groups[g].value.real()) << "," << num(rep.groups[g].value.imag()) << ","
        << rep.groups[g].multiplicity << "\n";
  return 0;
}

int cmd_orbit(const ModelFlags& m, const std::string& z0s, int max_iter, std::ostream& out) {
  FunctionModel model(*spec_from(m, true));
  print_constants(m, out);
  Complex z0 = parse_complex(z0s, "--z0");
  OrbitRecord rec = iterate_orbit(model, z0, max_iter);
  const double log_switch = std::log(model.R_switch());
  out << "index,log_mod,arg,regime\n";
  for (size_t k = 0; k < rec.points.size(); ++k) {
    const LogComplex& w = rec.points[k];
    std::string regime = w.saturated ? "saturated" : (w.is_zero() || w.total_log_mod() <= log_switch ? "moderate" : "asymptotic");
    std::string lm = w.is_zero() ? "-inf" : fmt("%.12g", w.total_log_mod());
    if (w.saturated && !rec.log_log_mod.empty() && rec.log_log_mod[k]) lm = "exp(" + fmt("%.12g", *rec.log_log_mod[k]) + ")";
    out << k << "," << lm << "," << (w.arg_valid ? fmt("%.12g", w.arg) : "invalid") << "," << regime << "\n";
  }
  out << "classification: " << describe(rec.classification) << "\n";
  out << "stop_reason: " << to_string(rec.stop_reason) << "\n";
  if (rec.delta_hat) out << "delta_hat: " << fmt("%.6g", *rec.delta_hat) << "\n";
  if (!rec.error.empty()) out << "error: step " << rec.error_index << ": " << rec.error << "\n";
  return 0;
}

void print_singular_table(const SingularReport& rep, std::ostream& out) {
  out << "role,multiplicity,singular_point,start,classification,stop_reason,on_cycle\n";
  for (const auto& o : rep.orbits) {
    out << (o.role == SingularRole::Asymptotic ? "asymptotic" : "critical") << "," << o.multiplicity << ","
        << complex_text(o.singular_point) << "," << complex_text(o.value) << ",\"" << describe(o.record.classification)
        << "\"," << to_string(o.record.stop_reason) << "," << (o.on_cycle ? "true" : "false") << "\n";
  }
}

int cmd_singular(const ModelFlags& m, int max_iter, bool with_verdict, std::ostream& out) {
  FunctionModel model(*spec_from(m, true));
  print_constants(m, out);
  SingularReport rep = singular_orbit_report(model, max_iter);
  if (with_verdict) {
    VerdictResult v = recurrence_verdict(rep);
    out << "verdict: " << to_string(v.verdict) << "\n";
    print_singular_table(rep, out);
    for (const auto& line : v.justification) out << "justification: " << line << "\n";
  } else {
    print_singular_table(rep, out);
  }
  return 0;
}

struct MeasureFlags {
  std::string mode = "square";
  std::vector<std::string> centers{"20,0"};
  double half_side = 0.5;
  std::string radii = "2,4,8";
  int n = 10000;
  int max_iter = 200;
  std::uint64_t seed = 1;
  double eps_shadow = 1e-3;
};

void csv_row(std::ostream& out, const std::string& region, const DensityEstimate& d) {
  out << region << "," << d.n_samples << "," << d.n_hit << "," << fmt("%.6f", d.fraction) << ","
      << fmt("%.6f", d.ci95_low) << "," << fmt("%.6f", d.ci95_high) << "," << d.error_count << "\n";
}

int cmd_measure(const ModelFlags& m, const MeasureFlags& f, std::ostream& out) {
  FunctionModel model(*spec_from(m, true));
  if (f.n < 1) throw UsageError("--n must be positive", "pass e.g. --n 10000");
  out << "region,n,hits,fraction,ci_low,ci_high,errors\n";
  if (f.mode == "square") {
    for (const auto& c : f.centers) {
      Complex center = parse_complex(c, "--center");
      SquareRegion sq{center, f.half_side};
      auto d = estimate_escape_density(model, sq, f.n, f.max_iter, f.seed, f.eps_shadow, m.threads);
      csv_row(out, "square[c=" + complex_text(center) + ";h=" + num(f.half_side) + "]", d);
    }
  } else if (f.mode == "annuli") {
    auto radii = parse_numbers(f.radii, "--radii");
    for (const auto& a : estimate_nonescaping_tail(model, radii, f.n, f.max_iter, f.seed, m.threads))
      csv_row(out, "annulus[R=" + num(a.R) + "]", a.nonescaping);
  } else {
    throw UsageError("--mode: unknown mode '" + f.mode + "'", "use --mode square or --mode annuli");
  }
  return 0;
}

struct ScheduleFlags {
  double M0 = 100.0;
  double eps = 0.5;
  double tau = 0.5;
  double beta = 0.0;
  int kmax = 5;
};

int cmd_schedule(const ScheduleFlags& f, std::ostream& out) {
  if (!(f.tau > f.beta) || !(f.tau < 1.0))
    throw UsageError("--tau must satisfy beta < tau < 1", "pick e.g. --tau 0.5 --beta 0");
  Schedule s = mk_schedule(f.M0, f.eps, f.tau, f.kmax, f.beta);
  out << "k,M\n";
  for (size_t k = 0; k < s.M.size(); ++k) out << k << "," << fmt("%.15g", s.M[k]) << "\n";
  out << "capped: " << (s.capped ? "true" : "false") << "\n";
  out << "product: " << fmt("%.15g", s.product) << "\n";
  out << "bound: " << fmt("%.15g", s.bound) << "\n";
  out << "product_check: " << (s.product_check ? "true" : "false") << "\n";
  return s.product_check ? 0 : 1;
}

int cmd_verify(const ModelFlags& m, const SuiteOptions& opt, std::ostream& out) {
  auto spec = spec_from(m, false);
  std::unique_ptr<FunctionModel> model;
  if (spec) model = std::make_unique<FunctionModel>(*spec);
  print_constants(m, out);
  auto results = run_lemma_suite(model.get(), opt);
  int failed = 0;
  for (const auto& r : results) {
    out << r.to_text() << "\n";
    failed += !r.passed();
  }
  out << "checks: " << results.size() << ", failed: " << failed << "\n";
  return failed ? 1 : 0;
}

struct RenderFlags {
  std::string window = "-2,2,-2,2";
  std::string size = "512";
  int max_iter = 200;
  std::string out_path;
  bool jitter = false;
  std::uint64_t seed = 0;
  bool png = false;
};

int cmd_render(const ModelFlags& m, const RenderFlags& f, std::ostream& out) {
  if (f.png) throw UsageError("--png: no PNG encoder in this build", "drop --png; PPM output is always written");
  FunctionModel model(*spec_from(m, true));
  ImageSpec img;
  auto w = parse_numbers(f.window, "--window");
  if (w.size() != 4) throw UsageError("--window needs re_min,re_max,im_min,im_max", "e.g. --window -2,2,-2,2");
  img.window = {w[0], w[1], w[2], w[3]};
  size_t x = f.size.find('x');
  try {
    img.width = std::stoi(f.size.substr(0, x));
    img.height = x == std::string::npos ? img.width : std::stoi(f.size.substr(x + 1));
  } catch (const std::exception&) {
    throw UsageError("--size: cannot parse '" + f.size + "'", "use N or WxH such as --size 512 or --size 640x480");
  }
  img.max_iter = f.max_iter;
  img.jitter = f.jitter;
  img.seed = f.seed;
  img.threads = m.threads;
  img.validate();
  Rendering r = render_classification(model, img);
  write_ppm(r.image, f.out_path);
  out << "wrote " << f.out_path << " (" << img.width << "x" << img.height << ")\n";
  for (PixelClass c : {PixelClass::Escaping, PixelClass::Attracted, PixelClass::Preperiodic, PixelClass::Undecided,
                       PixelClass::Error})
    out << to_string(c) << ": " << r.count(c) << "\n";
  out << "basins: " << r.basin_representatives.size() << "\n";
  for (size_t b = 0; b < r.basin_representatives.size(); ++b)
    out << "basin " << b << ": cycle point " << complex_text(r.basin_representatives[b]) << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamics of exponential-type entire functions: orbits, verdicts, densities, lemma checks, images.",
               "etf"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_help_all_flag("--help-all", "help for every subcommand");

  ModelFlags model;
  double r_max = 1e3, tol = 1e-12;
  auto* asym = app.add_subcommand("asymptotic-values", "asymptotic values per sector and their groups (CSV)");
  add_model_flags(asym, model, false);
  asym->add_option("--R-max", r_max, "longest ray integrated before the tail bound takes over");
  asym->add_option("--tol", tol, "quadrature tolerance");

  std::string z0 = "0,0";
  int max_iter = 200;
  auto* orbit = app.add_subcommand("orbit", "iterate one point and classify its orbit");
  add_model_flags(orbit, model, false);
  orbit->add_option("--z0", z0, "starting point re,im");
  orbit->add_option("--max-iter", max_iter, "iteration budget")->check(CLI::PositiveNumber);

  auto* singular = app.add_subcommand("singular-report", "orbits of the asymptotic and critical values");
  add_model_flags(singular, model, false);
  singular->add_option("--max-iter", max_iter, "iteration budget per orbit")->check(CLI::PositiveNumber);

  auto* verdict = app.add_subcommand("verdict", "recurrence verdict from the singular orbits");
  add_model_flags(verdict, model, false);
  verdict->add_option("--max-iter", max_iter, "iteration budget per orbit")->check(CLI::PositiveNumber);

  MeasureFlags mf;
  auto* measure = app.add_subcommand("measure", "Monte Carlo escape densities (CSV)");
  add_model_flags(measure, model, true);
  measure->add_option("--mode", mf.mode, "square: escape density of squares; annuli: non-escaping fraction of R <= |z| <= R+1")
      ->check(CLI::IsMember({"square", "annuli"}));
  measure->add_option("--center", mf.centers, "square center re,im; repeat for several squares");
  measure->add_option("--half-side", mf.half_side, "half side of each square")->check(CLI::PositiveNumber);
  measure->add_option("--radii", mf.radii, "inner radii of the annuli, comma separated");
  measure->add_option("--n", mf.n, "samples per region")->check(CLI::PositiveNumber);
  measure->add_option("--max-iter", mf.max_iter, "iteration budget per sample")->check(CLI::PositiveNumber);
  measure->add_option("--seed", mf.seed, "sampling seed");
  measure->add_option("--eps-shadow", mf.eps_shadow, "distance for following the orbit of the asymptotic value");

  ScheduleFlags sf;
  auto* schedule = app.add_subcommand("schedule", "the radius sequence M_k and its product check");
  schedule->add_option("--M0", sf.M0, "starting radius");
  schedule->add_option("--eps", sf.eps, "growth exponent epsilon");
  schedule->add_option("--tau", sf.tau, "exponent tau");
  schedule->add_option("--beta", sf.beta, "exponent beta");
  schedule->add_option("--kmax", sf.kmax, "last index")->check(CLI::NonNegativeNumber);

  SuiteOptions so;
  auto* verify = app.add_subcommand("verify-lemmas", "numerical checks of the distortion and density lemmas");
  add_model_flags(verify, model, false);
  verify->add_option("--only", so.only, "run one check family (default: all)")->check(CLI::IsMember(lemma_suite_names()));
  verify->add_option("--n", so.condition_samples, "samples in G for condition (a)")->check(CLI::PositiveNumber);
  verify->add_option("--rmin", so.rmin, "smallest |z| for condition (a)");
  verify->add_option("--rmax", so.rmax, "largest |z| for condition (a)");
  verify->add_option("--epsilon", so.epsilon, "exponent of the dichotomy in condition (a)");
  verify->add_option("--seed", so.seed, "sampling seed");
  verify->add_option("--raster", so.raster, "raster resolution for area checks")->check(CLI::PositiveNumber);

  RenderFlags rf;
  auto* render = app.add_subcommand("render", "classification image as binary PPM");
  add_model_flags(render, model, true);
  render->add_option("--window", rf.window, "re_min,re_max,im_min,im_max");
  render->add_option("--size", rf.size, "N for N x N pixels, or WxH");
  render->add_option("--max-iter", rf.max_iter, "iteration budget per pixel")->check(CLI::PositiveNumber);
  render->add_option("--out", rf.out_path, "output file")->required();
  render->add_flag("--jitter", rf.jitter, "random sub-pixel offsets drawn from --seed (default off)");
  render->add_option("--seed", rf.seed, "jitter seed");
  render->add_flag("--png", rf.png, "PNG output, not available in this build (default off)");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*asym) return cmd_asymptotic(model, r_max, tol, out);
    if (*orbit) return cmd_orbit(model, z0, max_iter, out);
    if (*singular) return cmd_singular(model, max_iter, false, out);
    if (*verdict) return cmd_singular(model, max_iter, true, out);
    if (*measure) return cmd_measure(model, mf, out);
    if (*schedule) return cmd_schedule(sf, out);
    if (*verify) return cmd_verify(model, so, out);
    if (*render) return cmd_render(model, rf, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\nfix: " << e.fix << "\n";
    return 2;
  } catch (const InvalidSpec& e) {
    err << "error: " << e.what() << "\nfix: check the spec file against the documented JSON schema\n";
    return 2;
  } catch (const InvalidParams& e) {
    err << "error: " << e.what() << "\nfix: adjust the parameter named above\n";
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: computation failed: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace etf
