#include "etf/orbit_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace etf {

namespace {

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string fmt_complex(Complex z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.10g%+.10gi", z.real(), z.imag());
  return buf;
}

bool close(Complex a, Complex b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(a)); }

// Orbit values that take part in cycle detection; large points never do.
struct SmallSeq {
  std::vector<Complex> z;
  std::vector<bool> ok;

  void push(const LogComplex& w, double radius) {
    bool small = w.is_zero() ||
                 (!w.saturated && w.arg_valid && w.representable() && w.total_log_mod() <= std::log(radius));
    ok.push_back(small);
    z.push_back(small ? w.to_complex() : Complex{});
  }
  // Smallest period ending at index n, or 0.
  int period_at(size_t n, double tol, int max_period) const {
    if (!ok[n]) return 0;
    for (int p = 1; p <= max_period && static_cast<size_t>(p) <= n; ++p) {
      size_t m = n - static_cast<size_t>(p);
      if (ok[m] && close(z[n], z[m], tol)) return p;
    }
    return 0;
  }
  int preperiod(size_t n, int p, double tol) const {
    for (size_t m = 0; m + static_cast<size_t>(p) <= n; ++m) {
      size_t k = m + static_cast<size_t>(p);
      if (ok[m] && ok[k] && close(z[k], z[m], tol)) return static_cast<int>(m);
    }
    return static_cast<int>(n) - p;
  }
};

double multiplier_log_mod(const FunctionModel& model, const std::vector<LogComplex>& pts, size_t end, int period) {
  double sum = 0.0;
  for (int j = 0; j < period; ++j) {
    LogComplex d = model.derivative(pts[end - static_cast<size_t>(j)]);
    if (d.is_zero()) return -kInf;
    sum += d.total_log_mod();
  }
  return sum;
}

OrbitClassification classify_cycle(int preperiod, int period, double mult) {
  // A neutral multiplier is not attraction; keep it with the exact revisits.
  if (mult < -1e-9) return AttractedToCycle{period, mult};
  return Preperiodic{preperiod, period};
}

}  // namespace

std::string describe(const OrbitClassification& c) {
  if (auto* e = std::get_if<ExponentialEscape>(&c)) return "ExponentialEscape{delta_hat=" + fmt("%.4f", e->delta_hat) + "}";
  if (auto* p = std::get_if<Preperiodic>(&c)) {
    return "Preperiodic{preperiod=" + std::to_string(p->preperiod) + ", period=" + std::to_string(p->period) + "}";
  }
  if (auto* a = std::get_if<AttractedToCycle>(&c)) {
    return "AttractedToCycle{period=" + std::to_string(a->period) +
           ", multiplier_log_mod=" + fmt("%.4g", a->multiplier_log_mod) + "}";
  }
  return "Undecided{last_log_mod=" + fmt("%.6g", std::get<Undecided>(c).last_log_mod) + "}";
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Saturated: return "Saturated";
    case StopReason::CycleFound: return "CycleFound";
    case StopReason::BudgetExhausted: return "BudgetExhausted";
    case StopReason::ErrorState: return "ErrorState";
  }
  return "?";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::NotRecurrent: return "NotRecurrent";
    case Verdict::RecurrentErgodic: return "RecurrentErgodic";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

OrbitOptions orbit_options_for(const FunctionModel& model, int max_iter) {
  OrbitOptions o;
  o.max_iter = max_iter;
  o.escape.M = model.spec().options.M;
  return o;
}

OrbitRecord iterate_orbit(const FunctionModel& model, const LogComplex& z0, const OrbitOptions& opt) {
  if (opt.max_iter < 1) throw InvalidParams("max_iter must be at least 1");
  OrbitRecord rec;
  rec.z0 = (!z0.saturated && z0.representable()) ? z0.to_complex() : Complex(kInf, 0.0);
  rec.points.push_back(z0);
  rec.log_log_mod.emplace_back();
  SmallSeq seq;
  seq.push(z0, model.R_switch());

  bool stopped = false;
  for (int n = 1; n <= opt.max_iter && !stopped; ++n) {
    const LogComplex cur = rec.points.back();
    if (cur.saturated) break;
    LcEval e;
    try {
      e = model.step(cur);
    } catch (const Error& ex) {
      rec.stop_reason = StopReason::ErrorState;
      rec.error = ex.what();
      rec.error_index = n;
      stopped = true;
      break;
    }
    rec.points.push_back(e.value);
    rec.log_log_mod.push_back(e.log_log_mod);
    seq.push(e.value, model.R_switch());
    size_t idx = rec.points.size() - 1;
    if (int p = seq.period_at(idx, opt.cycle_tol, opt.max_period); p > 0) {
      rec.stop_reason = StopReason::CycleFound;
      double mult = multiplier_log_mod(model, rec.points, idx, p);
      rec.classification = classify_cycle(seq.preperiod(idx, p, opt.cycle_tol), p, mult);
      stopped = true;
    }
  }
  if (!stopped) {
    rec.stop_reason = rec.points.back().saturated ? StopReason::Saturated : StopReason::BudgetExhausted;
  }
  if (rec.stop_reason != StopReason::CycleFound) {
    rec.classification = Undecided{rec.points.back().log_mod};
    try {
      auto [escapes, d] = classify_escape(rec, opt.escape);
      if (escapes) {
        rec.classification = ExponentialEscape{d};
        rec.delta_hat = d;
      }
    } catch (const InsufficientTail&) {
    }
  }
  return rec;
}

OrbitRecord iterate_orbit(const FunctionModel& model, Complex z0, int max_iter) {
  return iterate_orbit(model, LogComplex::from_complex(z0), orbit_options_for(model, max_iter));
}

std::pair<bool, double> classify_escape(const OrbitRecord& record, const EscapeOptions& opt) {
  const auto& pts = record.points;
  double log_m = std::log(opt.M);
  auto high = [&](size_t i) { return pts[i].saturated || pts[i].total_log_mod() > log_m; };
  size_t start = pts.size();
  while (start > 0 && high(start - 1)) --start;
  size_t run = pts.size() - start;
  if (run < static_cast<size_t>(std::max(opt.min_tail, 2))) {
    throw InsufficientTail("escaping tail has " + std::to_string(run) + " points, need " +
                           std::to_string(opt.min_tail));
  }
  auto log_log = [&](size_t i) {
    if (i < record.log_log_mod.size() && record.log_log_mod[i]) return *record.log_log_mod[i];
    return std::log(pts[i].total_log_mod());
  };
  double delta_hat = kInf;
  for (size_t n = start; n + 1 < pts.size(); ++n) {
    if (pts[n].saturated) break;
    delta_hat = std::min(delta_hat, log_log(n + 1) / pts[n].total_log_mod());
  }
  return {delta_hat >= opt.delta_min, delta_hat};
}

CycleInfo detect_cycle(const std::vector<Complex>& seq, double tol, int max_period) {
  SmallSeq s;
  for (Complex z : seq) {
    s.ok.push_back(std::isfinite(z.real()) && std::isfinite(z.imag()));
    s.z.push_back(z);
  }
  CycleInfo info;
  for (size_t n = 1; n < seq.size(); ++n) {
    if (int p = s.period_at(n, tol, max_period); p > 0) {
      info.found = true;
      info.period = p;
      info.preperiod = s.preperiod(n, p, tol);
      return info;
    }
  }
  return info;
}

CycleInfo detect_cycle(const OrbitRecord& record, const FunctionModel* model, double tol, int max_period) {
  SmallSeq s;
  double radius = model ? model->R_switch() : kInf;
  for (const auto& w : record.points) s.push(w, radius);
  CycleInfo info;
  for (size_t n = 1; n < record.points.size(); ++n) {
    if (int p = s.period_at(n, tol, max_period); p > 0) {
      info.found = true;
      info.period = p;
      info.preperiod = s.preperiod(n, p, tol);
      if (model) info.multiplier_log_mod = multiplier_log_mod(*model, record.points, n, p);
      return info;
    }
  }
  return info;
}

SingularReport singular_orbit_report(const FunctionModel& model, int max_iter) {
  SingularReport out;
  OrbitOptions opt = orbit_options_for(model, max_iter);
  for (const auto& g : model.asymptotic_report().groups) {
    SingularOrbit o;
    o.role = SingularRole::Asymptotic;
    o.multiplicity = g.multiplicity;
    o.singular_point = g.value;
    o.value = g.value;
    o.record = iterate_orbit(model, LogComplex::from_complex(g.value), opt);
    out.orbits.push_back(std::move(o));
  }

  std::vector<std::pair<Complex, int>> crit;
  for (Complex c : model.critical_points()) {
    auto it = std::find_if(crit.begin(), crit.end(), [&](const auto& e) { return std::abs(e.first - c) <= 1e-6; });
    if (it != crit.end()) {
      ++it->second;
    } else {
      crit.emplace_back(c, 1);
    }
  }
  for (auto [c, mult] : crit) {
    SingularOrbit o;
    o.role = SingularRole::Critical;
    o.multiplicity = mult;
    o.singular_point = c;
    LogComplex v = model.step(LogComplex::from_complex(c)).value;
    o.value = (!v.saturated && v.representable()) ? v.to_complex() : Complex(kInf, 0.0);
    o.record = iterate_orbit(model, v, opt);
    if (o.record.stop_reason == StopReason::CycleFound) {
      int period = 0;
      if (auto* p = std::get_if<Preperiodic>(&o.record.classification)) period = p->period;
      if (auto* a = std::get_if<AttractedToCycle>(&o.record.classification)) period = a->period;
      const auto& pts = o.record.points;
      for (int j = 0; j < period; ++j) {
        const LogComplex& w = pts[pts.size() - 1 - static_cast<size_t>(j)];
        if (w.representable() && close(c, w.to_complex(), 1e-6)) o.on_cycle = true;
      }
    }
    out.orbits.push_back(std::move(o));
  }
  return out;
}

VerdictResult recurrence_verdict(const SingularReport& report) {
  VerdictResult res;
  bool any_asym = false;
  bool all_asym_escape = true;
  bool all_preperiodic = true;
  bool critical_on_cycle = false;
  bool attracted = false;
  bool undecided = false;
  for (const auto& o : report.orbits) {
    bool asym = o.role == SingularRole::Asymptotic;
    const auto& c = o.record.classification;
    std::string line = std::string(asym ? "asymptotic value " : "critical value ") + fmt_complex(o.value);
    if (!asym) line += " of critical point " + fmt_complex(o.singular_point);
    line += " (x" + std::to_string(o.multiplicity) + "): " + describe(c);
    if (o.on_cycle) line += ", critical point lies on the cycle";
    res.justification.push_back(line);

    if (asym) {
      any_asym = true;
      if (!std::holds_alternative<ExponentialEscape>(c)) all_asym_escape = false;
    }
    if (!std::holds_alternative<Preperiodic>(c)) all_preperiodic = false;
    if (o.on_cycle) critical_on_cycle = true;
    if (std::holds_alternative<AttractedToCycle>(c)) attracted = true;
    if (std::holds_alternative<Undecided>(c)) undecided = true;
  }

  if (!any_asym) {
    res.verdict = Verdict::Inconclusive;
    res.justification.push_back("no finite asymptotic values; the classification criterion does not apply");
  } else if (all_asym_escape) {
    res.verdict = Verdict::NotRecurrent;
    res.justification.push_back("every asymptotic value escapes exponentially");
    if (attracted) res.justification.push_back("mixed: attracted critical values");
  } else if (all_preperiodic && !critical_on_cycle) {
    res.verdict = Verdict::RecurrentErgodic;
    res.justification.push_back("every singular orbit is pre-periodic and no critical point is periodic");
  } else {
    res.verdict = Verdict::Inconclusive;
    std::string why = "reasons:";
    if (attracted) why += " attracted";
    if (undecided) why += " undecided";
    if (critical_on_cycle) why += " periodic critical point";
    if (!attracted && !undecided && !critical_on_cycle) why += " mixed escape and pre-periodic asymptotic values";
    res.justification.push_back(why);
  }
  res.justification.push_back("cycle and escape detection are numerical evidence, not proofs");
  return res;
}

}  // namespace etf
