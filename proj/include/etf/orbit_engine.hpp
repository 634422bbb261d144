#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "etf/function_model.hpp"

namespace etf {

struct ExponentialEscape {
  double delta_hat = 0.0;
};
struct Preperiodic {
  int preperiod = 0;
  int period = 0;
};
struct AttractedToCycle {
  int period = 0;
  double multiplier_log_mod = 0.0;
};
struct Undecided {
  double last_log_mod = 0.0;
};
using OrbitClassification = std::variant<ExponentialEscape, Preperiodic, AttractedToCycle, Undecided>;

std::string describe(const OrbitClassification& c);

enum class StopReason { Saturated, CycleFound, BudgetExhausted, ErrorState };
const char* to_string(StopReason r);

struct OrbitRecord {
  Complex z0;
  std::vector<LogComplex> points;
  /// ln(log|z_n|) for saturated points, where log|z_n| itself is lost.
  /// Either empty or parallel to points.
  std::vector<std::optional<double>> log_log_mod;
  OrbitClassification classification = Undecided{};
  std::optional<double> delta_hat;
  StopReason stop_reason = StopReason::BudgetExhausted;
  std::string error;
  int error_index = -1;
};

struct EscapeOptions {
  double M = 10.0;
  double delta_min = 0.05;
  int min_tail = 3;
};

struct OrbitOptions {
  int max_iter = 200;
  double cycle_tol = 1e-9;
  int max_period = 64;
  EscapeOptions escape;
};

/// Default options with escape.M taken from the spec.
OrbitOptions orbit_options_for(const FunctionModel& model, int max_iter);

OrbitRecord iterate_orbit(const FunctionModel& model, const LogComplex& z0, const OrbitOptions& opt);
OrbitRecord iterate_orbit(const FunctionModel& model, Complex z0, int max_iter);

/// Returns (escapes, delta_hat) from the trailing run of points above log M.
/// Throws InsufficientTail when that run is shorter than min_tail.
std::pair<bool, double> classify_escape(const OrbitRecord& record, const EscapeOptions& opt = {});

struct CycleInfo {
  bool found = false;
  int preperiod = 0;
  int period = 0;
  /// log|product of f' over the cycle|; absent without a model.
  std::optional<double> multiplier_log_mod;
};

/// Smallest period p <= max_period with |z_n - z_{n-p}| <= tol max(1, |z_n|)
/// at the end of the sequence, then the first index where that repeat starts.
CycleInfo detect_cycle(const std::vector<Complex>& seq, double tol = 1e-9, int max_period = 64);
CycleInfo detect_cycle(const OrbitRecord& record, const FunctionModel* model = nullptr, double tol = 1e-9,
                       int max_period = 64);

enum class SingularRole { Asymptotic, Critical };

struct SingularOrbit {
  SingularRole role = SingularRole::Asymptotic;
  int multiplicity = 1;
  Complex singular_point;  // the critical point, or the asymptotic value itself
  Complex value;           // where the orbit starts
  OrbitRecord record;
  /// Critical points only: the point lies on the cycle its value falls into.
  bool on_cycle = false;
};

struct SingularReport {
  std::vector<SingularOrbit> orbits;
};

SingularReport singular_orbit_report(const FunctionModel& model, int max_iter = 200);

enum class Verdict { NotRecurrent, RecurrentErgodic, Inconclusive };
const char* to_string(Verdict v);

struct VerdictResult {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<std::string> justification;
  /// Cycle and escape detection are numerical, not proofs.
  bool numerical_evidence_only = true;
};

VerdictResult recurrence_verdict(const SingularReport& report);

}  // namespace etf
