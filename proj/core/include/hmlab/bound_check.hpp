#pragma once

#include <cstdint>
#include <string>

namespace hmlab {

enum class CheckStatus { Passed, Failed, NotApplicable };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Passed: return "pass";
    case CheckStatus::Failed: return "fail";
    case CheckStatus::NotApplicable: return "not_applicable";
  }
  return "?";
}

/// Record of one verified inequality: a measured quantity against a bound,
/// with the tolerance split into an analytic slack, a mesh-discretization
/// slack and a sampling slack so reports can show where the headroom went.
struct BoundCheck {
  std::string context;
  double measured = 0.0;
  double bound = 0.0;
  double tol_analytic = 0.0;
  double tol_mesh = 0.0;
  double tol_sampling = 0.0;
  std::uint64_t samples = 0;
  CheckStatus status = CheckStatus::NotApplicable;

  double margin() const { return bound - measured; }
  double tolerance() const { return tol_analytic + tol_mesh + tol_sampling; }
  bool passed() const { return status == CheckStatus::Passed; }
  bool failed() const { return status == CheckStatus::Failed; }
  bool applicable() const { return status != CheckStatus::NotApplicable; }

  /// Check measured <= bound within the combined tolerance.
  static BoundCheck upper(std::string context, double measured, double bound,
                          double tol_analytic = 0.0, double tol_mesh = 0.0,
                          double tol_sampling = 0.0, std::uint64_t samples = 0) {
    BoundCheck c;
    c.context = std::move(context);
    c.measured = measured;
    c.bound = bound;
    c.tol_analytic = tol_analytic;
    c.tol_mesh = tol_mesh;
    c.tol_sampling = tol_sampling;
    c.samples = samples;
    c.status = (c.margin() >= -c.tolerance()) ? CheckStatus::Passed : CheckStatus::Failed;
    return c;
  }

  static BoundCheck not_applicable(std::string context, std::uint64_t samples = 0) {
    BoundCheck c;
    c.context = std::move(context);
    c.samples = samples;
    c.status = CheckStatus::NotApplicable;
    return c;
  }
};

}  // namespace hmlab
