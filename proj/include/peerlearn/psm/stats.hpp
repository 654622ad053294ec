#pragma once

#include <cstddef>
#include <span>

namespace peerlearn::psm {

struct GroupSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample sd (n-1)
};

GroupSummary summarize(std::span<const double> values);

// (mean_a - mean_b) / pooled sd. Needs n >= 2 per group.
double cohens_d(const GroupSummary& a, const GroupSummary& b);
double cohens_d(std::span<const double> a, std::span<const double> b);

enum class TTestKind { Welch, Pooled };

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;  // two-sided
};

TTestResult t_test(const GroupSummary& a, const GroupSummary& b, TTestKind kind = TTestKind::Welch);
TTestResult t_test(std::span<const double> a, std::span<const double> b, TTestKind kind = TTestKind::Welch);

// Two-sided tail probability P(|T| >= |t|) for Student's t with df degrees.
double two_sided_p(double t, double df);

// (mean_T - mean_C) / sqrt((sd_T^2 + sd_C^2) / 2); 0 when both arms are
// constant and equal.
double standardized_mean_difference(std::span<const double> treated, std::span<const double> control);

}  // namespace peerlearn::psm
