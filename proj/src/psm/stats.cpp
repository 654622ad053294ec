#include "peerlearn/psm/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "peerlearn/error.hpp"

namespace peerlearn::psm {

GroupSummary summarize(std::span<const double> values) {
  GroupSummary g;
  g.n = values.size();
  if (g.n == 0) return g;
  g.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(g.n);
  if (g.n < 2) return g;
  double ss = 0.0;
  for (double v : values) ss += (v - g.mean) * (v - g.mean);
  g.sd = std::sqrt(ss / static_cast<double>(g.n - 1));
  return g;
}

namespace {

void require_two(const GroupSummary& a, const GroupSummary& b) {
  if (a.n < 2 || b.n < 2) fail(ErrorCode::Validation, "each group needs at least 2 observations");
  if (a.sd < 0 || b.sd < 0) fail(ErrorCode::Validation, "standard deviations must be non-negative");
}

}  // namespace

double cohens_d(const GroupSummary& a, const GroupSummary& b) {
  require_two(a, b);
  const double na = static_cast<double>(a.n), nb = static_cast<double>(b.n);
  const double pooled = std::sqrt(((na - 1) * a.sd * a.sd + (nb - 1) * b.sd * b.sd) / (na + nb - 2));
  if (pooled == 0.0) {
    if (a.mean == b.mean) return 0.0;
    fail(ErrorCode::Validation, "effect size undefined: both groups are constant");
  }
  return (a.mean - b.mean) / pooled;
}

double cohens_d(std::span<const double> a, std::span<const double> b) { return cohens_d(summarize(a), summarize(b)); }

double two_sided_p(double t, double df) {
  if (std::isnan(t) || !(df > 0)) fail(ErrorCode::Validation, "t and df must be finite with df > 0");
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

TTestResult t_test(const GroupSummary& a, const GroupSummary& b, TTestKind kind) {
  require_two(a, b);
  const double na = static_cast<double>(a.n), nb = static_cast<double>(b.n);
  const double va = a.sd * a.sd, vb = b.sd * b.sd;
  TTestResult r;
  double se = 0.0;
  if (kind == TTestKind::Welch) {
    se = std::sqrt(va / na + vb / nb);
    const double num = std::pow(va / na + vb / nb, 2);
    const double den = std::pow(va / na, 2) / (na - 1) + std::pow(vb / nb, 2) / (nb - 1);
    r.df = den > 0 ? num / den : na + nb - 2;
  } else {
    const double sp2 = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2);
    se = std::sqrt(sp2 * (1 / na + 1 / nb));
    r.df = na + nb - 2;
  }
  const double diff = a.mean - b.mean;
  if (se == 0.0) {
    r.t = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    r.p_value = diff == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = diff / se;
  r.p_value = two_sided_p(r.t, r.df);
  return r;
}

TTestResult t_test(std::span<const double> a, std::span<const double> b, TTestKind kind) {
  return t_test(summarize(a), summarize(b), kind);
}

double standardized_mean_difference(std::span<const double> treated, std::span<const double> control) {
  if (treated.empty() || control.empty()) return 0.0;
  const auto t = summarize(treated), c = summarize(control);
  const double denom = std::sqrt((t.sd * t.sd + c.sd * c.sd) / 2.0);
  if (denom == 0.0) return t.mean == c.mean ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), t.mean - c.mean);
  return (t.mean - c.mean) / denom;
}

}  // namespace peerlearn::psm
