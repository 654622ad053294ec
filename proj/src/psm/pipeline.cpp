#include "peerlearn/psm/pipeline.hpp"

#include <algorithm>
#include <cstdio>

#include "peerlearn/util/csv.hpp"

namespace peerlearn::psm {

namespace {

std::vector<double> column(std::span<const Subject> subjects, std::size_t k) {
  std::vector<double> out;
  for (const auto& s : subjects) out.push_back(s.covariates()[k]);
  return out;
}

struct Split {
  std::vector<double> treated, control, matched_treated, matched_control;
};

Split split(std::span<const double> values, std::span<const Subject> subjects, const MatchedSet& m) {
  Split s;
  for (std::size_t i = 0; i < subjects.size(); ++i) (subjects[i].treated ? s.treated : s.control).push_back(values[i]);
  for (const auto& p : m.pairs) {
    s.matched_treated.push_back(values[p.treated]);
    s.matched_control.push_back(values[p.control]);
  }
  return s;
}

std::vector<int> bin_counts(const std::vector<double>& values, const std::vector<double>& edges) {
  std::vector<int> counts(edges.size() - 1, 0);
  for (double v : values) {
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    std::size_t b = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
    counts[std::min(b, counts.size() - 1)]++;
  }
  return counts;
}

json summary_json(const GroupSummary& g) { return {{"n", g.n}, {"mean", g.mean}, {"sd", g.sd}}; }

json comparison_json(const Comparison& c) {
  return {{"treated", summary_json(c.treated)},
          {"control", summary_json(c.control)},
          {"cohens_d", c.cohens_d},
          {"t", c.t_test.t},
          {"df", c.t_test.df},
          {"p_value", c.t_test.p_value}};
}

}  // namespace

BalanceReport balance_report(std::span<const Subject> subjects, std::span<const double> scores,
                             const MatchedSet& matched, int bins) {
  BalanceReport out;
  auto add = [&](std::string name, const std::vector<double>& values) {
    const Split s = split(values, subjects, matched);
    out.rows.push_back({name, standardized_mean_difference(s.treated, s.control),
                        standardized_mean_difference(s.matched_treated, s.matched_control)});
    Histogram h;
    h.name = std::move(name);
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double a = values.empty() ? 0.0 : *lo, b = values.empty() ? 1.0 : (*hi > *lo ? *hi : *lo + 1.0);
    for (int i = 0; i <= bins; ++i) h.edges.push_back(a + (b - a) * i / bins);
    h.before_treated = bin_counts(s.treated, h.edges);
    h.before_control = bin_counts(s.control, h.edges);
    h.after_treated = bin_counts(s.matched_treated, h.edges);
    h.after_control = bin_counts(s.matched_control, h.edges);
    out.histograms.push_back(std::move(h));
  };
  for (std::size_t k = 0; k < kCovariateNames.size(); ++k) add(std::string(kCovariateNames[k]), column(subjects, k));
  add("propensity", std::vector<double>(scores.begin(), scores.end()));
  return out;
}

Comparison compare(std::span<const double> treated, std::span<const double> control, TTestKind kind) {
  return compare_summaries(summarize(treated), summarize(control), kind);
}

Comparison compare_summaries(const GroupSummary& treated, const GroupSummary& control, TTestKind kind) {
  Comparison c;
  c.treated = treated;
  c.control = control;
  c.cohens_d = cohens_d(treated, control);
  c.t_test = t_test(treated, control, kind);
  return c;
}

EffectReport run_pipeline(std::span<const Subject> subjects, const PipelineOptions& options) {
  EffectReport r;
  r.options = options;
  r.model = fit_propensity(subjects);
  const auto sc = scores(r.model, subjects);
  r.matched_set = match(subjects, sc, options.caliper, options.scale);
  std::vector<double> outcomes;
  for (const auto& s : subjects) outcomes.push_back(s.outcome);
  const Split o = split(outcomes, subjects, r.matched_set);
  r.unmatched = compare(o.treated, o.control, options.t_test);
  r.matched = compare(o.matched_treated, o.matched_control, options.t_test);
  r.balance = balance_report(subjects, sc, r.matched_set, options.bins);
  return r;
}

json to_json_report(const EffectReport& r, std::span<const Subject> subjects) {
  json coef = json::object(), se = json::object();
  coef["intercept"] = r.model.coefficients[0];
  se["intercept"] = r.model.standard_errors[0];
  for (std::size_t k = 0; k < kCovariateNames.size(); ++k) {
    coef[std::string(kCovariateNames[k])] = r.model.coefficients[k + 1];
    se[std::string(kCovariateNames[k])] = r.model.standard_errors[k + 1];
  }
  json pairs = json::array();
  for (const auto& p : r.matched_set.pairs)
    pairs.push_back({{"treated", subjects[p.treated].id}, {"control", subjects[p.control].id}, {"distance", p.distance}});
  json unmatched = json::array();
  for (std::size_t t : r.matched_set.unmatched_treated) unmatched.push_back(subjects[t].id);
  json balance = json::array();
  for (const auto& b : r.balance.rows)
    balance.push_back({{"covariate", b.name}, {"smd_before", b.smd_before}, {"smd_after", b.smd_after}});
  return {{"non_matched", comparison_json(r.unmatched)},
          {"matched", comparison_json(r.matched)},
          {"t_test", r.options.t_test == TTestKind::Welch ? "welch" : "pooled"},
          {"propensity_model",
           {{"standardized_coefficients", coef},
            {"standard_errors", se},
            {"log_likelihood", r.model.log_likelihood},
            {"iterations", r.model.iterations},
            {"converged", r.model.converged}}},
          {"matching",
           {{"caliper", r.matched_set.caliper},
            {"caliper_scale", std::string(to_string(r.matched_set.scale))},
            {"pairs", pairs},
            {"unmatched_treated", unmatched}}},
          {"balance", balance}};
}

std::string format_table(const EffectReport& r) {
  char buf[512];
  std::string out = "comparison      n_T   mean_T  sd_T   n_C   mean_C  sd_C   d      p\n";
  auto row = [&](const char* label, const Comparison& c) {
    std::snprintf(buf, sizeof buf, "%-14s %5zu %7.2f %6.2f %5zu %7.2f %6.2f %6.3f %.3g\n", label, c.treated.n,
                  c.treated.mean, c.treated.sd, c.control.n, c.control.mean, c.control.sd, c.cohens_d, c.t_test.p_value);
    out += buf;
  };
  row("non-matched", r.unmatched);
  row("matched", r.matched);
  out += "\ncovariate       smd_before smd_after\n";
  for (const auto& b : r.balance.rows) {
    std::snprintf(buf, sizeof buf, "%-14s %10.3f %9.3f\n", b.name.c_str(), b.smd_before, b.smd_after);
    out += buf;
  }
  return out;
}

std::string histograms_csv(const BalanceReport& balance) {
  std::string out = "variable,bin_low,bin_high,before_treated,before_control,after_treated,after_control\n";
  for (const auto& h : balance.histograms)
    for (std::size_t b = 0; b + 1 < h.edges.size(); ++b)
      out += csv::join_row({h.name, csv::format_number(h.edges[b]), csv::format_number(h.edges[b + 1]),
                            std::to_string(h.before_treated[b]), std::to_string(h.before_control[b]),
                            std::to_string(h.after_treated[b]), std::to_string(h.after_control[b])}) +
             "\n";
  return out;
}

}  // namespace peerlearn::psm
