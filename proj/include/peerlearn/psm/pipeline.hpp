#pragma once

#include <string>
#include <vector>

#include "peerlearn/psm/matching.hpp"
#include "peerlearn/psm/stats.hpp"
#include "peerlearn/service/json_io.hpp"

namespace peerlearn::psm {

struct BalanceRow {
  std::string name;  // covariate or "propensity"
  double smd_before = 0.0;
  double smd_after = 0.0;
};

struct Histogram {
  std::string name;
  std::vector<double> edges;  // bins + 1
  std::vector<int> before_treated, before_control, after_treated, after_control;
};

struct BalanceReport {
  std::vector<BalanceRow> rows;
  std::vector<Histogram> histograms;
};

BalanceReport balance_report(std::span<const Subject> subjects, std::span<const double> scores,
                             const MatchedSet& matched, int bins = 10);

struct Comparison {
  GroupSummary treated;
  GroupSummary control;
  double cohens_d = 0.0;
  TTestResult t_test;
};

Comparison compare(std::span<const double> treated, std::span<const double> control, TTestKind kind);

struct PipelineOptions {
  double caliper = 0.05;
  CaliperScale scale = CaliperScale::Score;
  TTestKind t_test = TTestKind::Welch;
  int bins = 10;
};

struct EffectReport {
  Comparison unmatched;
  Comparison matched;
  PropensityModel model;
  MatchedSet matched_set;
  BalanceReport balance;
  PipelineOptions options;
};

EffectReport run_pipeline(std::span<const Subject> subjects, const PipelineOptions& options = {});

// Effect size and t-test straight from group summaries.
Comparison compare_summaries(const GroupSummary& treated, const GroupSummary& control, TTestKind kind);

json to_json_report(const EffectReport& report, std::span<const Subject> subjects);
// Two-row, Table-1-shaped text summary.
std::string format_table(const EffectReport& report);
std::string histograms_csv(const BalanceReport& balance);

}  // namespace peerlearn::psm
