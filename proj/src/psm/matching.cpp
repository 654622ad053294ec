#include "peerlearn/psm/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "peerlearn/error.hpp"

namespace peerlearn::psm {

std::string_view to_string(CaliperScale scale) { return scale == CaliperScale::Score ? "score" : "logit"; }

CaliperScale parse_caliper_scale(std::string_view text) {
  if (text == "score") return CaliperScale::Score;
  if (text == "logit") return CaliperScale::Logit;
  fail(ErrorCode::Validation, "caliper scale must be score or logit");
}

MatchedSet match(std::span<const Subject> subjects, std::span<const double> scores, double caliper,
                 CaliperScale scale) {
  if (subjects.size() != scores.size()) fail(ErrorCode::Validation, "one score per subject is required");
  if (!(caliper >= 0)) fail(ErrorCode::Validation, "caliper must be non-negative");

  auto position = [scale](double s) { return scale == CaliperScale::Score ? s : std::log(s / (1.0 - s)); };

  MatchedSet out;
  out.caliper = caliper;
  out.scale = scale;

  std::set<std::pair<double, std::size_t>> controls;
  std::vector<std::size_t> treated;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (subjects[i].treated) treated.push_back(i);
    else controls.emplace(position(scores[i]), i);
  }
  std::stable_sort(treated.begin(), treated.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  for (std::size_t t : treated) {
    const double pt = position(scores[t]);
    auto best = controls.end();
    double best_d = 0.0;
    auto consider = [&](std::set<std::pair<double, std::size_t>>::iterator it) {
      if (it == controls.end()) return;
      const double d = std::fabs(it->first - pt);
      if (d > caliper) return;
      if (best == controls.end() || d < best_d || (d == best_d && it->second < best->second)) {
        best = it;
        best_d = d;
      }
    };
    // Nearest lies next to the insertion point; equal-distance runs are
    // walked so the lower index wins.
    auto hi = controls.lower_bound({pt, 0});
    for (auto it = hi; it != controls.end() && std::fabs(it->first - pt) <= (best == controls.end() ? caliper : best_d);
         ++it)
      consider(it);
    for (auto it = hi; it != controls.begin();) {
      --it;
      if (std::fabs(it->first - pt) > (best == controls.end() ? caliper : best_d)) break;
      consider(it);
    }
    if (best == controls.end()) {
      out.unmatched_treated.push_back(t);
      continue;
    }
    out.pairs.push_back({t, best->second, best_d});
    controls.erase(best);
  }
  return out;
}

MatchedSet match(std::span<const Subject> subjects, const PropensityModel& model, double caliper, CaliperScale scale) {
  const auto s = scores(model, subjects);
  return match(subjects, s, caliper, scale);
}

}  // namespace peerlearn::psm
