#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "peerlearn/psm/propensity.hpp"

namespace peerlearn::psm {

enum class CaliperScale { Score, Logit };
std::string_view to_string(CaliperScale scale);
CaliperScale parse_caliper_scale(std::string_view text);

struct MatchedPair {
  std::size_t treated;  // index into the subject list
  std::size_t control;
  double distance;
};

struct MatchedSet {
  std::vector<MatchedPair> pairs;
  std::vector<std::size_t> unmatched_treated;
  double caliper = 0.05;
  CaliperScale scale = CaliperScale::Score;
};

// Greedy one-to-one nearest neighbour without replacement: treated in
// descending score order, each takes the closest unused control within the
// caliper or is dropped. Ties go to the lower control index.
MatchedSet match(std::span<const Subject> subjects, std::span<const double> scores, double caliper = 0.05,
                 CaliperScale scale = CaliperScale::Score);
MatchedSet match(std::span<const Subject> subjects, const PropensityModel& model, double caliper = 0.05,
                 CaliperScale scale = CaliperScale::Score);

}  // namespace peerlearn::psm
