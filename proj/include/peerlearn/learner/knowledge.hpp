#pragma once

#include <span>
#include <vector>

#include "peerlearn/learner/elo.hpp"

namespace peerlearn::learner {

enum class KnowledgeMode { Current, OverTime };

struct TopicKnowledge {
  TopicId topic;
  double rating = 0.0;
  CompetencyBand band = CompetencyBand::Yellow;
  double cohort_mean = 0.0;
};

struct KnowledgePoint {
  Timestamp at = 0;
  std::vector<TopicKnowledge> topics;
};

// Current mode fills `current`; OverTime fills `series` with one point per
// stored snapshot, cohort means taken as of each snapshot's time.
struct KnowledgeState {
  KnowledgeMode mode = KnowledgeMode::Current;
  std::vector<TopicKnowledge> current;
  std::vector<KnowledgePoint> series;
};

KnowledgeState knowledge_state(const LearnerState& student, std::span<const TopicId> topics,
                               std::span<const LearnerState* const> cohort, KnowledgeMode mode,
                               const EloParams& params = {}, const BandThresholds& bands = {});

}  // namespace peerlearn::learner
