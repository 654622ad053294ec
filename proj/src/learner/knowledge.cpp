#include "peerlearn/learner/knowledge.hpp"

namespace peerlearn::learner {

KnowledgeState knowledge_state(const LearnerState& student, std::span<const TopicId> topics,
                               std::span<const LearnerState* const> cohort, KnowledgeMode mode,
                               const EloParams& params, const BandThresholds& bands) {
  KnowledgeState ks;
  ks.mode = mode;

  if (mode == KnowledgeMode::Current) {
    for (TopicId t : topics) {
      double sum = 0.0;
      for (const LearnerState* peer : cohort) sum += peer->rating_on(t, params);
      const double rating = student.rating_on(t, params);
      ks.current.push_back({t, rating, competency_band(rating, bands),
                            cohort.empty() ? rating : sum / static_cast<double>(cohort.size())});
    }
    return ks;
  }

  for (const Snapshot& snap : student.snapshots) {
    KnowledgePoint point{snap.at, {}};
    for (TopicId t : topics) {
      auto it = snap.ratings.find(t);
      const double rating =
          it != snap.ratings.end() ? it->second.points() : EloPoints::from_points(params.initial).points();
      double sum = 0.0;
      for (const LearnerState* peer : cohort) sum += rating_at(*peer, t, snap.at, params);
      point.topics.push_back({t, rating, competency_band(rating, bands),
                              cohort.empty() ? rating : sum / static_cast<double>(cohort.size())});
    }
    ks.series.push_back(std::move(point));
  }
  return ks;
}

}  // namespace peerlearn::learner
