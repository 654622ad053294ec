#include "peerlearn/learner/elo.hpp"

#include "peerlearn/error.hpp"

namespace peerlearn::learner {

std::string_view to_string(CompetencyBand band) {
  switch (band) {
    case CompetencyBand::Red: return "red";
    case CompetencyBand::Yellow: return "yellow";
    case CompetencyBand::Blue: return "blue";
  }
  return "red";
}

double logistic(double rating_gap) { return 1.0 / (1.0 + std::pow(10.0, -rating_gap / 400.0)); }

double k_factor(std::uint32_t attempts, const EloParams& params) {
  return params.k_base / (1.0 + params.k_decay * static_cast<double>(attempts));
}

CompetencyBand competency_band(double rating, const BandThresholds& thresholds) {
  if (rating < thresholds.yellow_from) return CompetencyBand::Red;
  if (rating < thresholds.blue_from) return CompetencyBand::Yellow;
  return CompetencyBand::Blue;
}

TopicRating& LearnerState::entry(TopicId topic, const EloParams& params) {
  auto [it, inserted] = ratings.try_emplace(topic);
  if (inserted) it->second.rating = EloPoints::from_points(params.initial);
  return it->second;
}

double LearnerState::rating_on(TopicId topic, const EloParams& params) const {
  auto it = ratings.find(topic);
  return it == ratings.end() ? EloPoints::from_points(params.initial).points()
                             : it->second.rating.points();
}

LearnerState make_learner(UserId student, std::span<const TopicId> topics, Timestamp at,
                          const EloParams& params) {
  LearnerState s;
  s.student = student;
  Snapshot initial{at, {}};
  for (TopicId t : topics) {
    s.entry(t, params);
    initial.ratings[t] = s.ratings[t].rating;
  }
  s.snapshots.push_back(std::move(initial));
  return s;
}

double expected_correctness(const std::map<TopicId, TopicRating>& student_ratings,
                            EloPoints resource_rating, std::span<const TopicId> tags,
                            const EloParams& params) {
  if (tags.empty()) fail(ErrorCode::Validation, "expected_correctness needs at least one tag");
  const double initial = EloPoints::from_points(params.initial).points();
  double sum = 0.0;
  for (TopicId t : tags) {
    auto it = student_ratings.find(t);
    sum += it == student_ratings.end() ? initial : it->second.rating.points();
  }
  return logistic(sum / static_cast<double>(tags.size()) - resource_rating.points());
}

double expected_correctness(std::span<const double> tag_ratings, double resource_rating) {
  if (tag_ratings.empty()) fail(ErrorCode::Validation, "expected_correctness needs at least one tag");
  double sum = 0.0;
  for (double r : tag_ratings) sum += r;
  return logistic(sum / static_cast<double>(tag_ratings.size()) - resource_rating);
}

namespace {

// s - p, with 1 - L(x) evaluated as L(-x) so a correct answer never rounds to
// a zero surprise.
double surprise(bool correct, double rating_gap) {
  return correct ? logistic(-rating_gap) : -logistic(rating_gap);
}

}  // namespace

RatingDelta apply_attempt(LearnerState& learner, ResourceRating& resource,
                          std::span<const TopicId> tags, bool correct, const EloParams& params) {
  if (tags.empty()) fail(ErrorCode::Validation, "attempt needs at least one tag");

  RatingDelta delta;
  delta.student = learner.student;
  delta.resource = resource.resource;

  const double q = resource.rating.points();
  double mean = 0.0;
  for (TopicId t : tags) mean += learner.entry(t, params).rating.points();
  mean /= static_cast<double>(tags.size());

  // All expectations use pre-update ratings.
  for (TopicId t : tags) {
    const TopicRating& tr = learner.ratings.at(t);
    const double step = k_factor(tr.attempts, params) * surprise(correct, tr.rating.points() - q);
    delta.per_topic_student_delta.emplace_back(t, EloPoints::from_points(step));
  }
  delta.resource_delta =
      EloPoints::from_points(-k_factor(resource.attempts, params) * surprise(correct, mean - q));

  for (auto& [t, d] : delta.per_topic_student_delta) {
    TopicRating& tr = learner.ratings.at(t);
    tr.rating += d;
    ++tr.attempts;
  }
  resource.rating += delta.resource_delta;
  ++resource.attempts;
  delta.applied = true;
  return delta;
}

bool revert_delta(RatingDelta& delta, LearnerState& learner, ResourceRating& resource) {
  if (!delta.applied) return false;
  for (auto& [t, d] : delta.per_topic_student_delta) {
    TopicRating& tr = learner.ratings[t];
    tr.rating -= d;
    if (tr.attempts > 0) --tr.attempts;
  }
  resource.rating -= delta.resource_delta;
  if (resource.attempts > 0) --resource.attempts;
  delta.applied = false;
  return true;
}

void record_snapshot(LearnerState& learner, Timestamp at) {
  Snapshot snap{at, {}};
  for (const auto& [t, tr] : learner.ratings) snap.ratings[t] = tr.rating;
  if (learner.snapshots.size() > 1 && day_of(learner.snapshots.back().at) == day_of(at)) {
    learner.snapshots.back() = std::move(snap);
  } else {
    learner.snapshots.push_back(std::move(snap));
  }
}

double rating_at(const LearnerState& learner, TopicId topic, Timestamp at, const EloParams& params) {
  const Snapshot* best = nullptr;
  for (const Snapshot& s : learner.snapshots) {
    if (s.at <= at) best = &s;
  }
  if (best) {
    auto it = best->ratings.find(topic);
    if (it != best->ratings.end()) return it->second.points();
  }
  return EloPoints::from_points(params.initial).points();
}

}  // namespace peerlearn::learner
