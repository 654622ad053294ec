#include "peerlearn/grading/grading.hpp"

#include <algorithm>
#include <cmath>

#include "peerlearn/error.hpp"

namespace peerlearn::grading {

double rating_to_mark(double rating) { return std::min(std::max(0.0, (rating - 1000.0) / 100.0), 2.0); }

double overall_rating(const learner::LearnerState& learner, std::span<const TopicId> topics,
                      const learner::EloParams& params) {
  if (topics.empty()) fail(ErrorCode::Validation, "overall rating needs at least one topic");
  double sum = 0.0;
  for (TopicId t : topics) sum += learner.rating_on(t, params);
  return sum / static_cast<double>(topics.size());
}

void validate_rounds(std::span<const RoundConfig> rounds) {
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    const RoundConfig& r = rounds[i];
    if (r.index != static_cast<int>(i) + 1) fail(ErrorCode::Validation, "round indices must run 1..R in order");
    if (r.end <= r.start) fail(ErrorCode::Validation, "round " + std::to_string(r.index) + " has an empty window");
    if (r.answer_quota < 0 || r.authoring_quota < 0) fail(ErrorCode::Validation, "round quotas must be non-negative");
    if (i > 0 && rounds[i - 1].end > r.start)
      fail(ErrorCode::Validation, "round windows must be ordered and non-overlapping");
  }
}

bool is_effective(const AuthoredResource& r, const EffectivenessRule& rule) {
  if (r.endorsed && r.status != content::ResourceStatus::Deleted) return true;
  return r.status == content::ResourceStatus::Published && r.quality.count >= rule.min_ratings &&
         r.quality.mean_stars >= rule.min_mean_stars;
}

int round_mark(const RoundConfig& round, std::span<const content::AttemptRecord> student_attempts,
               std::span<const AuthoredResource> authored, const EffectivenessRule& rule) {
  auto inside = [&](Timestamp t) { return t >= round.start && t < round.end; };

  std::set<ResourceId> correct;
  for (const auto& a : student_attempts)
    if (inside(a.at) && a.correct.value_or(false)) correct.insert(a.resource);

  int effective = 0;
  for (const auto& r : authored)
    if (inside(r.created_at) && is_effective(r, rule)) ++effective;

  int mark = 0;
  if (static_cast<int>(correct.size()) >= round.answer_quota) ++mark;
  if (effective >= round.authoring_quota) ++mark;
  return mark;
}

void validate(const GradeRubric& rubric) {
  if (rubric.exam_weight < 0 || rubric.ripple_weight < 0 || rubric.other_weight() < -1e-12)
    fail(ErrorCode::Validation, "rubric weights must be non-negative and sum to 1");
}

double ripple_marks(std::span<const int> round_marks, double overall) {
  double total = rating_to_mark(overall);
  for (int m : round_marks) total += m;
  return std::min(total, kMaxRippleMarks);
}

double final_grade(double exam_pct, double other_pct, double ripple, std::span<const GradeRubric> rubrics) {
  if (rubrics.empty()) fail(ErrorCode::Validation, "at least one rubric is required");
  if (exam_pct < 0 || exam_pct > 100 || other_pct < 0 || other_pct > 100)
    fail(ErrorCode::Validation, "percentages must lie in [0,100]");
  if (ripple < 0 || ripple > kMaxRippleMarks) fail(ErrorCode::Validation, "platform marks must lie in [0,10]");
  const double ripple_pct = ripple / kMaxRippleMarks * 100.0;
  double best = -1.0;
  for (const GradeRubric& r : rubrics) {
    validate(r);
    best = std::max(best, r.exam_weight * exam_pct + r.ripple_weight * ripple_pct +
                              std::max(0.0, r.other_weight()) * other_pct);
  }
  return best;
}

EngagementMean cohort_mean(std::span<const EngagementVector> cohort) {
  EngagementMean m;
  if (cohort.empty()) return m;
  for (const auto& v : cohort) {
    m.authored += v.authored;
    m.answered += v.answered;
    m.rated += v.rated;
    m.achievements += v.achievements;
  }
  const double n = static_cast<double>(cohort.size());
  m.authored /= n;
  m.answered /= n;
  m.rated /= n;
  m.achievements /= n;
  return m;
}

std::string_view to_string(BadgeCategory c) { return c == BadgeCategory::Engagement ? "engagement" : "competency"; }

std::string_view to_string(BadgeTier t) {
  switch (t) {
    case BadgeTier::Bronze: return "bronze";
    case BadgeTier::Silver: return "silver";
    case BadgeTier::Gold: return "gold";
  }
  return "bronze";
}

BadgeCategory parse_badge_category(std::string_view text) {
  if (text == "engagement") return BadgeCategory::Engagement;
  if (text == "competency") return BadgeCategory::Competency;
  fail(ErrorCode::Corrupt, "unknown badge category '" + std::string(text) + "'");
}

BadgeTier parse_badge_tier(std::string_view text) {
  for (auto t : {BadgeTier::Bronze, BadgeTier::Silver, BadgeTier::Gold})
    if (text == to_string(t)) return t;
  fail(ErrorCode::Corrupt, "unknown badge tier '" + std::string(text) + "'");
}

std::vector<Badge> due_badges(const EngagementVector& engagement, std::span<const TopicProgress> topics,
                              const std::set<std::string>& held, const core::BadgeThresholds& thresholds,
                              Timestamp now) {
  std::vector<Badge> out;
  auto offer = [&](std::string id, BadgeCategory cat, BadgeTier tier, std::string criterion) {
    if (!held.count(id)) out.push_back({std::move(id), cat, tier, std::move(criterion), now});
  };

  const std::pair<std::string_view, std::uint32_t> axes[] = {
      {"authored", engagement.authored}, {"answered", engagement.answered}, {"rated", engagement.rated}};
  const std::pair<BadgeTier, std::uint32_t> tiers[] = {
      {BadgeTier::Bronze, thresholds.bronze}, {BadgeTier::Silver, thresholds.silver}, {BadgeTier::Gold, thresholds.gold}};
  for (const auto& [axis, count] : axes) {
    for (const auto& [tier, threshold] : tiers) {
      if (count < threshold) continue;
      offer("engagement." + std::string(axis) + "." + std::string(to_string(tier)), BadgeCategory::Engagement, tier,
            std::string(axis) + " >= " + std::to_string(threshold));
    }
  }

  bool all_blue = !topics.empty();
  for (const TopicProgress& p : topics) {
    const std::string base = "competency.topic." + p.topic.str();
    if (p.band == learner::CompetencyBand::Blue) {
      offer(base + ".yellow", BadgeCategory::Competency, BadgeTier::Bronze, "topic " + p.topic.str() + " reached yellow");
      offer(base + ".blue", BadgeCategory::Competency, BadgeTier::Silver, "topic " + p.topic.str() + " reached blue");
    } else if (p.band == learner::CompetencyBand::Yellow && p.scored_attempts > 0) {
      offer(base + ".yellow", BadgeCategory::Competency, BadgeTier::Bronze, "topic " + p.topic.str() + " reached yellow");
    }
    all_blue = all_blue && p.band == learner::CompetencyBand::Blue;
  }
  if (all_blue) offer("competency.all.blue", BadgeCategory::Competency, BadgeTier::Gold, "every topic reached blue");
  return out;
}

}  // namespace peerlearn::grading
