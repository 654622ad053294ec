#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peerlearn/content/resource.hpp"
#include "peerlearn/core/config.hpp"
#include "peerlearn/learner/elo.hpp"

namespace peerlearn::grading {

// min(max(0, (rating - 1000) / 100), 2)
double rating_to_mark(double rating);

// Mean of the student's ratings over every offering topic.
double overall_rating(const learner::LearnerState& learner, std::span<const TopicId> topics,
                      const learner::EloParams& params = {});

struct RoundConfig {
  int index = 1;
  Timestamp start = 0;  // inclusive
  Timestamp end = 0;    // exclusive
  int answer_quota = 10;
  int authoring_quota = 1;
};

// Indices 1..R in order, windows non-empty, ordered and non-overlapping.
void validate_rounds(std::span<const RoundConfig> rounds);

struct AuthoredResource {
  ResourceId id;
  Timestamp created_at = 0;
  content::ResourceStatus status = content::ResourceStatus::Draft;
  content::QualitySummary quality;
  bool endorsed = false;
};

struct EffectivenessRule {
  double min_mean_stars = 3.5;
  int min_ratings = 3;
};

// Published and well rated, or endorsed by an instructor.
bool is_effective(const AuthoredResource& resource, const EffectivenessRule& rule = {});

// 0..2: one mark for enough distinct correctly answered MCQs inside the
// window, one for enough effective resources authored inside it.
int round_mark(const RoundConfig& round, std::span<const content::AttemptRecord> student_attempts,
               std::span<const AuthoredResource> authored, const EffectivenessRule& rule = {});

inline constexpr double kMaxRippleMarks = 10.0;

// Share of the final grade for the exam and the platform component; the
// remainder goes to the other (pass-through) assessment.
struct GradeRubric {
  double exam_weight = 0.4;
  double ripple_weight = 0.1;
  double other_weight() const { return 1.0 - exam_weight - ripple_weight; }
};

void validate(const GradeRubric& rubric);

// Sum of round marks plus the rating mark, capped at 10.
double ripple_marks(std::span<const int> round_marks, double overall);

// Max over rubrics of exam*w_e + ripple%*w_r + other*w_o (percent scale).
double final_grade(double exam_pct, double other_pct, double ripple, std::span<const GradeRubric> rubrics);

struct EngagementVector {
  std::uint32_t authored = 0;
  std::uint32_t answered = 0;
  std::uint32_t rated = 0;
  std::uint32_t achievements = 0;
  auto operator<=>(const EngagementVector&) const = default;
};

struct EngagementMean {
  double authored = 0, answered = 0, rated = 0, achievements = 0;
};

EngagementMean cohort_mean(std::span<const EngagementVector> cohort);

enum class BadgeCategory { Engagement, Competency };
enum class BadgeTier { Bronze, Silver, Gold };

std::string_view to_string(BadgeCategory c);
std::string_view to_string(BadgeTier t);
BadgeCategory parse_badge_category(std::string_view text);
BadgeTier parse_badge_tier(std::string_view text);

struct Badge {
  std::string id;  // e.g. "engagement.answered.silver", "competency.topic.7.blue"
  BadgeCategory category = BadgeCategory::Engagement;
  BadgeTier tier = BadgeTier::Bronze;
  std::string criterion;
  Timestamp awarded_at = 0;
};

struct TopicProgress {
  TopicId topic;
  learner::CompetencyBand band = learner::CompetencyBand::Yellow;
  std::uint32_t scored_attempts = 0;
};

// Badges whose criteria hold now and that are not in `held`.
std::vector<Badge> due_badges(const EngagementVector& engagement, std::span<const TopicProgress> topics,
                              const std::set<std::string>& held, const core::BadgeThresholds& thresholds,
                              Timestamp now);

}  // namespace peerlearn::grading
