#pragma once

// JSON mappings for domain types, used by the event log, snapshots and the
// HTTP surface. Enum values serialize as their lower_snake names.

#include "json.hpp"
#include "peerlearn/content/resource.hpp"
#include "peerlearn/core/offering.hpp"
#include "peerlearn/grading/grading.hpp"
#include "peerlearn/learner/elo.hpp"
#include "peerlearn/recommend/recommender.hpp"

NLOHMANN_JSON_NAMESPACE_BEGIN
template <typename T>
struct adl_serializer<std::optional<T>> {
  static void to_json(json& j, const std::optional<T>& opt) {
    if (opt) j = *opt;
    else j = nullptr;
  }
  static void from_json(const json& j, std::optional<T>& opt) {
    if (j.is_null()) opt.reset();
    else opt = j.get<T>();
  }
};
NLOHMANN_JSON_NAMESPACE_END

namespace peerlearn {

using json = nlohmann::json;

template <class Tag>
void to_json(json& j, const Id<Tag>& id) {
  j = id.value;
}

template <class Tag>
void from_json(const json& j, Id<Tag>& id) {
  id.value = j.get<std::uint64_t>();
}

namespace learner {
void to_json(json& j, const EloPoints& p);
void from_json(const json& j, EloPoints& p);
void to_json(json& j, const EloParams& p);
void from_json(const json& j, EloParams& p);
void to_json(json& j, const BandThresholds& p);
void from_json(const json& j, BandThresholds& p);
void to_json(json& j, const TopicRating& r);
void from_json(const json& j, TopicRating& r);
void to_json(json& j, const Snapshot& s);
void from_json(const json& j, Snapshot& s);
void to_json(json& j, const LearnerState& s);
void from_json(const json& j, LearnerState& s);
void to_json(json& j, const ResourceRating& r);
void from_json(const json& j, ResourceRating& r);
void to_json(json& j, const RatingDelta& d);
void from_json(const json& j, RatingDelta& d);
}  // namespace learner

namespace recommend {
void to_json(json& j, const FitWeights& w);
void from_json(const json& j, FitWeights& w);
void to_json(json& j, const FitParams& p);
void from_json(const json& j, FitParams& p);
void to_json(json& j, const ResourceCard& c);
}  // namespace recommend

namespace core {
void to_json(json& j, const ModerationParams& p);
void from_json(const json& j, ModerationParams& p);
void to_json(json& j, const BadgeThresholds& p);
void from_json(const json& j, BadgeThresholds& p);
void to_json(json& j, const OfferingConfig& c);
void from_json(const json& j, OfferingConfig& c);
void to_json(json& j, const Topic& t);
void from_json(const json& j, Topic& t);
void to_json(json& j, const OfferingMeta& m);
void from_json(const json& j, OfferingMeta& m);
void to_json(json& j, const Offering& o);
void from_json(const json& j, Offering& o);
void to_json(json& j, const EnrolmentTicket& t);
void from_json(const json& j, EnrolmentTicket& t);
void to_json(json& j, const Enrolment& e);
void from_json(const json& j, Enrolment& e);
}  // namespace core

namespace content {
void to_json(json& j, const McqContent& m);
void from_json(const json& j, McqContent& m);
void to_json(json& j, const WorkedExampleContent& w);
void from_json(const json& j, WorkedExampleContent& w);
void to_json(json& j, const ResourceContent& c);
void from_json(const json& j, ResourceContent& c);
void to_json(json& j, const Resource& r);
void from_json(const json& j, Resource& r);
void to_json(json& j, const AttemptRecord& a);
void from_json(const json& j, AttemptRecord& a);
void to_json(json& j, const Comment& c);
void from_json(const json& j, Comment& c);
void to_json(json& j, const Flag& f);
void from_json(const json& j, Flag& f);
void to_json(json& j, const QualitySummary& q);
}  // namespace content

namespace grading {
void to_json(json& j, const RoundConfig& r);
void from_json(const json& j, RoundConfig& r);
void to_json(json& j, const Badge& b);
void from_json(const json& j, Badge& b);
void to_json(json& j, const EngagementVector& v);
void from_json(const json& j, EngagementVector& v);
void to_json(json& j, const EngagementMean& m);
void to_json(json& j, const GradeRubric& r);
void from_json(const json& j, GradeRubric& r);
}  // namespace grading

}  // namespace peerlearn

namespace peerlearn::content {
void to_json(json& j, const Verdict& v);
void from_json(const json& j, Verdict& v);
}  // namespace peerlearn::content
