#include "peerlearn/service/json_io.hpp"

namespace peerlearn {

namespace {

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) it->get_to(out);
}

}  // namespace

namespace learner {

void to_json(json& j, const EloPoints& p) { j = p.raw(); }
void from_json(const json& j, EloPoints& p) { p = EloPoints::from_raw(j.get<std::int64_t>()); }

void to_json(json& j, const EloParams& p) {
  j = {{"initial", p.initial}, {"k_base", p.k_base}, {"k_decay", p.k_decay}};
}
void from_json(const json& j, EloParams& p) {
  read_opt(j, "initial", p.initial);
  read_opt(j, "k_base", p.k_base);
  read_opt(j, "k_decay", p.k_decay);
}

void to_json(json& j, const BandThresholds& p) { j = {{"yellow_from", p.yellow_from}, {"blue_from", p.blue_from}}; }
void from_json(const json& j, BandThresholds& p) {
  read_opt(j, "yellow_from", p.yellow_from);
  read_opt(j, "blue_from", p.blue_from);
}

void to_json(json& j, const TopicRating& r) { j = {{"rating", r.rating}, {"attempts", r.attempts}}; }
void from_json(const json& j, TopicRating& r) {
  j.at("rating").get_to(r.rating);
  j.at("attempts").get_to(r.attempts);
}

void to_json(json& j, const Snapshot& s) { j = {{"at", s.at}, {"ratings", s.ratings}}; }
void from_json(const json& j, Snapshot& s) {
  j.at("at").get_to(s.at);
  j.at("ratings").get_to(s.ratings);
}

void to_json(json& j, const LearnerState& s) {
  j = {{"student", s.student}, {"ratings", s.ratings}, {"snapshots", s.snapshots}};
}
void from_json(const json& j, LearnerState& s) {
  j.at("student").get_to(s.student);
  j.at("ratings").get_to(s.ratings);
  j.at("snapshots").get_to(s.snapshots);
}

void to_json(json& j, const ResourceRating& r) {
  j = {{"resource", r.resource}, {"rating", r.rating}, {"attempts", r.attempts}};
}
void from_json(const json& j, ResourceRating& r) {
  j.at("resource").get_to(r.resource);
  j.at("rating").get_to(r.rating);
  j.at("attempts").get_to(r.attempts);
}

void to_json(json& j, const RatingDelta& d) {
  j = {{"attempt", d.attempt},
       {"student", d.student},
       {"resource", d.resource},
       {"per_topic_student_delta", d.per_topic_student_delta},
       {"resource_delta", d.resource_delta},
       {"applied", d.applied}};
}
void from_json(const json& j, RatingDelta& d) {
  j.at("attempt").get_to(d.attempt);
  j.at("student").get_to(d.student);
  j.at("resource").get_to(d.resource);
  j.at("per_topic_student_delta").get_to(d.per_topic_student_delta);
  j.at("resource_delta").get_to(d.resource_delta);
  j.at("applied").get_to(d.applied);
}

}  // namespace learner

namespace recommend {

void to_json(json& j, const FitWeights& w) { j = {{"gap", w.gap}, {"quality", w.quality}, {"novelty", w.novelty}}; }
void from_json(const json& j, FitWeights& w) {
  read_opt(j, "gap", w.gap);
  read_opt(j, "quality", w.quality);
  read_opt(j, "novelty", w.novelty);
}

void to_json(json& j, const FitParams& p) {
  j = {{"weights", p.weights},
       {"target_success", p.target_success},
       {"unrated_quality", p.unrated_quality},
       {"attempted_novelty", p.attempted_novelty}};
}
void from_json(const json& j, FitParams& p) {
  read_opt(j, "weights", p.weights);
  read_opt(j, "target_success", p.target_success);
  read_opt(j, "unrated_quality", p.unrated_quality);
  read_opt(j, "attempted_novelty", p.attempted_novelty);
}

void to_json(json& j, const ResourceCard& c) {
  j = {{"resource_id", c.resource},   {"personal_fit", c.personal_fit},     {"quality", c.quality},
       {"ratings_count", c.ratings_count}, {"difficulty", c.difficulty}, {"attempts_count", c.attempts_count},
       {"comments_count", c.comments_count}, {"created_at", c.created_at}};
}

}  // namespace recommend

namespace core {

void to_json(json& j, const ModerationParams& p) {
  j = {{"competence_threshold", p.competence_threshold},
       {"review_quorum", p.review_quorum},
       {"flag_threshold", p.flag_threshold}};
}
void from_json(const json& j, ModerationParams& p) {
  read_opt(j, "competence_threshold", p.competence_threshold);
  read_opt(j, "review_quorum", p.review_quorum);
  read_opt(j, "flag_threshold", p.flag_threshold);
}

void to_json(json& j, const BadgeThresholds& p) {
  j = {{"bronze", p.bronze}, {"silver", p.silver}, {"gold", p.gold}};
}
void from_json(const json& j, BadgeThresholds& p) {
  read_opt(j, "bronze", p.bronze);
  read_opt(j, "silver", p.silver);
  read_opt(j, "gold", p.gold);
}

void to_json(json& j, const OfferingConfig& c) {
  j = {{"elo", c.elo}, {"bands", c.bands}, {"fit", c.fit}, {"moderation", c.moderation}, {"badges", c.badges}};
}
void from_json(const json& j, OfferingConfig& c) {
  read_opt(j, "elo", c.elo);
  read_opt(j, "bands", c.bands);
  read_opt(j, "fit", c.fit);
  read_opt(j, "moderation", c.moderation);
  read_opt(j, "badges", c.badges);
}

void to_json(json& j, const Topic& t) { j = {{"id", t.id}, {"name", t.name}, {"ordinal", t.ordinal}}; }
void from_json(const json& j, Topic& t) {
  j.at("id").get_to(t.id);
  j.at("name").get_to(t.name);
  j.at("ordinal").get_to(t.ordinal);
}

void to_json(json& j, const OfferingMeta& m) {
  j = {{"university_name", m.university_name}, {"course_code", m.course_code}, {"course_name", m.course_name},
       {"semester", m.semester},               {"teaching_start", m.teaching_start}};
}
void from_json(const json& j, OfferingMeta& m) {
  read_opt(j, "university_name", m.university_name);
  read_opt(j, "course_code", m.course_code);
  read_opt(j, "course_name", m.course_name);
  read_opt(j, "semester", m.semester);
  read_opt(j, "teaching_start", m.teaching_start);
}

void to_json(json& j, const Offering& o) {
  j = {{"id", o.id},
       {"meta", o.meta},
       {"topics", o.topics},
       {"moderation_policy", to_string(o.moderation_policy)},
       {"created_from_lms", o.created_from_lms},
       {"config", o.config}};
}
void from_json(const json& j, Offering& o) {
  j.at("id").get_to(o.id);
  j.at("meta").get_to(o.meta);
  j.at("topics").get_to(o.topics);
  o.moderation_policy = parse_policy(j.at("moderation_policy").get<std::string>());
  j.at("created_from_lms").get_to(o.created_from_lms);
  j.at("config").get_to(o.config);
}

void to_json(json& j, const EnrolmentTicket& t) {
  j = {{"kind", to_string(t.kind)}, {"code", t.code},   {"offering", t.offering}, {"expiry", t.expiry},
       {"role", to_string(t.role)}, {"email", t.email}, {"used", t.used}};
}
void from_json(const json& j, EnrolmentTicket& t) {
  t.kind = parse_ticket_kind(j.at("kind").get<std::string>());
  j.at("code").get_to(t.code);
  j.at("offering").get_to(t.offering);
  t.expiry.reset();
  read_opt(j, "expiry", t.expiry);
  t.role = parse_role(j.at("role").get<std::string>());
  j.at("email").get_to(t.email);
  j.at("used").get_to(t.used);
}

void to_json(json& j, const Enrolment& e) {
  j = {{"user", e.user}, {"role", to_string(e.role)}, {"enrolled_at", e.enrolled_at}};
}
void from_json(const json& j, Enrolment& e) {
  j.at("user").get_to(e.user);
  e.role = parse_role(j.at("role").get<std::string>());
  j.at("enrolled_at").get_to(e.enrolled_at);
}

}  // namespace core

namespace content {

void to_json(json& j, const McqContent& m) {
  j = {{"choices", m.choices}, {"correct_index", m.correct_index}, {"explanation", m.explanation}};
}
void from_json(const json& j, McqContent& m) {
  j.at("choices").get_to(m.choices);
  j.at("correct_index").get_to(m.correct_index);
  read_opt(j, "explanation", m.explanation);
}

void to_json(json& j, const WorkedExampleContent& w) {
  j = {{"steps", w.steps}, {"final_solution", w.final_solution}};
}
void from_json(const json& j, WorkedExampleContent& w) {
  j.at("steps").get_to(w.steps);
  read_opt(j, "final_solution", w.final_solution);
}

void to_json(json& j, const ResourceContent& c) {
  j = {{"body", c.body}, {"media", c.media}};
  if (c.mcq) j["mcq"] = *c.mcq;
  if (c.worked_example) j["worked_example"] = *c.worked_example;
}
void from_json(const json& j, ResourceContent& c) {
  read_opt(j, "body", c.body);
  read_opt(j, "media", c.media);
  c.mcq.reset();
  c.worked_example.reset();
  if (auto it = j.find("mcq"); it != j.end() && !it->is_null()) c.mcq = it->get<McqContent>();
  if (auto it = j.find("worked_example"); it != j.end() && !it->is_null())
    c.worked_example = it->get<WorkedExampleContent>();
}

void to_json(json& j, const Resource& r) {
  j = {{"id", r.id},
       {"offering", r.offering},
       {"author", r.author},
       {"kind", to_string(r.kind)},
       {"content", r.content},
       {"tags", r.tags},
       {"status", to_string(r.status)},
       {"created_at", r.created_at},
       {"edited_at", r.edited_at},
       {"endorsed", r.endorsed},
       {"moderation_note", r.moderation_note}};
}
void from_json(const json& j, Resource& r) {
  j.at("id").get_to(r.id);
  j.at("offering").get_to(r.offering);
  j.at("author").get_to(r.author);
  r.kind = parse_kind(j.at("kind").get<std::string>());
  j.at("content").get_to(r.content);
  j.at("tags").get_to(r.tags);
  r.status = parse_status(j.at("status").get<std::string>());
  j.at("created_at").get_to(r.created_at);
  j.at("edited_at").get_to(r.edited_at);
  j.at("endorsed").get_to(r.endorsed);
  j.at("moderation_note").get_to(r.moderation_note);
}

void to_json(json& j, const AttemptRecord& a) {
  j = {{"id", a.id},           {"student", a.student}, {"resource", a.resource}, {"chosen_index", a.chosen_index},
       {"correct", a.correct}, {"scored", a.scored},   {"at", a.at}};
}
void from_json(const json& j, AttemptRecord& a) {
  j.at("id").get_to(a.id);
  j.at("student").get_to(a.student);
  j.at("resource").get_to(a.resource);
  a.chosen_index.reset();
  a.correct.reset();
  read_opt(j, "chosen_index", a.chosen_index);
  read_opt(j, "correct", a.correct);
  j.at("scored").get_to(a.scored);
  j.at("at").get_to(a.at);
}

void to_json(json& j, const Comment& c) {
  j = {{"id", c.id}, {"author", c.author}, {"resource", c.resource}, {"text", c.text}, {"at", c.at}};
}
void from_json(const json& j, Comment& c) {
  j.at("id").get_to(c.id);
  j.at("author").get_to(c.author);
  j.at("resource").get_to(c.resource);
  j.at("text").get_to(c.text);
  j.at("at").get_to(c.at);
}

void to_json(json& j, const Flag& f) { j = {{"flagger", f.flagger}, {"reason", f.reason}, {"at", f.at}}; }
void from_json(const json& j, Flag& f) {
  j.at("flagger").get_to(f.flagger);
  j.at("reason").get_to(f.reason);
  j.at("at").get_to(f.at);
}

void to_json(json& j, const QualitySummary& q) { j = {{"mean_stars", q.mean_stars}, {"count", q.count}}; }

}  // namespace content

namespace grading {

void to_json(json& j, const RoundConfig& r) {
  j = {{"index", r.index},
       {"start", r.start},
       {"end", r.end},
       {"answer_quota", r.answer_quota},
       {"authoring_quota", r.authoring_quota}};
}
void from_json(const json& j, RoundConfig& r) {
  j.at("index").get_to(r.index);
  j.at("start").get_to(r.start);
  j.at("end").get_to(r.end);
  read_opt(j, "answer_quota", r.answer_quota);
  read_opt(j, "authoring_quota", r.authoring_quota);
}

void to_json(json& j, const Badge& b) {
  j = {{"id", b.id},
       {"category", to_string(b.category)},
       {"tier", to_string(b.tier)},
       {"criterion", b.criterion},
       {"awarded_at", b.awarded_at}};
}
void from_json(const json& j, Badge& b) {
  j.at("id").get_to(b.id);
  b.category = parse_badge_category(j.at("category").get<std::string>());
  b.tier = parse_badge_tier(j.at("tier").get<std::string>());
  j.at("criterion").get_to(b.criterion);
  j.at("awarded_at").get_to(b.awarded_at);
}

void to_json(json& j, const EngagementVector& v) {
  j = {{"authored", v.authored}, {"answered", v.answered}, {"rated", v.rated}, {"achievements", v.achievements}};
}
void from_json(const json& j, EngagementVector& v) {
  j.at("authored").get_to(v.authored);
  j.at("answered").get_to(v.answered);
  j.at("rated").get_to(v.rated);
  read_opt(j, "achievements", v.achievements);
}

void to_json(json& j, const EngagementMean& m) {
  j = {{"authored", m.authored}, {"answered", m.answered}, {"rated", m.rated}, {"achievements", m.achievements}};
}

void to_json(json& j, const GradeRubric& r) { j = {{"exam_weight", r.exam_weight}, {"ripple_weight", r.ripple_weight}}; }
void from_json(const json& j, GradeRubric& r) {
  j.at("exam_weight").get_to(r.exam_weight);
  j.at("ripple_weight").get_to(r.ripple_weight);
}

}  // namespace grading

}  // namespace peerlearn

namespace peerlearn::content {
void to_json(json& j, const Verdict& v) { j = to_string(v); }
void from_json(const json& j, Verdict& v) { v = parse_verdict(j.get<std::string>()); }
}  // namespace peerlearn::content
