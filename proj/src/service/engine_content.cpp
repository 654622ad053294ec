#include <algorithm>

#include "peerlearn/error.hpp"
#include "peerlearn/service/engine.hpp"

namespace peerlearn::service {

using content::ResourceStatus;

namespace {

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

json draft_json(const ResourceDraft& d) {
  return {{"kind", content::to_string(d.kind)}, {"content", d.content}, {"tags", d.tags}};
}

std::vector<TopicId> checked_tags(const core::Offering& o, const std::vector<TopicId>& tags) {
  if (tags.empty()) fail(ErrorCode::Validation, "a resource needs at least one topic tag");
  std::vector<TopicId> out;
  for (TopicId t : tags) {
    if (!o.find_topic(t)) fail(ErrorCode::Validation, "tag " + t.str() + " is not a topic of this offering");
    if (std::find(out.begin(), out.end(), t) != out.end()) fail(ErrorCode::Validation, "duplicate tag " + t.str());
    out.push_back(t);
  }
  return out;
}

void clear_moderation_state(OfferingState& os, ResourceId id) {
  os.flags.erase(id);
  os.reviews.erase(id);
}

}  // namespace

ResourceId Engine::author_resource(UserId author, OfferingId offering, ResourceDraft draft, Timestamp now,
                                   bool keep_as_draft) {
  json payload = draft_json(draft);
  payload["author"] = author;
  payload["draft"] = keep_as_draft;
  json r = commit("resource_authored", offering, now, std::move(payload));
  return r.at("resource_id").get<ResourceId>();
}

json Engine::on_resource_authored(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  const auto& p = e.payload;
  const auto author = p.at("author").get<UserId>();
  require_member(os, author);

  content::Resource r;
  r.kind = content::parse_kind(p.at("kind").get<std::string>());
  r.content = content::sanitize(p.at("content").get<content::ResourceContent>());
  r.tags = checked_tags(os.offering, p.at("tags").get<std::vector<TopicId>>());
  content::validate_content(r.kind, r.content);

  r.id = ResourceId{state_.next_resource++};
  r.offering = os.offering.id;
  r.author = author;
  r.created_at = r.edited_at = e.at;
  if (p.at("draft").get<bool>()) {
    r.status = ResourceStatus::Draft;
  } else {
    r.status = os.offering.moderation_policy == core::ModerationPolicy::None ? ResourceStatus::Published
                                                                             : ResourceStatus::PendingModeration;
  }
  os.resource_ratings[r.id] = learner::ResourceRating::initial(r.id, os.offering.config.elo);
  if (r.content.mcq) os.distribution[r.id].assign(r.content.mcq->choices.size(), 0);
  ++os.counters[author].authored;
  resource_index_[r.id] = os.offering.id;
  const ResourceId id = r.id;
  const auto status = r.status;
  os.resources.emplace(id, std::move(r));
  award_inline(os, author, e.at);
  return {{"resource_id", id}, {"status", content::to_string(status)}};
}

void Engine::edit_resource(UserId caller, ResourceId resource, ResourceDraft draft, Timestamp now) {
  json payload = draft_json(draft);
  payload["caller"] = caller;
  payload["resource"] = resource;
  commit("resource_edited", offering_of(resource), now, std::move(payload));
}

json Engine::on_resource_edited(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  const auto& p = e.payload;
  const auto caller = p.at("caller").get<UserId>();
  content::Resource& r = os.resources.at(p.at("resource").get<ResourceId>());
  if (r.author != caller) fail(ErrorCode::Forbidden, "only the author can edit a resource");
  if (r.status == ResourceStatus::Deleted) fail(ErrorCode::Lifecycle, "deleted resources cannot be edited");
  if (content::parse_kind(p.at("kind").get<std::string>()) != r.kind)
    fail(ErrorCode::Validation, "a resource's kind cannot change");
  auto body = content::sanitize(p.at("content").get<content::ResourceContent>());
  auto tags = checked_tags(os.offering, p.at("tags").get<std::vector<TopicId>>());
  content::validate_content(r.kind, body);
  if (r.content.mcq && body.mcq && r.content.mcq->choices.size() != body.mcq->choices.size() &&
      os.attempt_count[r.id] > 0)
    fail(ErrorCode::Conflict, "choice count cannot change once the question has been attempted");

  const bool moderated = os.offering.moderation_policy != core::ModerationPolicy::None;
  if (r.status == ResourceStatus::Published && moderated) {
    content::transition(r, ResourceStatus::PendingModeration);
    clear_moderation_state(os, r.id);
  } else if (r.status == ResourceStatus::PendingModeration) {
    os.reviews.erase(r.id);
  }
  if (body.mcq && (!r.content.mcq || r.content.mcq->choices.size() != body.mcq->choices.size()))
    os.distribution[r.id].assign(body.mcq->choices.size(), 0);
  r.content = std::move(body);
  r.tags = std::move(tags);
  r.edited_at = e.at;
  return {{"status", content::to_string(r.status)}};
}

void Engine::submit_resource(UserId caller, ResourceId resource, Timestamp now) {
  commit("resource_submitted", offering_of(resource), now, {{"caller", caller}, {"resource", resource}});
}

json Engine::on_resource_submitted(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  const auto caller = e.payload.at("caller").get<UserId>();
  content::Resource& r = os.resources.at(e.payload.at("resource").get<ResourceId>());
  if (r.author != caller) fail(ErrorCode::Forbidden, "only the author can submit a resource");
  content::transition(r, ResourceStatus::PendingModeration);
  clear_moderation_state(os, r.id);
  if (os.offering.moderation_policy == core::ModerationPolicy::None) content::transition(r, ResourceStatus::Published);
  return {{"status", content::to_string(r.status)}};
}

ResourceStatus Engine::moderate(UserId caller, ResourceId resource, content::Verdict decision, std::string note,
                                Timestamp now) {
  json r = commit("resource_moderated", offering_of(resource), now,
                  {{"caller", caller}, {"resource", resource}, {"decision", decision}, {"note", std::move(note)}});
  return content::parse_status(r.at("status").get<std::string>());
}

json Engine::on_resource_moderated(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  const auto& p = e.payload;
  require_instructor(os, p.at("caller").get<UserId>());
  content::Resource& r = os.resources.at(p.at("resource").get<ResourceId>());
  if (r.status != ResourceStatus::PendingModeration)
    fail(ErrorCode::Lifecycle, "only resources pending moderation can be moderated");
  const auto decision = p.at("decision").get<content::Verdict>();
  const auto note = p.value("note", std::string{});
  if (decision == content::Verdict::Approve) {
    content::transition(r, ResourceStatus::Published);
  } else {
    content::transition(r, ResourceStatus::Draft);
    r.moderation_note = note;
    outbox_.push_back({"moderation_note", state_.users.at(r.author).display_name,
                       "Resource " + r.id.str() + " returned to draft", note});
  }
  clear_moderation_state(os, r.id);
  return {{"status", content::to_string(r.status)}};
}

ReviewTally Engine::peer_review(UserId reviewer, ResourceId resource, content::Verdict verdict,
                                std::string rationale, Timestamp now) {
  json r = commit("resource_reviewed", offering_of(resource), now,
                  {{"reviewer", reviewer}, {"resource", resource}, {"verdict", verdict}, {"rationale", rationale}});
  return {r.at("approvals").get<int>(), r.at("rejections").get<int>(),
          content::parse_status(r.at("status").get<std::string>())};
}

json Engine::on_resource_reviewed(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  const auto& p = e.payload;
  const auto reviewer = p.at("reviewer").get<UserId>();
  require_member(os, reviewer);
  content::Resource& r = os.resources.at(p.at("resource").get<ResourceId>());
  if (os.offering.moderation_policy != core::ModerationPolicy::CompetentStudent)
    fail(ErrorCode::Precondition, "peer review is only available under competent-student moderation");
  if (r.status != ResourceStatus::PendingModeration)
    fail(ErrorCode::Lifecycle, "only resources pending moderation can be reviewed");
  if (r.author == reviewer) fail(ErrorCode::Conflict, "authors cannot review their own resources");

  const auto& elo = os.offering.config.elo;
  double mean = 0.0;
  auto it = os.learners.find(reviewer);
  for (TopicId t : r.tags) mean += it == os.learners.end() ? elo.initial : it->second.rating_on(t, elo);
  mean /= static_cast<double>(r.tags.size());
  const double threshold = os.offering.config.moderation.competence_threshold;
  if (mean < threshold)
    fail(ErrorCode::Eligibility, "reviewer's mean rating " + std::to_string(mean) + " on the resource's topics is below " +
                                     std::to_string(threshold));

  auto& reviews = os.reviews[r.id];
  reviews[reviewer] = p.at("verdict").get<content::Verdict>();
  int approvals = 0;
  for (const auto& [who, v] : reviews) approvals += v == content::Verdict::Approve;
  const int rejections = static_cast<int>(reviews.size()) - approvals;

  switch (content::tally(reviews, os.offering.config.moderation.review_quorum)) {
    case content::TallyOutcome::Publish:
      content::transition(r, ResourceStatus::Published);
      clear_moderation_state(os, r.id);
      break;
    case content::TallyOutcome::ReturnToDraft:
      content::transition(r, ResourceStatus::Draft);
      r.moderation_note = "returned to draft by peer review";
      outbox_.push_back({"moderation_note", state_.users.at(r.author).display_name,
                         "Resource " + r.id.str() + " returned to draft", r.moderation_note});
      clear_moderation_state(os, r.id);
      break;
    case content::TallyOutcome::Pending:
      break;
  }
  return {{"approvals", approvals}, {"rejections", rejections}, {"status", content::to_string(r.status)}};
}

ResourceStatus Engine::flag_resource(UserId flagger, ResourceId resource, std::string reason, Timestamp now) {
  json r = commit("resource_flagged", offering_of(resource), now,
                  {{"flagger", flagger}, {"resource", resource}, {"reason", std::move(reason)}});
  return content::parse_status(r.at("status").get<std::string>());
}

json Engine::on_resource_flagged(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  const auto flagger = e.payload.at("flagger").get<UserId>();
  require_member(os, flagger);
  content::Resource& r = os.resources.at(e.payload.at("resource").get<ResourceId>());
  if (r.status != ResourceStatus::Published) fail(ErrorCode::Lifecycle, "only published resources can be flagged");
  auto& flags = os.flags[r.id];
  flags[flagger] = content::Flag{flagger, e.payload.at("reason").get<std::string>(), e.at};
  if (static_cast<int>(flags.size()) >= os.offering.flag_threshold()) {
    content::transition(r, ResourceStatus::PendingModeration);
    os.reviews.erase(r.id);
  }
  return {{"status", content::to_string(r.status)}, {"flags", flags.size()}};
}

void Engine::endorse(UserId caller, ResourceId resource, Timestamp now) {
  commit("resource_endorsed", offering_of(resource), now, {{"caller", caller}, {"resource", resource}});
}

json Engine::on_resource_endorsed(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  require_instructor(os, e.payload.at("caller").get<UserId>());
  content::Resource& r = os.resources.at(e.payload.at("resource").get<ResourceId>());
  if (r.status == ResourceStatus::Deleted) fail(ErrorCode::Lifecycle, "deleted resources cannot be endorsed");
  r.endorsed = true;
  return json::object();
}

void Engine::delete_resource(UserId caller, ResourceId resource, Timestamp now) {
  commit("resource_deleted", offering_of(resource), now, {{"caller", caller}, {"resource", resource}});
}

void Engine::revert_resource(OfferingState& os, ResourceId resource, Timestamp at) {
  learner::ResourceRating& rating = os.resource_ratings.at(resource);
  std::set<UserId> touched;
  for (auto& a : os.attempts) {
    if (a.resource != resource || !a.scored) continue;
    auto it = os.deltas.find(a.id);
    if (it == os.deltas.end()) continue;
    if (learner::revert_delta(it->second, os.learners.at(a.student), rating)) touched.insert(a.student);
  }
  for (UserId u : touched) learner::record_snapshot(os.learners.at(u), at);
}

json Engine::on_resource_deleted(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  const auto caller = e.payload.at("caller").get<UserId>();
  content::Resource& r = os.resources.at(e.payload.at("resource").get<ResourceId>());
  if (r.author != caller && os.role_of(caller) != core::Role::Instructor)
    fail(ErrorCode::Forbidden, "only the author or an instructor can delete a resource");
  content::transition(r, ResourceStatus::Deleted);
  clear_moderation_state(os, r.id);
  revert_resource(os, r.id, e.at);
  return json::object();
}

AttemptOutcome Engine::attempt(UserId student, ResourceId resource, std::optional<int> chosen_index,
                               Timestamp now) {
  json r = commit("attempt_recorded", offering_of(resource), now,
                  {{"student", student}, {"resource", resource}, {"chosen_index", chosen_index}});
  AttemptOutcome out;
  out.attempt = r.at("attempt_id").get<AttemptId>();
  const OfferingState& os = offering(offering_of(resource));
  const content::Resource& res = os.resources.at(resource);
  const content::AttemptRecord& rec = os.attempts.back();
  out.correct = rec.correct;
  if (res.content.mcq) {
    out.correct_index = res.content.mcq->correct_index;
    out.explanation = res.content.mcq->explanation;
    out.answer_distribution = os.distribution.at(resource);
  }
  if (auto it = os.deltas.find(out.attempt); it != os.deltas.end()) out.delta = it->second;
  return out;
}

json Engine::on_attempt(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  const auto& p = e.payload;
  const auto student = p.at("student").get<UserId>();
  require_member(os, student);
  const auto rid = p.at("resource").get<ResourceId>();
  const content::Resource& r = os.resources.at(rid);
  if (r.status != ResourceStatus::Published)
    fail(ErrorCode::Lifecycle, "resource " + rid.str() + " is " + std::string(content::to_string(r.status)) +
                                   " and cannot be attempted");
  const auto chosen = p.at("chosen_index").get<std::optional<int>>();

  content::AttemptRecord rec;
  rec.student = student;
  rec.resource = rid;
  rec.at = e.at;
  if (r.kind == content::ResourceKind::Mcq) {
    const auto& mcq = *r.content.mcq;
    if (!chosen) fail(ErrorCode::Validation, "an MCQ attempt needs chosen_index");
    if (*chosen < 0 || static_cast<std::size_t>(*chosen) >= mcq.choices.size())
      fail(ErrorCode::Validation, "chosen_index out of range");
    rec.chosen_index = chosen;
    rec.correct = *chosen == mcq.correct_index;
  } else if (chosen) {
    fail(ErrorCode::Validation, "only MCQs take a chosen_index");
  }

  bool first = true;
  if (auto it = os.attempts_by_user.find(student); it != os.attempts_by_user.end())
    for (std::size_t idx : it->second)
      if (os.attempts[idx].resource == rid) first = false;
  rec.scored = r.kind == content::ResourceKind::Mcq && first;
  rec.id = AttemptId{state_.next_attempt++};

  if (rec.scored) {
    learner::LearnerState& ls = learner_mut(os, student, e.at);
    learner::RatingDelta delta =
        learner::apply_attempt(ls, os.resource_ratings.at(rid), r.tags, *rec.correct, os.offering.config.elo);
    delta.attempt = rec.id;
    os.deltas.emplace(rec.id, std::move(delta));
    learner::record_snapshot(ls, e.at);
  }
  if (rec.chosen_index) ++os.distribution[rid][static_cast<std::size_t>(*rec.chosen_index)];
  if (r.kind == content::ResourceKind::Mcq) ++os.counters[student].answered;
  ++os.attempt_count[rid];
  os.attempts_by_user[student].push_back(os.attempts.size());
  os.attempts.push_back(rec);
  award_inline(os, student, e.at);
  return {{"attempt_id", rec.id}};
}

content::QualitySummary Engine::rate_resource(UserId rater, ResourceId resource, int stars, Timestamp now) {
  commit("rating_submitted", offering_of(resource), now, {{"rater", rater}, {"resource", resource}, {"stars", stars}});
  return quality(resource);
}

json Engine::on_rating(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  const auto rater = e.payload.at("rater").get<UserId>();
  const auto rid = e.payload.at("resource").get<ResourceId>();
  const int stars = e.payload.at("stars").get<int>();
  require_member(os, rater);
  content::validate_stars(stars);
  const content::Resource& r = os.resources.at(rid);
  if (r.status != ResourceStatus::Published) fail(ErrorCode::Lifecycle, "only published resources can be rated");
  bool engaged = false;
  if (auto it = os.attempts_by_user.find(rater); it != os.attempts_by_user.end())
    for (std::size_t idx : it->second) engaged = engaged || os.attempts[idx].resource == rid;
  if (!engaged)
    fail(ErrorCode::Precondition, r.kind == content::ResourceKind::Mcq ? "attempt the question before rating it"
                                                                       : "view the resource before rating it");
  os.stars[rid][rater] = stars;
  ++os.counters[rater].rated;
  award_inline(os, rater, e.at);
  return json::object();
}

CommentId Engine::comment(UserId author, ResourceId resource, std::string text, Timestamp now) {
  json r = commit("comment_added", offering_of(resource), now,
                  {{"author", author}, {"resource", resource}, {"text", std::move(text)}});
  return r.at("comment_id").get<CommentId>();
}

json Engine::on_comment(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  const auto author = e.payload.at("author").get<UserId>();
  const auto rid = e.payload.at("resource").get<ResourceId>();
  auto text = content::sanitize_markup(e.payload.at("text").get<std::string>());
  require_member(os, author);
  if (blank(text)) fail(ErrorCode::Validation, "comment text must not be empty");
  if (os.resources.at(rid).status != ResourceStatus::Published)
    fail(ErrorCode::Lifecycle, "only published resources take comments");
  content::Comment c{CommentId{state_.next_comment++}, author, rid, std::move(text), e.at};
  ++os.comment_count[rid];
  os.comments.push_back(c);
  return {{"comment_id", c.id}};
}

std::vector<grading::Badge> Engine::due_for(const OfferingState& os, UserId student, Timestamp now) const {
  grading::EngagementVector eng;
  if (auto it = os.counters.find(student); it != os.counters.end()) {
    eng.authored = it->second.authored;
    eng.answered = it->second.answered;
    eng.rated = it->second.rated;
  }
  std::set<std::string> held;
  if (auto it = os.badges.find(student); it != os.badges.end()) {
    eng.achievements = static_cast<std::uint32_t>(it->second.size());
    for (const auto& b : it->second) held.insert(b.id);
  }

  std::vector<grading::TopicProgress> progress;
  const auto& elo = os.offering.config.elo;
  auto lit = os.learners.find(student);
  for (const auto& t : os.offering.topics) {
    grading::TopicProgress tp{t.id, learner::CompetencyBand::Yellow, 0};
    double rating = elo.initial;
    if (lit != os.learners.end()) {
      rating = lit->second.rating_on(t.id, elo);
      if (auto rt = lit->second.ratings.find(t.id); rt != lit->second.ratings.end())
        tp.scored_attempts = rt->second.attempts;
    }
    tp.band = learner::competency_band(rating, os.offering.config.bands);
    progress.push_back(tp);
  }
  return grading::due_badges(eng, progress, held, os.offering.config.badges, now);
}

void Engine::award_inline(OfferingState& os, UserId student, Timestamp at) {
  if (os.role_of(student) != core::Role::Student) return;
  auto due = due_for(os, student, at);
  auto& held = os.badges[student];
  for (auto& b : due) held.push_back(std::move(b));
}

std::vector<grading::Badge> Engine::award_badges(UserId student, OfferingId offering_id, Timestamp now) {
  const OfferingState& os = offering(offering_id);
  require_member(os, student);
  if (os.role_of(student) != core::Role::Student) return {};
  auto due = due_for(os, student, now);
  if (due.empty()) return {};
  commit("badges_awarded", offering_id, now, {{"student", student}, {"badges", due}});
  return due;
}

json Engine::on_badges(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  const auto student = e.payload.at("student").get<UserId>();
  require_member(os, student);
  auto badges = e.payload.at("badges").get<std::vector<grading::Badge>>();
  auto& held = os.badges[student];
  for (const auto& b : badges)
    for (const auto& h : held)
      if (h.id == b.id) fail(ErrorCode::Conflict, "badge " + b.id + " already awarded");
  for (auto& b : badges) held.push_back(std::move(b));
  return json::object();
}

}  // namespace peerlearn::service
