#include <algorithm>

#include "peerlearn/error.hpp"
#include "peerlearn/service/engine.hpp"

namespace peerlearn::service {

using content::ResourceStatus;

const content::Resource& Engine::view_resource(UserId caller, ResourceId id) const {
  const OfferingState& os = offering(offering_of(id));
  require_member(os, caller);
  const content::Resource& r = os.resources.at(id);
  if (r.status != ResourceStatus::Published && r.author != caller && os.role_of(caller) != core::Role::Instructor)
    fail(ErrorCode::NotFound, "unknown resource " + id.str());
  return r;
}

learner::KnowledgeState Engine::knowledge_state(UserId caller, OfferingId offering_id, UserId student,
                                                learner::KnowledgeMode mode) const {
  const OfferingState& os = offering(offering_id);
  if (caller != student) require_instructor(os, caller);
  if (!os.is_member(student))
    fail(ErrorCode::Forbidden, "user " + student.str() + " is not enrolled in offering " + offering_id.str());

  std::vector<const learner::LearnerState*> cohort;
  for (UserId s : os.students())
    if (auto it = os.learners.find(s); it != os.learners.end()) cohort.push_back(&it->second);

  const auto topics = os.offering.topic_ids();
  const learner::LearnerState& ls = os.learners.at(student);
  return learner::knowledge_state(ls, topics, cohort, mode, os.offering.config.elo, os.offering.config.bands);
}

double Engine::expected_correctness(OfferingId offering_id, UserId student, ResourceId resource) const {
  const OfferingState& os = offering(offering_id);
  const content::Resource& r = os.resources.at(resource);
  static const std::map<TopicId, learner::TopicRating> empty;
  auto it = os.learners.find(student);
  return learner::expected_correctness(it == os.learners.end() ? empty : it->second.ratings,
                                       os.resource_ratings.at(resource).rating, r.tags, os.offering.config.elo);
}

content::QualitySummary Engine::quality(ResourceId resource) const {
  const OfferingState& os = offering(offering_of(resource));
  auto it = os.stars.find(resource);
  if (it == os.stars.end()) return {};
  return content::summarize_stars(it->second);
}

std::vector<int> Engine::answer_distribution(ResourceId resource) const {
  const OfferingState& os = offering(offering_of(resource));
  auto it = os.distribution.find(resource);
  return it == os.distribution.end() ? std::vector<int>{} : it->second;
}

recommend::CallerHistory Engine::history_of(const OfferingState& os, UserId caller) const {
  recommend::CallerHistory h;
  auto it = os.attempts_by_user.find(caller);
  if (it == os.attempts_by_user.end()) return h;
  for (std::size_t idx : it->second) {
    const auto& a = os.attempts[idx];
    h.attempted.insert(a.resource);
    if (a.correct) h.latest_correct[a.resource] = *a.correct;
  }
  return h;
}

recommend::ResourceCard Engine::card_for(const OfferingState& os, const content::Resource& r, UserId caller,
                                         const recommend::CallerHistory& history) const {
  recommend::ResourceCard card;
  card.resource = r.id;
  card.created_at = r.created_at;
  card.difficulty = os.resource_ratings.at(r.id).rating.points();
  if (auto it = os.attempt_count.find(r.id); it != os.attempt_count.end()) card.attempts_count = it->second;
  if (auto it = os.comment_count.find(r.id); it != os.comment_count.end()) card.comments_count = it->second;

  recommend::FitInputs fit;
  if (auto it = os.stars.find(r.id); it != os.stars.end() && !it->second.empty()) {
    const auto q = content::summarize_stars(it->second);
    card.quality = q.mean_stars;
    card.ratings_count = q.count;
    fit.mean_stars = q.mean_stars;
  }
  static const std::map<TopicId, learner::TopicRating> empty;
  auto lit = os.learners.find(caller);
  fit.expected_correctness = learner::expected_correctness(lit == os.learners.end() ? empty : lit->second.ratings,
                                                           os.resource_ratings.at(r.id).rating, r.tags,
                                                           os.offering.config.elo);
  fit.attempted = history.attempted.count(r.id) > 0;
  card.personal_fit = fit_strategy_ ? fit_strategy_->score(fit) : recommend::personal_fit(fit, os.offering.config.fit);
  return card;
}

std::vector<recommend::ResourceCard> Engine::search(UserId caller, OfferingId offering_id,
                                                    const recommend::SearchQuery& query) const {
  const OfferingState& os = offering(offering_id);
  require_member(os, caller);
  if (query.limit == 0) fail(ErrorCode::Validation, "limit must be positive");

  std::vector<const content::Resource*> all;
  all.reserve(os.resources.size());
  for (const auto& [id, r] : os.resources) all.push_back(&r);
  const auto history = history_of(os, caller);
  const auto hits = recommend::filter_resources(caller, all, history, query);

  std::vector<recommend::ResourceCard> cards;
  cards.reserve(hits.size());
  for (const content::Resource* r : hits) cards.push_back(card_for(os, *r, caller, history));
  cards = recommend::sort_cards(std::move(cards), query.sort_key);
  if (cards.size() > query.limit) cards.resize(query.limit);
  return cards;
}

std::vector<recommend::ResourceCard> Engine::recommend(UserId caller, OfferingId offering_id, std::size_t n) const {
  if (n == 0) fail(ErrorCode::Validation, "n must be at least 1");
  recommend::SearchQuery query;
  query.sort_key = recommend::SortKey::Recommended;
  query.limit = n;
  return search(caller, offering_id, query);
}

std::vector<content::Comment> Engine::comments(UserId caller, ResourceId resource) const {
  view_resource(caller, resource);
  const OfferingState& os = offering(offering_of(resource));
  std::vector<content::Comment> out;
  for (const auto& c : os.comments)
    if (c.resource == resource) out.push_back(c);
  return out;
}

Engagement Engine::engagement(UserId caller, OfferingId offering_id, UserId student) const {
  const OfferingState& os = offering(offering_id);
  if (caller != student) require_instructor(os, caller);
  require_member(os, student);

  auto vector_of = [&](UserId u) {
    grading::EngagementVector v;
    if (auto it = os.counters.find(u); it != os.counters.end()) {
      v.authored = it->second.authored;
      v.answered = it->second.answered;
      v.rated = it->second.rated;
    }
    if (auto it = os.badges.find(u); it != os.badges.end()) v.achievements = static_cast<std::uint32_t>(it->second.size());
    return v;
  };

  Engagement out;
  out.student = vector_of(student);
  std::vector<grading::EngagementVector> cohort;
  for (UserId s : os.students()) cohort.push_back(vector_of(s));
  out.cohort = grading::cohort_mean(cohort);
  return out;
}

std::vector<grading::Badge> Engine::badges(OfferingId offering_id, UserId student) const {
  const OfferingState& os = offering(offering_id);
  auto it = os.badges.find(student);
  return it == os.badges.end() ? std::vector<grading::Badge>{} : it->second;
}

double Engine::overall_rating(OfferingId offering_id, UserId student) const {
  const OfferingState& os = offering(offering_id);
  const auto topics = os.offering.topic_ids();
  auto it = os.learners.find(student);
  if (it == os.learners.end()) return os.offering.config.elo.initial;
  return grading::overall_rating(it->second, topics, os.offering.config.elo);
}

int Engine::round_mark(OfferingId offering_id, UserId student, int round_index, Timestamp now, bool force) const {
  const OfferingState& os = offering(offering_id);
  if (round_index < 1 || round_index > static_cast<int>(os.rounds.size()))
    fail(ErrorCode::Validation, "unknown round " + std::to_string(round_index));
  const grading::RoundConfig& round = os.rounds[static_cast<std::size_t>(round_index - 1)];
  if (!force && now < round.end) fail(ErrorCode::Precondition, "round " + std::to_string(round_index) + " is still open");

  std::vector<content::AttemptRecord> attempts;
  if (auto it = os.attempts_by_user.find(student); it != os.attempts_by_user.end())
    for (std::size_t idx : it->second) attempts.push_back(os.attempts[idx]);

  std::vector<grading::AuthoredResource> authored;
  for (const auto& [id, r] : os.resources) {
    if (r.author != student) continue;
    grading::AuthoredResource a{id, r.created_at, r.status, {}, r.endorsed};
    if (auto it = os.stars.find(id); it != os.stars.end()) a.quality = content::summarize_stars(it->second);
    authored.push_back(a);
  }
  return grading::round_mark(round, attempts, authored);
}

std::vector<GradeRow> Engine::grade_rows(UserId caller, OfferingId offering_id) const {
  const OfferingState& os = offering(offering_id);
  require_instructor(os, caller);
  std::vector<GradeRow> rows;
  for (UserId s : os.students()) {
    GradeRow row;
    row.student = s;
    for (std::size_t i = 0; i < os.rounds.size(); ++i)
      row.round_marks.push_back(round_mark(offering_id, s, static_cast<int>(i) + 1, 0, true));
    row.overall_rating = overall_rating(offering_id, s);
    row.rating_mark = grading::rating_to_mark(row.overall_rating);
    row.ripple_total = grading::ripple_marks(row.round_marks, row.overall_rating);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace peerlearn::service
