#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "peerlearn/content/resource.hpp"
#include "peerlearn/core/offering.hpp"
#include "peerlearn/grading/grading.hpp"
#include "peerlearn/learner/elo.hpp"
#include "peerlearn/learner/knowledge.hpp"
#include "peerlearn/recommend/recommender.hpp"
#include "peerlearn/service/json_io.hpp"

namespace peerlearn::service {

// One entry of the append-only ledger. `seq` is dense over the whole engine;
// `offering_seq` is dense within the event's offering (0 for global events).
struct Event {
  std::uint64_t seq = 0;
  std::optional<OfferingId> offering;
  std::uint64_t offering_seq = 0;
  std::string kind;
  Timestamp at = 0;
  json payload;
};

void to_json(json& j, const Event& e);
void from_json(const json& j, Event& e);

class EventSink {
 public:
  virtual ~EventSink() = default;
  // Must make the event durable before returning.
  virtual void append(const Event& event) = 0;
};

struct UserRecord {
  UserId id;
  std::string display_name;
  std::string token;
  std::string external_ref;
  std::optional<bool> research_consent;
  bool consent_changed = false;
};

struct Counters {
  std::uint32_t authored = 0;
  std::uint32_t answered = 0;
  std::uint32_t rated = 0;
};

struct OfferingState {
  core::Offering offering;
  std::map<UserId, core::Enrolment> members;
  std::map<std::string, core::EnrolmentTicket> tickets;
  std::map<ResourceId, content::Resource> resources;
  std::map<ResourceId, learner::ResourceRating> resource_ratings;
  std::map<UserId, learner::LearnerState> learners;
  std::vector<content::AttemptRecord> attempts;
  std::map<AttemptId, learner::RatingDelta> deltas;
  std::map<ResourceId, std::map<UserId, int>> stars;
  std::map<ResourceId, std::map<UserId, content::Flag>> flags;
  std::map<ResourceId, std::map<UserId, content::Verdict>> reviews;
  std::vector<content::Comment> comments;
  std::map<UserId, std::vector<grading::Badge>> badges;
  std::map<UserId, Counters> counters;
  std::vector<grading::RoundConfig> rounds;
  std::uint64_t last_offering_seq = 0;

  // Derived from the fields above; not serialized, rebuilt on restore.
  std::map<ResourceId, int> attempt_count;
  std::map<ResourceId, int> comment_count;
  std::map<ResourceId, std::vector<int>> distribution;
  std::map<UserId, std::vector<std::size_t>> attempts_by_user;

  bool is_member(UserId u) const { return members.count(u) > 0; }
  std::optional<core::Role> role_of(UserId u) const;
  std::vector<UserId> students() const;
};

struct EngineState {
  std::map<UserId, UserRecord> users;
  std::map<OfferingId, OfferingState> offerings;
  std::uint64_t seq = 0;
  std::uint64_t next_user = 1;
  std::uint64_t next_offering = 1;
  std::uint64_t next_topic = 1;
  std::uint64_t next_resource = 1;
  std::uint64_t next_attempt = 1;
  std::uint64_t next_comment = 1;
};

void to_json(json& j, const EngineState& s);
void from_json(const json& j, EngineState& s);

// ---- command inputs / outputs --------------------------------------------

struct Registration {
  UserId user;
  std::string token;
};

struct LaunchResult {
  UserId user;
  std::string token;
  core::Role role = core::Role::Student;
};

struct ImportQuery {
  std::optional<std::string> university;
  std::optional<std::string> course;
  std::optional<OfferingId> offering_id;
  std::vector<std::string> topics;  // source topic names
  std::optional<double> min_rating;  // mean stars
  std::optional<content::ResourceKind> resource_type;
  std::string keywords;
};

void to_json(json& j, const ImportQuery& q);
void from_json(const json& j, ImportQuery& q);

struct AttemptOutcome {
  AttemptId attempt;
  std::optional<bool> correct;
  std::optional<int> correct_index;
  std::vector<int> answer_distribution;
  std::string explanation;
  std::optional<learner::RatingDelta> delta;
};

struct ReviewTally {
  int approvals = 0;
  int rejections = 0;
  content::ResourceStatus status = content::ResourceStatus::PendingModeration;
};

struct ResourceDraft {
  content::ResourceKind kind = content::ResourceKind::Mcq;
  content::ResourceContent content;
  std::vector<TopicId> tags;
};

struct GradeRow {
  UserId student;
  std::vector<int> round_marks;
  double overall_rating = 0.0;
  double rating_mark = 0.0;
  double ripple_total = 0.0;
};

struct Engagement {
  grading::EngagementVector student;
  grading::EngagementMean cohort;
};

// Message produced by a committed event for delivery outside the ledger
// (invitations, moderation notes). Never re-emitted on replay.
struct OutboundMessage {
  std::string kind;
  std::string recipient;
  std::string subject;
  std::string body;
};

// The authoritative in-memory state plus every domain command. Each command
// validates against the current state, then commits exactly one event:
// applied to memory, then appended to the sink. Replaying the same events
// into a fresh engine reproduces the state bit for bit. Not thread-safe;
// callers serialize writers.
class Engine {
 public:
  using TokenSource = std::function<std::string()>;

  explicit Engine(core::OfferingConfig defaults = {}, EventSink* sink = nullptr, TokenSource tokens = {});

  void set_sink(EventSink* sink) { sink_ = sink; }
  const core::OfferingConfig& defaults() const { return defaults_; }

  // ---- administration
  Registration register_user(std::string display_name, Timestamp now, std::string external_ref = {});
  OfferingId create_offering(UserId caller, core::OfferingMeta meta, std::vector<std::string> topics,
                             Timestamp now, core::ModerationPolicy policy = core::ModerationPolicy::None,
                             std::optional<core::OfferingConfig> config = std::nullopt, bool from_lms = false);
  TopicId add_topic(UserId caller, OfferingId offering, std::string name, Timestamp now);
  void rename_topic(UserId caller, OfferingId offering, TopicId topic, std::string name, Timestamp now);
  // Topics matched by name keep their ids, new names are added and missing
  // ones removed; the final order follows `names`.
  void set_topics(UserId caller, OfferingId offering, std::vector<std::string> names, Timestamp now);
  void remove_topic(UserId caller, OfferingId offering, TopicId topic, Timestamp now);
  void set_policy(UserId caller, OfferingId offering, core::ModerationPolicy policy, Timestamp now);
  std::string issue_ticket(UserId caller, OfferingId offering, core::TicketKind kind, Timestamp now,
                           std::optional<Timestamp> expiry = std::nullopt, core::Role role = core::Role::Student,
                           std::string email = {});
  core::Enrolment enrol(UserId user, OfferingId offering, std::string_view code, Timestamp now);
  void add_member(UserId caller, OfferingId offering, UserId user, core::Role role, Timestamp now);
  LaunchResult lms_launch(const core::LaunchRecord& launch, std::string display_name, Timestamp now);
  std::vector<ResourceId> import_resources(UserId caller, OfferingId target, const ImportQuery& query,
                                           const std::map<TopicId, TopicId>& topic_mapping, Timestamp now);
  std::vector<ResourceId> import_interchange(UserId caller, OfferingId target, std::string_view ndjson,
                                             const std::map<std::string, std::string>& topic_renames,
                                             Timestamp now);
  void set_consent(UserId user, bool consent, Timestamp now);
  void configure_rounds(UserId caller, OfferingId offering, std::vector<grading::RoundConfig> rounds,
                        Timestamp now);

  // ---- content lifecycle
  ResourceId author_resource(UserId author, OfferingId offering, ResourceDraft draft, Timestamp now,
                             bool keep_as_draft = false);
  void edit_resource(UserId caller, ResourceId resource, ResourceDraft draft, Timestamp now);
  void submit_resource(UserId caller, ResourceId resource, Timestamp now);
  content::ResourceStatus moderate(UserId caller, ResourceId resource, content::Verdict decision,
                                   std::string note, Timestamp now);
  ReviewTally peer_review(UserId reviewer, ResourceId resource, content::Verdict verdict, std::string rationale,
                          Timestamp now);
  content::ResourceStatus flag_resource(UserId flagger, ResourceId resource, std::string reason, Timestamp now);
  void endorse(UserId caller, ResourceId resource, Timestamp now);
  void delete_resource(UserId caller, ResourceId resource, Timestamp now);
  AttemptOutcome attempt(UserId student, ResourceId resource, std::optional<int> chosen_index, Timestamp now);
  content::QualitySummary rate_resource(UserId rater, ResourceId resource, int stars, Timestamp now);
  CommentId comment(UserId author, ResourceId resource, std::string text, Timestamp now);
  std::vector<grading::Badge> award_badges(UserId student, OfferingId offering, Timestamp now);

  // ---- queries
  const EngineState& state() const { return state_; }
  const OfferingState& offering(OfferingId id) const;
  const UserRecord& user(UserId id) const;
  std::optional<UserId> user_by_token(std::string_view token) const;
  const content::Resource& resource(ResourceId id) const;
  // Resource as seen by `caller`: Draft/Pending/Deleted only for the author
  // and instructors.
  const content::Resource& view_resource(UserId caller, ResourceId id) const;
  OfferingId offering_of(ResourceId id) const;
  std::vector<OfferingId> offerings_of(UserId user) const;

  learner::KnowledgeState knowledge_state(UserId caller, OfferingId offering, UserId student,
                                          learner::KnowledgeMode mode) const;
  double expected_correctness(OfferingId offering, UserId student, ResourceId resource) const;
  content::QualitySummary quality(ResourceId resource) const;
  std::vector<recommend::ResourceCard> search(UserId caller, OfferingId offering,
                                              const recommend::SearchQuery& query) const;
  std::vector<recommend::ResourceCard> recommend(UserId caller, OfferingId offering, std::size_t n) const;
  std::vector<content::Comment> comments(UserId caller, ResourceId resource) const;
  std::vector<int> answer_distribution(ResourceId resource) const;
  Engagement engagement(UserId caller, OfferingId offering, UserId student) const;
  std::vector<grading::Badge> badges(OfferingId offering, UserId student) const;
  int round_mark(OfferingId offering, UserId student, int round_index, Timestamp now, bool force = false) const;
  std::vector<GradeRow> grade_rows(UserId caller, OfferingId offering) const;
  double overall_rating(OfferingId offering, UserId student) const;
  std::string export_interchange(UserId caller, OfferingId offering) const;

  // Messages produced by the most recent command.
  const std::vector<OutboundMessage>& outbox() const { return outbox_; }

  // ---- persistence
  void replay(const Event& event);
  json snapshot() const;
  void restore(const json& snapshot);
  std::uint64_t state_hash() const;

  void set_fit_strategy(const recommend::FitStrategy* strategy) { fit_strategy_ = strategy; }

 private:
  json commit(std::string kind, std::optional<OfferingId> offering, Timestamp at, json payload);
  json apply(const Event& e);

  OfferingState& offering_mut(OfferingId id);
  content::Resource& resource_mut(ResourceId id);
  void require_instructor(const OfferingState& os, UserId caller) const;
  void require_member(const OfferingState& os, UserId caller) const;
  void enrol_member(OfferingState& os, UserId user, core::Role role, Timestamp at);
  learner::LearnerState& learner_mut(OfferingState& os, UserId student, Timestamp at);
  void revert_resource(OfferingState& os, ResourceId resource, Timestamp at);
  recommend::CallerHistory history_of(const OfferingState& os, UserId caller) const;
  recommend::ResourceCard card_for(const OfferingState& os, const content::Resource& r, UserId caller,
                                   const recommend::CallerHistory& history) const;
  void rebuild_index();
  std::vector<grading::Badge> due_for(const OfferingState& os, UserId student, Timestamp now) const;
  // Badges earned by the event being applied are recorded with it.
  void award_inline(OfferingState& os, UserId student, Timestamp at);

  json on_user_registered(const Event& e);
  json on_offering_created(const Event& e);
  json on_topic_added(const Event& e);
  json on_topic_renamed(const Event& e);
  json on_topics_set(const Event& e);
  json on_policy_set(const Event& e);
  json on_ticket_issued(const Event& e);
  json on_enrolled(const Event& e);
  json on_member_added(const Event& e);
  json on_lms_launch(const Event& e);
  json on_resources_imported(const Event& e);
  json on_interchange_imported(const Event& e);
  json on_consent(const Event& e);
  json on_rounds_configured(const Event& e);
  json on_resource_authored(const Event& e);
  json on_resource_edited(const Event& e);
  json on_resource_submitted(const Event& e);
  json on_resource_moderated(const Event& e);
  json on_resource_reviewed(const Event& e);
  json on_resource_flagged(const Event& e);
  json on_resource_endorsed(const Event& e);
  json on_resource_deleted(const Event& e);
  json on_attempt(const Event& e);
  json on_rating(const Event& e);
  json on_comment(const Event& e);
  json on_badges(const Event& e);

  core::OfferingConfig defaults_;
  EventSink* sink_ = nullptr;
  TokenSource tokens_;
  const recommend::FitStrategy* fit_strategy_ = nullptr;
  EngineState state_;
  std::map<ResourceId, OfferingId> resource_index_;
  std::map<std::string, UserId, std::less<>> token_index_;
  std::vector<OutboundMessage> outbox_;
  bool poisoned_ = false;
};

}  // namespace peerlearn::service
