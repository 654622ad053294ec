#include "peerlearn/service/engine.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <sstream>

#include "peerlearn/error.hpp"

namespace peerlearn::service {

namespace {

std::string random_token() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(32, '0');
  for (char& c : out) c = kHex[rng() & 0xf];
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

}  // namespace

// ---- serialization ---------------------------------------------------------

void to_json(json& j, const Event& e) {
  j = {{"seq", e.seq}, {"offering", e.offering}, {"offering_seq", e.offering_seq},
       {"kind", e.kind}, {"at", e.at},             {"payload", e.payload}};
}

void from_json(const json& j, Event& e) {
  j.at("seq").get_to(e.seq);
  e.offering.reset();
  if (auto it = j.find("offering"); it != j.end() && !it->is_null()) e.offering = it->get<OfferingId>();
  j.at("offering_seq").get_to(e.offering_seq);
  j.at("kind").get_to(e.kind);
  j.at("at").get_to(e.at);
  e.payload = j.at("payload");
}

void to_json(json& j, const UserRecord& u) {
  j = {{"id", u.id},
       {"display_name", u.display_name},
       {"token", u.token},
       {"external_ref", u.external_ref},
       {"research_consent", u.research_consent},
       {"consent_changed", u.consent_changed}};
}

void from_json(const json& j, UserRecord& u) {
  j.at("id").get_to(u.id);
  j.at("display_name").get_to(u.display_name);
  j.at("token").get_to(u.token);
  j.at("external_ref").get_to(u.external_ref);
  u.research_consent.reset();
  if (!j.at("research_consent").is_null()) u.research_consent = j.at("research_consent").get<bool>();
  j.at("consent_changed").get_to(u.consent_changed);
}

void to_json(json& j, const Counters& c) {
  j = {{"authored", c.authored}, {"answered", c.answered}, {"rated", c.rated}};
}

void from_json(const json& j, Counters& c) {
  j.at("authored").get_to(c.authored);
  j.at("answered").get_to(c.answered);
  j.at("rated").get_to(c.rated);
}

void to_json(json& j, const OfferingState& o) {
  j = {{"offering", o.offering},
       {"members", o.members},
       {"tickets", o.tickets},
       {"resources", o.resources},
       {"resource_ratings", o.resource_ratings},
       {"learners", o.learners},
       {"attempts", o.attempts},
       {"deltas", o.deltas},
       {"stars", o.stars},
       {"flags", o.flags},
       {"reviews", o.reviews},
       {"comments", o.comments},
       {"badges", o.badges},
       {"counters", o.counters},
       {"rounds", o.rounds},
       {"last_offering_seq", o.last_offering_seq}};
}

void from_json(const json& j, OfferingState& o) {
  j.at("offering").get_to(o.offering);
  j.at("members").get_to(o.members);
  j.at("tickets").get_to(o.tickets);
  j.at("resources").get_to(o.resources);
  j.at("resource_ratings").get_to(o.resource_ratings);
  j.at("learners").get_to(o.learners);
  j.at("attempts").get_to(o.attempts);
  j.at("deltas").get_to(o.deltas);
  j.at("stars").get_to(o.stars);
  j.at("flags").get_to(o.flags);
  j.at("reviews").get_to(o.reviews);
  j.at("comments").get_to(o.comments);
  j.at("badges").get_to(o.badges);
  j.at("counters").get_to(o.counters);
  j.at("rounds").get_to(o.rounds);
  j.at("last_offering_seq").get_to(o.last_offering_seq);
}

void to_json(json& j, const EngineState& s) {
  j = {{"users", s.users},
       {"offerings", s.offerings},
       {"seq", s.seq},
       {"next_user", s.next_user},
       {"next_offering", s.next_offering},
       {"next_topic", s.next_topic},
       {"next_resource", s.next_resource},
       {"next_attempt", s.next_attempt},
       {"next_comment", s.next_comment}};
}

void from_json(const json& j, EngineState& s) {
  j.at("users").get_to(s.users);
  j.at("offerings").get_to(s.offerings);
  j.at("seq").get_to(s.seq);
  j.at("next_user").get_to(s.next_user);
  j.at("next_offering").get_to(s.next_offering);
  j.at("next_topic").get_to(s.next_topic);
  j.at("next_resource").get_to(s.next_resource);
  j.at("next_attempt").get_to(s.next_attempt);
  j.at("next_comment").get_to(s.next_comment);
}

void to_json(json& j, const ImportQuery& q) {
  j = json::object();
  if (q.university) j["university"] = *q.university;
  if (q.course) j["course"] = *q.course;
  if (q.offering_id) j["offering_id"] = *q.offering_id;
  if (!q.topics.empty()) j["topics"] = q.topics;
  if (q.min_rating) j["min_rating"] = *q.min_rating;
  if (q.resource_type) j["resource_type"] = content::to_string(*q.resource_type);
  if (!q.keywords.empty()) j["keywords"] = q.keywords;
}

void from_json(const json& j, ImportQuery& q) {
  q = {};
  if (j.contains("university")) q.university = j.at("university").get<std::string>();
  if (j.contains("course")) q.course = j.at("course").get<std::string>();
  if (j.contains("offering_id")) q.offering_id = j.at("offering_id").get<OfferingId>();
  if (j.contains("topics")) j.at("topics").get_to(q.topics);
  if (j.contains("min_rating")) q.min_rating = j.at("min_rating").get<double>();
  if (j.contains("resource_type")) q.resource_type = content::parse_kind(j.at("resource_type").get<std::string>());
  if (j.contains("keywords")) j.at("keywords").get_to(q.keywords);
}

// ---- OfferingState -----------------------------------------------------------

std::optional<core::Role> OfferingState::role_of(UserId u) const {
  auto it = members.find(u);
  if (it == members.end()) return std::nullopt;
  return it->second.role;
}

std::vector<UserId> OfferingState::students() const {
  std::vector<UserId> out;
  for (const auto& [id, m] : members)
    if (m.role == core::Role::Student) out.push_back(id);
  return out;
}

// ---- engine plumbing -------------------------------------------------------

Engine::Engine(core::OfferingConfig defaults, EventSink* sink, TokenSource tokens)
    : defaults_(defaults), sink_(sink), tokens_(tokens ? std::move(tokens) : TokenSource(random_token)) {
  core::validate(defaults_);
}

json Engine::commit(std::string kind, std::optional<OfferingId> offering, Timestamp at, json payload) {
  if (poisoned_) fail(ErrorCode::Io, "event store write failed earlier; restart the service to recover");
  Event e;
  e.seq = state_.seq + 1;
  e.offering = offering;
  if (offering) {
    auto it = state_.offerings.find(*offering);
    e.offering_seq = it == state_.offerings.end() ? 1 : it->second.last_offering_seq + 1;
  }
  e.kind = std::move(kind);
  e.at = at;
  e.payload = std::move(payload);

  json result = apply(e);
  if (sink_) {
    try {
      sink_->append(e);
    } catch (const std::exception& ex) {
      poisoned_ = true;
      fail(ErrorCode::Io, std::string("failed to persist event: ") + ex.what());
    }
  }
  return result;
}

void Engine::replay(const Event& event) { apply(event); }

json Engine::apply(const Event& e) {
  using Handler = json (Engine::*)(const Event&);
  static const std::map<std::string, Handler, std::less<>> handlers = {
      {"user_registered", &Engine::on_user_registered},
      {"offering_created", &Engine::on_offering_created},
      {"topic_added", &Engine::on_topic_added},
      {"topic_renamed", &Engine::on_topic_renamed},
      {"topics_set", &Engine::on_topics_set},
      {"policy_set", &Engine::on_policy_set},
      {"ticket_issued", &Engine::on_ticket_issued},
      {"enrolled", &Engine::on_enrolled},
      {"member_added", &Engine::on_member_added},
      {"lms_launch", &Engine::on_lms_launch},
      {"resources_imported", &Engine::on_resources_imported},
      {"interchange_imported", &Engine::on_interchange_imported},
      {"consent_recorded", &Engine::on_consent},
      {"rounds_configured", &Engine::on_rounds_configured},
      {"resource_authored", &Engine::on_resource_authored},
      {"resource_edited", &Engine::on_resource_edited},
      {"resource_submitted", &Engine::on_resource_submitted},
      {"resource_moderated", &Engine::on_resource_moderated},
      {"resource_reviewed", &Engine::on_resource_reviewed},
      {"resource_flagged", &Engine::on_resource_flagged},
      {"resource_endorsed", &Engine::on_resource_endorsed},
      {"resource_deleted", &Engine::on_resource_deleted},
      {"attempt_recorded", &Engine::on_attempt},
      {"rating_submitted", &Engine::on_rating},
      {"comment_added", &Engine::on_comment},
      {"badges_awarded", &Engine::on_badges},
  };

  if (e.seq != state_.seq + 1)
    fail(ErrorCode::Corrupt, "event seq " + std::to_string(e.seq) + " does not follow " + std::to_string(state_.seq));
  auto h = handlers.find(e.kind);
  if (h == handlers.end()) fail(ErrorCode::Corrupt, "unknown event kind '" + e.kind + "'");

  if (e.offering && e.kind != "offering_created") {
    const OfferingState& os = offering(*e.offering);
    if (e.offering_seq != os.last_offering_seq + 1)
      fail(ErrorCode::Corrupt, "offering seq gap in event " + std::to_string(e.seq));
  }

  outbox_.clear();
  json result = (this->*(h->second))(e);

  state_.seq = e.seq;
  if (e.offering) state_.offerings.at(*e.offering).last_offering_seq = e.offering_seq;
  return result;
}

json Engine::snapshot() const {
  json j;
  j["state"] = state_;
  return j;
}

void Engine::restore(const json& snapshot) {
  EngineState s;
  try {
    snapshot.at("state").get_to(s);
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::Corrupt, std::string("snapshot is unreadable: ") + ex.what());
  }
  state_ = std::move(s);
  rebuild_index();
}

std::uint64_t Engine::state_hash() const {
  const std::string text = snapshot().dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void Engine::rebuild_index() {
  resource_index_.clear();
  token_index_.clear();
  for (const auto& [id, u] : state_.users)
    if (!u.token.empty()) token_index_[u.token] = id;
  for (auto& [oid, os] : state_.offerings) {
    os.attempt_count.clear();
    os.comment_count.clear();
    os.distribution.clear();
    os.attempts_by_user.clear();
    for (const auto& [rid, r] : os.resources) {
      resource_index_[rid] = oid;
      if (r.content.mcq) os.distribution[rid].assign(r.content.mcq->choices.size(), 0);
    }
    for (std::size_t i = 0; i < os.attempts.size(); ++i) {
      const auto& a = os.attempts[i];
      ++os.attempt_count[a.resource];
      os.attempts_by_user[a.student].push_back(i);
      if (a.chosen_index) {
        auto& d = os.distribution[a.resource];
        if (static_cast<std::size_t>(*a.chosen_index) < d.size()) ++d[static_cast<std::size_t>(*a.chosen_index)];
      }
    }
    for (const auto& c : os.comments) ++os.comment_count[c.resource];
  }
}

const OfferingState& Engine::offering(OfferingId id) const {
  auto it = state_.offerings.find(id);
  if (it == state_.offerings.end()) fail(ErrorCode::NotFound, "unknown offering " + id.str());
  return it->second;
}

OfferingState& Engine::offering_mut(OfferingId id) {
  auto it = state_.offerings.find(id);
  if (it == state_.offerings.end()) fail(ErrorCode::NotFound, "unknown offering " + id.str());
  return it->second;
}

const UserRecord& Engine::user(UserId id) const {
  auto it = state_.users.find(id);
  if (it == state_.users.end()) fail(ErrorCode::NotFound, "unknown user " + id.str());
  return it->second;
}

std::optional<UserId> Engine::user_by_token(std::string_view token) const {
  auto it = token_index_.find(token);
  if (it == token_index_.end()) return std::nullopt;
  return it->second;
}

OfferingId Engine::offering_of(ResourceId id) const {
  auto it = resource_index_.find(id);
  if (it == resource_index_.end()) fail(ErrorCode::NotFound, "unknown resource " + id.str());
  return it->second;
}

const content::Resource& Engine::resource(ResourceId id) const {
  return offering(offering_of(id)).resources.at(id);
}

content::Resource& Engine::resource_mut(ResourceId id) { return offering_mut(offering_of(id)).resources.at(id); }

std::vector<OfferingId> Engine::offerings_of(UserId user) const {
  std::vector<OfferingId> out;
  for (const auto& [id, os] : state_.offerings)
    if (os.is_member(user)) out.push_back(id);
  return out;
}

void Engine::require_member(const OfferingState& os, UserId caller) const {
  if (!os.is_member(caller))
    fail(ErrorCode::Forbidden, "user " + caller.str() + " is not enrolled in offering " + os.offering.id.str());
}

void Engine::require_instructor(const OfferingState& os, UserId caller) const {
  if (os.role_of(caller) != core::Role::Instructor)
    fail(ErrorCode::Forbidden, "instructor role required in offering " + os.offering.id.str());
}

void Engine::enrol_member(OfferingState& os, UserId user, core::Role role, Timestamp at) {
  auto [it, inserted] = os.members.try_emplace(user, core::Enrolment{user, role, at});
  if (!inserted) it->second.role = role;
  learner_mut(os, user, at);
}

learner::LearnerState& Engine::learner_mut(OfferingState& os, UserId student, Timestamp at) {
  auto it = os.learners.find(student);
  if (it != os.learners.end()) return it->second;
  const auto topics = os.offering.topic_ids();
  return os.learners.emplace(student, learner::make_learner(student, topics, at, os.offering.config.elo))
      .first->second;
}

// ---- administration commands -------------------------------------------------

Registration Engine::register_user(std::string display_name, Timestamp now, std::string external_ref) {
  std::string token = tokens_();
  json r = commit("user_registered", std::nullopt, now,
                  {{"display_name", std::move(display_name)}, {"token", token}, {"external_ref", external_ref}});
  return {r.at("user_id").get<UserId>(), token};
}

json Engine::on_user_registered(const Event& e) {
  const auto& p = e.payload;
  const auto name = p.at("display_name").get<std::string>();
  const auto token = p.at("token").get<std::string>();
  const auto ext = p.value("external_ref", std::string{});
  if (blank(name)) fail(ErrorCode::Validation, "display name must not be empty");
  if (token.empty() || token_index_.count(token)) fail(ErrorCode::Conflict, "token collision");
  if (!ext.empty())
    for (const auto& [id, u] : state_.users)
      if (u.external_ref == ext) fail(ErrorCode::Conflict, "external user reference already registered");

  UserRecord u{UserId{state_.next_user++}, name, token, ext, std::nullopt, false};
  token_index_[token] = u.id;
  state_.users.emplace(u.id, u);
  return {{"user_id", u.id}};
}

OfferingId Engine::create_offering(UserId caller, core::OfferingMeta meta, std::vector<std::string> topics,
                                   Timestamp now, core::ModerationPolicy policy,
                                   std::optional<core::OfferingConfig> config, bool from_lms) {
  json r = commit("offering_created", OfferingId{state_.next_offering}, now,
                  {{"caller", caller},
                   {"meta", meta},
                   {"topics", topics},
                   {"policy", core::to_string(policy)},
                   {"config", config.value_or(defaults_)},
                   {"created_from_lms", from_lms}});
  return r.at("offering_id").get<OfferingId>();
}

json Engine::on_offering_created(const Event& e) {
  const auto& p = e.payload;
  const auto caller = p.at("caller").get<UserId>();
  user(caller);
  const OfferingId id{state_.next_offering};
  if (!e.offering || *e.offering != id || e.offering_seq != 1)
    fail(ErrorCode::Corrupt, "offering_created event carries the wrong offering id");
  const auto names = p.at("topics").get<std::vector<std::string>>();
  core::Offering o = core::create_offering(id, p.at("meta").get<core::OfferingMeta>(), names,
                                           TopicId{state_.next_topic}, p.at("config").get<core::OfferingConfig>());
  o.moderation_policy = core::parse_policy(p.at("policy").get<std::string>());
  o.created_from_lms = p.at("created_from_lms").get<bool>();

  state_.next_offering++;
  state_.next_topic += names.size();
  OfferingState& os = state_.offerings[id];
  os.offering = std::move(o);
  enrol_member(os, caller, core::Role::Instructor, e.at);
  return {{"offering_id", id}};
}

TopicId Engine::add_topic(UserId caller, OfferingId offering, std::string name, Timestamp now) {
  json r = commit("topic_added", offering, now, {{"caller", caller}, {"name", std::move(name)}});
  return r.at("topic_id").get<TopicId>();
}

json Engine::on_topic_added(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  require_instructor(os, e.payload.at("caller").get<UserId>());
  const TopicId id{state_.next_topic};
  core::add_topic(os.offering, id, e.payload.at("name").get<std::string>());
  state_.next_topic++;
  return {{"topic_id", id}};
}

void Engine::rename_topic(UserId caller, OfferingId offering, TopicId topic, std::string name, Timestamp now) {
  commit("topic_renamed", offering, now, {{"caller", caller}, {"topic", topic}, {"name", std::move(name)}});
}

json Engine::on_topic_renamed(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  require_instructor(os, e.payload.at("caller").get<UserId>());
  core::rename_topic(os.offering, e.payload.at("topic").get<TopicId>(), e.payload.at("name").get<std::string>());
  return json::object();
}

void Engine::set_topics(UserId caller, OfferingId offering, std::vector<std::string> names, Timestamp now) {
  commit("topics_set", offering, now, {{"caller", caller}, {"names", std::move(names)}});
}

void Engine::remove_topic(UserId caller, OfferingId offering, TopicId topic, Timestamp now) {
  const OfferingState& os = this->offering(offering);
  if (!os.offering.find_topic(topic)) fail(ErrorCode::NotFound, "unknown topic " + topic.str());
  std::vector<std::string> names;
  for (const auto& t : os.offering.topics)
    if (t.id != topic) names.push_back(t.name);
  set_topics(caller, offering, std::move(names), now);
}

json Engine::on_topics_set(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  require_instructor(os, e.payload.at("caller").get<UserId>());
  const auto names = e.payload.at("names").get<std::vector<std::string>>();
  core::validate_topic_names(names);

  std::vector<std::string> blocked;
  for (const auto& t : os.offering.topics) {
    if (std::find(names.begin(), names.end(), t.name) != names.end()) continue;
    for (const auto& [rid, r] : os.resources)
      if (r.status != content::ResourceStatus::Deleted && std::count(r.tags.begin(), r.tags.end(), t.id))
        blocked.push_back(t.name + ": resource " + rid.str());
  }
  if (!blocked.empty())
    fail(ErrorCode::Conflict, "cannot remove topics still tagged on live resources", std::move(blocked));

  std::vector<core::Topic> next;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const core::Topic* existing = os.offering.find_topic(names[i]);
    next.push_back({existing ? existing->id : TopicId{state_.next_topic++}, names[i], static_cast<int>(i)});
  }
  os.offering.topics = std::move(next);
  return json::object();
}

void Engine::set_policy(UserId caller, OfferingId offering, core::ModerationPolicy policy, Timestamp now) {
  commit("policy_set", offering, now, {{"caller", caller}, {"policy", core::to_string(policy)}});
}

json Engine::on_policy_set(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  require_instructor(os, e.payload.at("caller").get<UserId>());
  os.offering.moderation_policy = core::parse_policy(e.payload.at("policy").get<std::string>());
  return json::object();
}

std::string Engine::issue_ticket(UserId caller, OfferingId offering, core::TicketKind kind, Timestamp now,
                                 std::optional<Timestamp> expiry, core::Role role, std::string email) {
  std::string code = tokens_().substr(0, 12);
  commit("ticket_issued", offering, now,
         {{"caller", caller},
          {"code", code},
          {"kind", core::to_string(kind)},
          {"expiry", expiry},
          {"role", core::to_string(role)},
          {"email", std::move(email)}});
  return code;
}

json Engine::on_ticket_issued(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  const auto& p = e.payload;
  require_instructor(os, p.at("caller").get<UserId>());
  core::EnrolmentTicket t;
  t.kind = core::parse_ticket_kind(p.at("kind").get<std::string>());
  t.code = p.at("code").get<std::string>();
  t.offering = os.offering.id;
  if (!p.at("expiry").is_null()) t.expiry = p.at("expiry").get<Timestamp>();
  t.role = core::parse_role(p.at("role").get<std::string>());
  t.email = p.value("email", std::string{});
  if (t.code.empty()) fail(ErrorCode::Validation, "enrolment code must not be empty");
  if (os.tickets.count(t.code)) fail(ErrorCode::Conflict, "enrolment code already exists in this offering");
  if (t.kind == core::TicketKind::AccessCode && t.role != core::Role::Student)
    fail(ErrorCode::Validation, "access codes always enrol students");

  if (t.kind == core::TicketKind::Invitation && !t.email.empty()) {
    outbox_.push_back({"invitation", t.email, "Invitation to " + os.offering.meta.course_code,
                       "Join " + os.offering.meta.course_name + " with invitation code " + t.code});
  }
  os.tickets.emplace(t.code, t);
  return {{"code", t.code}};
}

core::Enrolment Engine::enrol(UserId user_id, OfferingId offering, std::string_view code, Timestamp now) {
  const OfferingState& os = this->offering(offering);
  user(user_id);
  if (auto it = os.members.find(user_id); it != os.members.end()) return it->second;
  commit("enrolled", offering, now, {{"user", user_id}, {"code", std::string(code)}});
  return this->offering(offering).members.at(user_id);
}

json Engine::on_enrolled(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  const auto uid = e.payload.at("user").get<UserId>();
  const auto code = e.payload.at("code").get<std::string>();
  user(uid);
  auto it = os.tickets.find(code);
  if (it == os.tickets.end()) {
    for (const auto& [oid, other] : state_.offerings)
      if (oid != os.offering.id && other.tickets.count(code))
        fail(ErrorCode::InvalidCode, "enrolment code belongs to a different offering");
    fail(ErrorCode::InvalidCode, "unknown enrolment code");
  }
  core::check_ticket(it->second, os.offering.id, e.at);
  if (os.is_member(uid)) return {{"user", uid}};
  if (it->second.kind == core::TicketKind::Invitation) it->second.used = true;
  enrol_member(os, uid, it->second.role, e.at);
  return {{"user", uid}};
}

void Engine::add_member(UserId caller, OfferingId offering, UserId user_id, core::Role role, Timestamp now) {
  commit("member_added", offering, now, {{"caller", caller}, {"user", user_id}, {"role", core::to_string(role)}});
}

json Engine::on_member_added(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  require_instructor(os, e.payload.at("caller").get<UserId>());
  const auto uid = e.payload.at("user").get<UserId>();
  user(uid);
  enrol_member(os, uid, core::parse_role(e.payload.at("role").get<std::string>()), e.at);
  return json::object();
}

LaunchResult Engine::lms_launch(const core::LaunchRecord& launch, std::string display_name, Timestamp now) {
  core::map_lms_role(launch);
  offering(launch.offering_ref);
  json r = commit("lms_launch", launch.offering_ref, now,
                  {{"lms_role", launch.lms_role},
                   {"user_ref", launch.user_ref},
                   {"display_name", std::move(display_name)},
                   {"token", tokens_()}});
  return {r.at("user_id").get<UserId>(), r.at("token").get<std::string>(),
          core::parse_role(r.at("role").get<std::string>())};
}

json Engine::on_lms_launch(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  const auto& p = e.payload;
  core::LaunchRecord launch{p.at("lms_role").get<std::string>(), os.offering.id, p.at("user_ref").get<std::string>()};
  const core::Role role = core::map_lms_role(launch);
  if (launch.user_ref.empty()) fail(ErrorCode::Validation, "launch needs a user reference");

  const UserRecord* existing = nullptr;
  for (const auto& [id, u] : state_.users)
    if (u.external_ref == launch.user_ref) existing = &u;

  UserId uid;
  std::string token;
  if (existing) {
    uid = existing->id;
    token = existing->token;
  } else {
    auto name = p.at("display_name").get<std::string>();
    token = p.at("token").get<std::string>();
    if (blank(name)) name = launch.user_ref;
    if (token.empty() || token_index_.count(token)) fail(ErrorCode::Conflict, "token collision");
    uid = UserId{state_.next_user++};
    state_.users.emplace(uid, UserRecord{uid, name, token, launch.user_ref, std::nullopt, false});
    token_index_[token] = uid;
  }
  enrol_member(os, uid, role, e.at);
  return {{"user_id", uid}, {"token", token}, {"role", core::to_string(role)}};
}

void Engine::set_consent(UserId user_id, bool consent, Timestamp now) {
  commit("consent_recorded", std::nullopt, now, {{"user", user_id}, {"consent", consent}});
}

json Engine::on_consent(const Event& e) {
  const auto uid = e.payload.at("user").get<UserId>();
  const bool consent = e.payload.at("consent").get<bool>();
  user(uid);
  UserRecord& u = state_.users.at(uid);
  if (u.research_consent && *u.research_consent != consent) u.consent_changed = true;
  u.research_consent = consent;
  return json::object();
}

void Engine::configure_rounds(UserId caller, OfferingId offering, std::vector<grading::RoundConfig> rounds,
                              Timestamp now) {
  commit("rounds_configured", offering, now, {{"caller", caller}, {"rounds", rounds}});
}

json Engine::on_rounds_configured(const Event& e) {
  OfferingState& os = offering_mut(*e.offering);
  require_instructor(os, e.payload.at("caller").get<UserId>());
  auto rounds = e.payload.at("rounds").get<std::vector<grading::RoundConfig>>();
  grading::validate_rounds(rounds);
  os.rounds = std::move(rounds);
  return json::object();
}

// ---- import ------------------------------------------------------------------

std::vector<ResourceId> Engine::import_resources(UserId caller, OfferingId target, const ImportQuery& query,
                                                 const std::map<TopicId, TopicId>& topic_mapping, Timestamp now) {
  json mapping = json::array();
  for (const auto& [from, to] : topic_mapping) mapping.push_back({from, to});
  json r = commit("resources_imported", target, now, {{"caller", caller}, {"query", query}, {"mapping", mapping}});
  return r.at("resource_ids").get<std::vector<ResourceId>>();
}

json Engine::on_resources_imported(const Event& e) {
  OfferingState& target = offering_mut(*e.offering);
  const auto caller = e.payload.at("caller").get<UserId>();
  require_instructor(target, caller);
  const auto query = e.payload.at("query").get<ImportQuery>();
  std::map<TopicId, TopicId> mapping;
  for (const auto& pair : e.payload.at("mapping")) mapping[pair.at(0).get<TopicId>()] = pair.at(1).get<TopicId>();
  for (const auto& [from, to] : mapping)
    if (!target.offering.find_topic(to))
      fail(ErrorCode::Validation, "topic mapping targets unknown topic " + to.str());

  std::vector<const content::Resource*> matched;
  for (const auto& [oid, os] : state_.offerings) {
    if (oid == target.offering.id) continue;
    const auto& meta = os.offering.meta;
    if (query.offering_id && *query.offering_id != oid) continue;
    if (query.university && lower(*query.university) != lower(meta.university_name)) continue;
    if (query.course && lower(*query.course) != lower(meta.course_code) &&
        lower(*query.course) != lower(meta.course_name))
      continue;
    for (const auto& [rid, r] : os.resources) {
      if (r.status != content::ResourceStatus::Published) continue;
      if (query.resource_type && r.kind != *query.resource_type) continue;
      if (!query.topics.empty()) {
        bool hit = false;
        for (TopicId t : r.tags) {
          const core::Topic* topic = os.offering.find_topic(t);
          hit = hit || (topic && std::find(query.topics.begin(), query.topics.end(), topic->name) != query.topics.end());
        }
        if (!hit) continue;
      }
      if (query.min_rating) {
        const auto q = quality(rid);
        if (q.count == 0 || q.mean_stars < *query.min_rating) continue;
      }
      if (!recommend::matches_keywords(r, query.keywords)) continue;
      matched.push_back(&r);
    }
  }

  std::vector<std::string> unmapped;
  for (const content::Resource* r : matched) {
    const auto& src = offering(r->offering).offering;
    for (TopicId t : r->tags) {
      if (mapping.count(t)) continue;
      const core::Topic* topic = src.find_topic(t);
      std::string label = (topic ? topic->name : std::string("?")) + " (" + t.str() + ")";
      if (std::find(unmapped.begin(), unmapped.end(), label) == unmapped.end()) unmapped.push_back(label);
    }
  }
  if (!unmapped.empty())
    fail(ErrorCode::UnmappedTopic, "imported resources use topics with no mapping in the target offering", unmapped);

  json ids = json::array();
  for (const content::Resource* src : matched) {
    content::Resource copy = *src;
    copy.id = ResourceId{state_.next_resource++};
    copy.offering = target.offering.id;
    copy.author = caller;
    copy.status = content::ResourceStatus::Published;
    copy.created_at = copy.edited_at = e.at;
    copy.endorsed = false;
    copy.moderation_note.clear();
    std::vector<TopicId> tags;
    for (TopicId t : src->tags) {
      TopicId mapped = mapping.at(t);
      if (std::find(tags.begin(), tags.end(), mapped) == tags.end()) tags.push_back(mapped);
    }
    copy.tags = std::move(tags);
    target.resource_ratings[copy.id] = learner::ResourceRating::initial(copy.id, target.offering.config.elo);
    if (copy.content.mcq) target.distribution[copy.id].assign(copy.content.mcq->choices.size(), 0);
    resource_index_[copy.id] = target.offering.id;
    ids.push_back(copy.id);
    target.resources.emplace(copy.id, std::move(copy));
  }
  return {{"resource_ids", ids}};
}

std::vector<ResourceId> Engine::import_interchange(UserId caller, OfferingId target, std::string_view ndjson,
                                                   const std::map<std::string, std::string>& topic_renames,
                                                   Timestamp now) {
  json records = json::array();
  std::istringstream in{std::string(ndjson)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::parse_error&) {
      fail(ErrorCode::Validation, "interchange line " + std::to_string(lineno) + " is not valid JSON");
    }
  }
  json r = commit("interchange_imported", target, now,
                  {{"caller", caller}, {"records", records}, {"renames", topic_renames}});
  return r.at("resource_ids").get<std::vector<ResourceId>>();
}

json Engine::on_interchange_imported(const Event& e) {
  OfferingState& target = offering_mut(*e.offering);
  const auto caller = e.payload.at("caller").get<UserId>();
  require_instructor(target, caller);
  const auto renames = e.payload.at("renames").get<std::map<std::string, std::string>>();

  std::vector<content::Resource> staged;
  std::vector<std::string> unmapped;
  for (const auto& rec : e.payload.at("records")) {
    if (rec.value("schema", 0) != 1) fail(ErrorCode::Validation, "unsupported interchange schema version");
    content::Resource r;
    try {
      r.kind = content::parse_kind(rec.at("kind").get<std::string>());
      r.content = content::sanitize(rec.at("content").get<content::ResourceContent>());
    } catch (const json::exception& ex) {
      fail(ErrorCode::Validation, std::string("malformed interchange record: ") + ex.what());
    }
    content::validate_content(r.kind, r.content);
    for (const auto& name_json : rec.at("topics")) {
      std::string name = name_json.get<std::string>();
      if (auto it = renames.find(name); it != renames.end()) name = it->second;
      const core::Topic* t = target.offering.find_topic(name);
      if (!t) {
        if (std::find(unmapped.begin(), unmapped.end(), name) == unmapped.end()) unmapped.push_back(name);
        continue;
      }
      if (std::find(r.tags.begin(), r.tags.end(), t->id) == r.tags.end()) r.tags.push_back(t->id);
    }
    staged.push_back(std::move(r));
  }
  if (!unmapped.empty()) fail(ErrorCode::UnmappedTopic, "interchange records use unknown topics", unmapped);
  for (const auto& r : staged)
    if (r.tags.empty()) fail(ErrorCode::Validation, "interchange record has no topics");

  json ids = json::array();
  for (auto& r : staged) {
    r.id = ResourceId{state_.next_resource++};
    r.offering = target.offering.id;
    r.author = caller;
    r.status = content::ResourceStatus::Published;
    r.created_at = r.edited_at = e.at;
    target.resource_ratings[r.id] = learner::ResourceRating::initial(r.id, target.offering.config.elo);
    if (r.content.mcq) target.distribution[r.id].assign(r.content.mcq->choices.size(), 0);
    resource_index_[r.id] = target.offering.id;
    ids.push_back(r.id);
    target.resources.emplace(r.id, std::move(r));
  }
  return {{"resource_ids", ids}};
}

std::string Engine::export_interchange(UserId caller, OfferingId offering_id) const {
  const OfferingState& os = offering(offering_id);
  require_instructor(os, caller);
  std::string out;
  for (const auto& [rid, r] : os.resources) {
    if (r.status != content::ResourceStatus::Published) continue;
    json names = json::array();
    for (TopicId t : r.tags)
      if (const auto* topic = os.offering.find_topic(t)) names.push_back(topic->name);
    json rec = {{"schema", 1}, {"kind", content::to_string(r.kind)}, {"content", r.content}, {"topics", names}};
    out += rec.dump() + "\n";
  }
  return out;
}

}  // namespace peerlearn::service
