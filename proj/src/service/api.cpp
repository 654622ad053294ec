#include "peerlearn/service/api.hpp"

#include <chrono>
#include <fstream>
#include <optional>
#include <sstream>

#include "peerlearn/error.hpp"
#include "peerlearn/service/reports.hpp"

namespace peerlearn::service {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation:
    case ErrorCode::UnknownRole:
    case ErrorCode::InvalidCode:
    case ErrorCode::UnmappedTopic:
    case ErrorCode::Separation: return 400;
    case ErrorCode::Unauthorized: return 401;
    case ErrorCode::Forbidden:
    case ErrorCode::Eligibility: return 403;
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Lifecycle:
    case ErrorCode::Conflict:
    case ErrorCode::AlreadyUsed:
    case ErrorCode::Precondition: return 409;
    case ErrorCode::Io:
    case ErrorCode::Corrupt: return 500;
  }
  return 500;
}

void OutboxFileNotifier::send(const OutboundMessage& m) {
  std::ofstream out(path_, std::ios::app);
  out << json{{"kind", m.kind}, {"recipient", m.recipient}, {"subject", m.subject}, {"body", m.body}}.dump()
      << "\n";
}

struct Api::Context {
  const Request& req;
  std::map<std::string, std::string> params;
  json body;
  Timestamp now = 0;
  Engine& engine;
  std::optional<UserId> caller;
  std::vector<OutboundMessage> messages;

  UserId user() {
    if (!caller) fail(ErrorCode::Unauthorized, "missing or unknown bearer token");
    return *caller;
  }

  const std::string* query(const std::string& key) const {
    auto it = req.query.find(key);
    return it == req.query.end() ? nullptr : &it->second;
  }

  template <class T>
  T field(const char* key) const {
    if (!body.is_object() || !body.contains(key)) fail(ErrorCode::Validation, std::string("missing field '") + key + "'");
    return body.at(key).get<T>();
  }

  template <class T>
  T field_or(const char* key, T fallback) const {
    if (!body.is_object() || !body.contains(key) || body.at(key).is_null()) return fallback;
    return body.at(key).get<T>();
  }

  void collect() {
    const auto& out = engine.outbox();
    messages.insert(messages.end(), out.begin(), out.end());
  }
};

namespace {

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string_view::npos || text.size() > 19)
    fail(ErrorCode::Validation, "invalid " + std::string(what) + " '" + std::string(text) + "'");
  return std::stoull(std::string(text));
}

template <class IdT>
IdT param_id(const Api::Context& ctx, const std::string& key) {
  return IdT{parse_u64(ctx.params.at(key), key)};
}

template <class IdT>
IdT query_id(const Api::Context& ctx, const std::string& key) {
  const std::string* v = ctx.query(key);
  if (!v) fail(ErrorCode::Validation, "missing query parameter '" + key + "'");
  return IdT{parse_u64(*v, key)};
}

template <class IdT>
IdT body_id(const Api::Context& ctx, const char* key) {
  const json& v = ctx.body.is_object() && ctx.body.contains(key) ? ctx.body.at(key) : json();
  if (v.is_number_unsigned()) return IdT{v.get<std::uint64_t>()};
  if (v.is_string()) return IdT{parse_u64(v.get<std::string>(), key)};
  fail(ErrorCode::Validation, std::string("missing or invalid field '") + key + "'");
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = s.find(sep, start);
    const std::string_view part = s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    if (!part.empty()) out.emplace_back(part);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

bool truthy(const std::string* v) { return v && (*v == "true" || *v == "1"); }

Response ok(const json& j, int status = 200) { return {status, "application/json", j.dump()}; }
Response text(std::string body, std::string type) { return {200, std::move(type), std::move(body)}; }

json error_body(ErrorCode code, const std::string& message, const std::vector<std::string>& details) {
  return {{"code", std::string(to_string(code))}, {"message", message}, {"details", details}};
}

ResourceDraft draft_from(const json& body) {
  ResourceDraft d;
  if (!body.contains("kind")) fail(ErrorCode::Validation, "missing field 'kind'");
  d.kind = content::parse_kind(body.at("kind").get<std::string>());
  d.content = body.get<content::ResourceContent>();
  for (const auto& t : body.value("tags", json::array())) {
    if (t.is_number_unsigned()) d.tags.push_back(TopicId{t.get<std::uint64_t>()});
    else d.tags.push_back(TopicId{parse_u64(t.get<std::string>(), "tag")});
  }
  return d;
}

json knowledge_json(const learner::KnowledgeState& ks, const core::Offering& offering) {
  auto topics_json = [&](const std::vector<learner::TopicKnowledge>& topics) {
    json arr = json::array();
    for (const auto& tk : topics) {
      const auto* t = offering.find_topic(tk.topic);
      arr.push_back({{"topic", tk.topic},
                     {"topic_name", t ? t->name : std::string()},
                     {"rating", tk.rating},
                     {"band", std::string(learner::to_string(tk.band))},
                     {"cohort_mean", tk.cohort_mean}});
    }
    return arr;
  };
  json j = {{"mode", ks.mode == learner::KnowledgeMode::Current ? "current" : "over_time"},
            {"topics", topics_json(ks.current)}};
  if (ks.mode == learner::KnowledgeMode::OverTime) {
    json series = json::array();
    for (const auto& p : ks.series) series.push_back({{"at", p.at}, {"topics", topics_json(p.topics)}});
    j["series"] = series;
  }
  return j;
}

json resource_view(const Engine& engine, const content::Resource& r, UserId caller) {
  json j = r;
  const OfferingState& os = engine.offering(r.offering);
  const auto q = engine.quality(r.id);
  j["quality"] = q;
  j["difficulty"] = os.resource_ratings.at(r.id).rating.points();
  if (r.kind != content::ResourceKind::Mcq || !r.content.mcq) return j;

  bool reveal = r.author == caller || os.role_of(caller) == core::Role::Instructor;
  if (!reveal) {
    if (auto it = os.attempts_by_user.find(caller); it != os.attempts_by_user.end())
      for (std::size_t idx : it->second)
        if (os.attempts[idx].resource == r.id) reveal = true;
  }
  if (!reveal) {
    j["content"]["mcq"].erase("correct_index");
    j["content"]["mcq"].erase("explanation");
  } else {
    j["answer_distribution"] = engine.answer_distribution(r.id);
  }
  return j;
}

recommend::SearchQuery search_query(const Api::Context& ctx) {
  recommend::SearchQuery q;
  if (auto* v = ctx.query("kinds"))
    for (const auto& k : split(*v, ',')) q.kinds.insert(content::parse_kind(k));
  if (auto* v = ctx.query("topics"))
    for (const auto& t : split(*v, ',')) q.topics.insert(TopicId{parse_u64(t, "topic")});
  if (auto* v = ctx.query("status"))
    for (const auto& s : split(*v, ',')) q.status.insert(recommend::parse_status_filter(s));
  if (auto* v = ctx.query("keywords")) q.keywords = *v;
  if (auto* v = ctx.query("sort")) q.sort_key = recommend::parse_sort_key(*v);
  if (auto* v = ctx.query("limit")) q.limit = parse_u64(*v, "limit");
  return q;
}

json cards_json(const std::vector<recommend::ResourceCard>& cards) {
  json arr = json::array();
  for (const auto& c : cards) arr.push_back(c);
  return arr;
}

}  // namespace

Api::Api(Engine& engine, EventStore* store, Notifier* notifier, Clock clock, std::uint64_t snapshot_every)
    : engine_(engine),
      store_(store),
      notifier_(notifier),
      clock_(clock ? std::move(clock)
                   : Clock([] {
                       return static_cast<Timestamp>(std::chrono::duration_cast<std::chrono::seconds>(
                                                         std::chrono::system_clock::now().time_since_epoch())
                                                         .count());
                     })),
      snapshot_every_(snapshot_every) {
  register_routes();
}

void Api::route(std::string method, std::string pattern, bool mutating, Handler handler) {
  routes_.push_back({std::move(method), split(pattern, '/'), mutating, std::move(handler)});
}

void Api::after_command(Context& ctx) {
  ctx.collect();
  if (notifier_)
    for (const auto& m : ctx.messages) notifier_->send(m);
  if (store_ && snapshot_every_ > 0 && store_->events_since_snapshot() >= snapshot_every_) store_->write_snapshot(engine_);
}

Response Api::handle(const Request& req) {
  const auto segments = split(req.path, '/');
  const Route* match = nullptr;
  bool path_known = false;
  std::map<std::string, std::string> params;
  for (const Route& r : routes_) {
    if (r.pattern.size() != segments.size()) continue;
    std::map<std::string, std::string> p;
    bool hit = true;
    for (std::size_t i = 0; i < segments.size() && hit; ++i) {
      if (!r.pattern[i].empty() && r.pattern[i][0] == ':') p[r.pattern[i].substr(1)] = segments[i];
      else hit = r.pattern[i] == segments[i];
    }
    if (!hit) continue;
    path_known = true;
    if (r.method != req.method) continue;
    match = &r;
    params = std::move(p);
    break;
  }
  if (!match) {
    if (path_known)
      return {405, "application/json", error_body(ErrorCode::Validation, "method not allowed", {}).dump()};
    return {404, "application/json", error_body(ErrorCode::NotFound, "no such endpoint " + req.path, {}).dump()};
  }

  try {
    Context ctx{req, std::move(params), json::object(), clock_(), engine_, std::nullopt, {}};
    if (!req.body.empty() && req.method != "GET") {
      if (!req.path.ends_with(".csv") && !req.path.ends_with(".ndjson")) {
        try {
          ctx.body = json::parse(req.body);
        } catch (const json::parse_error& ex) {
          fail(ErrorCode::Validation, std::string("request body is not valid JSON: ") + ex.what());
        }
      }
    }
    if (match->mutating) {
      std::unique_lock lock(mutex_);
      if (!req.bearer.empty()) ctx.caller = engine_.user_by_token(req.bearer);
      Response res = match->handler(ctx);
      after_command(ctx);
      return res;
    }
    std::shared_lock lock(mutex_);
    if (!req.bearer.empty()) ctx.caller = engine_.user_by_token(req.bearer);
    return match->handler(ctx);
  } catch (const Error& e) {
    return {http_status(e.code()), "application/json", error_body(e.code(), e.what(), e.details()).dump()};
  } catch (const json::exception& e) {
    return {400, "application/json", error_body(ErrorCode::Validation, e.what(), {}).dump()};
  } catch (const std::out_of_range& e) {
    return {404, "application/json", error_body(ErrorCode::NotFound, e.what(), {}).dump()};
  }
}

void Api::register_routes() {
  // ---- identity and enrolment
  route("POST", "/users", true, [](Context& c) {
    const auto reg = c.engine.register_user(c.field<std::string>("display_name"), c.now,
                                            c.field_or<std::string>("external_ref", ""));
    return ok({{"user_id", reg.user}, {"token", reg.token}}, 201);
  });

  route("POST", "/lti/launch", true, [](Context& c) {
    core::LaunchRecord launch{c.field<std::string>("lms_role"), body_id<OfferingId>(c, "offering_id"),
                              c.field<std::string>("user_ref")};
    const auto res = c.engine.lms_launch(launch, c.field_or<std::string>("display_name", launch.user_ref), c.now);
    return ok({{"user_id", res.user}, {"token", res.token}, {"role", std::string(core::to_string(res.role))}});
  });

  route("POST", "/consent", true, [](Context& c) {
    c.engine.set_consent(c.user(), c.field<bool>("consent"), c.now);
    const auto& u = c.engine.user(c.user());
    return ok({{"research_consent", u.research_consent}, {"consent_changed", u.consent_changed}});
  });

  route("POST", "/enrolment/tickets", true, [](Context& c) {
    std::optional<Timestamp> expiry;
    if (c.body.contains("expiry") && !c.body.at("expiry").is_null()) expiry = c.body.at("expiry").get<Timestamp>();
    const std::string code = c.engine.issue_ticket(
        c.user(), body_id<OfferingId>(c, "offering_id"), core::parse_ticket_kind(c.field<std::string>("kind")), c.now,
        expiry, core::parse_role(c.field_or<std::string>("role", "student")), c.field_or<std::string>("email", ""));
    return ok({{"code", code}}, 201);
  });

  route("POST", "/enrolment", true, [](Context& c) {
    const auto e = c.engine.enrol(c.user(), body_id<OfferingId>(c, "offering_id"), c.field<std::string>("code"), c.now);
    return ok(e);
  });

  // ---- offerings and topics
  route("POST", "/offerings", true, [](Context& c) {
    core::OfferingMeta meta = c.body.get<core::OfferingMeta>();
    std::optional<core::OfferingConfig> config;
    if (c.body.contains("config")) {
      core::OfferingConfig cfg = c.engine.defaults();
      json merged = cfg;
      merged.merge_patch(c.body.at("config"));
      config = merged.get<core::OfferingConfig>();
    }
    const auto id = c.engine.create_offering(c.user(), meta, c.field<std::vector<std::string>>("topics"), c.now,
                                             core::parse_policy(c.field_or<std::string>("moderation_policy", "none")),
                                             config);
    return ok({{"offering_id", id}}, 201);
  });

  route("GET", "/offerings", false, [](Context& c) {
    json arr = json::array();
    for (OfferingId id : c.engine.offerings_of(c.user())) arr.push_back(c.engine.offering(id).offering);
    return ok(arr);
  });

  route("GET", "/offerings/:id", false, [](Context& c) {
    const auto& os = c.engine.offering(param_id<OfferingId>(c, "id"));
    if (!os.is_member(c.user())) fail(ErrorCode::Forbidden, "not a member of this offering");
    json j = os.offering;
    j["role"] = std::string(core::to_string(*os.role_of(c.user())));
    return ok(j);
  });

  route("GET", "/offerings/:id/topics", false, [](Context& c) {
    const auto& os = c.engine.offering(param_id<OfferingId>(c, "id"));
    if (!os.is_member(c.user())) fail(ErrorCode::Forbidden, "not a member of this offering");
    return ok(os.offering.topics);
  });

  route("POST", "/offerings/:id/topics", true, [](Context& c) {
    const auto t = c.engine.add_topic(c.user(), param_id<OfferingId>(c, "id"), c.field<std::string>("name"), c.now);
    return ok({{"topic_id", t}}, 201);
  });

  route("PUT", "/offerings/:id/topics", true, [](Context& c) {
    const OfferingId o = param_id<OfferingId>(c, "id");
    c.engine.set_topics(c.user(), o, c.field<std::vector<std::string>>("names"), c.now);
    return ok(c.engine.offering(o).offering.topics);
  });

  route("PATCH", "/offerings/:id/topics/:topic", true, [](Context& c) {
    c.engine.rename_topic(c.user(), param_id<OfferingId>(c, "id"), param_id<TopicId>(c, "topic"),
                          c.field<std::string>("name"), c.now);
    return ok(json::object());
  });

  route("DELETE", "/offerings/:id/topics/:topic", true, [](Context& c) {
    c.engine.remove_topic(c.user(), param_id<OfferingId>(c, "id"), param_id<TopicId>(c, "topic"), c.now);
    return ok(json::object());
  });

  route("GET", "/offerings/:id/topics.csv", false, [](Context& c) {
    const auto& os = c.engine.offering(param_id<OfferingId>(c, "id"));
    if (!os.is_member(c.user())) fail(ErrorCode::Forbidden, "not a member of this offering");
    return text(core::topics_to_csv(os.offering.topics), "text/csv; charset=utf-8");
  });

  route("PUT", "/offerings/:id/topics.csv", true, [](Context& c) {
    const OfferingId o = param_id<OfferingId>(c, "id");
    c.engine.set_topics(c.user(), o, core::topics_from_csv(c.req.body), c.now);
    return ok(c.engine.offering(o).offering.topics);
  });

  route("PUT", "/offerings/:id/policy", true, [](Context& c) {
    c.engine.set_policy(c.user(), param_id<OfferingId>(c, "id"),
                        core::parse_policy(c.field<std::string>("moderation_policy")), c.now);
    return ok(json::object());
  });

  route("POST", "/offerings/:id/members", true, [](Context& c) {
    c.engine.add_member(c.user(), param_id<OfferingId>(c, "id"), body_id<UserId>(c, "user_id"),
                        core::parse_role(c.field<std::string>("role")), c.now);
    return ok(json::object(), 201);
  });

  route("POST", "/offerings/:id/import", true, [](Context& c) {
    const ImportQuery q = c.body.value("query", json::object()).get<ImportQuery>();
    std::map<TopicId, TopicId> mapping;
    for (const auto& [src, dst] : c.body.value("topic_mapping", json::object()).items())
      mapping[TopicId{parse_u64(src, "topic")}] =
          dst.is_string() ? TopicId{parse_u64(dst.get<std::string>(), "topic")} : TopicId{dst.get<std::uint64_t>()};
    const auto ids = c.engine.import_resources(c.user(), param_id<OfferingId>(c, "id"), q, mapping, c.now);
    return ok({{"resource_ids", ids}}, 201);
  });

  route("GET", "/offerings/:id/resources.ndjson", false, [](Context& c) {
    return text(c.engine.export_interchange(c.user(), param_id<OfferingId>(c, "id")), "application/x-ndjson");
  });

  route("POST", "/offerings/:id/resources.ndjson", true, [](Context& c) {
    std::map<std::string, std::string> renames;
    if (auto* v = c.query("renames")) renames = json::parse(*v).get<std::map<std::string, std::string>>();
    const auto ids = c.engine.import_interchange(c.user(), param_id<OfferingId>(c, "id"), c.req.body, renames, c.now);
    return ok({{"resource_ids", ids}}, 201);
  });

  // ---- resources
  route("POST", "/resources", true, [](Context& c) {
    const OfferingId o = body_id<OfferingId>(c, "offering_id");
    const UserId u = c.user();
    const auto id = c.engine.author_resource(u, o, draft_from(c.body), c.now, c.field_or<bool>("draft", false));
    return ok({{"resource_id", id}, {"status", std::string(content::to_string(c.engine.resource(id).status))}}, 201);
  });

  route("GET", "/resources", false, [](Context& c) {
    const auto cards = c.engine.search(c.user(), query_id<OfferingId>(c, "offering_id"), search_query(c));
    return ok({{"cards", cards_json(cards)}});
  });

  route("GET", "/resources/:id", false, [](Context& c) {
    const UserId u = c.user();
    return ok(resource_view(c.engine, c.engine.view_resource(u, param_id<ResourceId>(c, "id")), u));
  });

  route("PUT", "/resources/:id", true, [](Context& c) {
    const ResourceId id = param_id<ResourceId>(c, "id");
    c.engine.edit_resource(c.user(), id, draft_from(c.body), c.now);
    return ok(c.engine.resource(id));
  });

  route("POST", "/resources/:id/submit", true, [](Context& c) {
    const ResourceId id = param_id<ResourceId>(c, "id");
    c.engine.submit_resource(c.user(), id, c.now);
    return ok({{"status", std::string(content::to_string(c.engine.resource(id).status))}});
  });

  route("POST", "/resources/:id/moderate", true, [](Context& c) {
    const auto status = c.engine.moderate(c.user(), param_id<ResourceId>(c, "id"),
                                          content::parse_verdict(c.field<std::string>("decision")),
                                          c.field_or<std::string>("note", ""), c.now);
    return ok({{"status", std::string(content::to_string(status))}});
  });

  route("POST", "/resources/:id/review", true, [](Context& c) {
    const auto t = c.engine.peer_review(c.user(), param_id<ResourceId>(c, "id"),
                                        content::parse_verdict(c.field<std::string>("verdict")),
                                        c.field_or<std::string>("rationale", ""), c.now);
    return ok({{"approvals", t.approvals},
               {"rejections", t.rejections},
               {"status", std::string(content::to_string(t.status))}});
  });

  route("POST", "/resources/:id/flag", true, [](Context& c) {
    const auto status =
        c.engine.flag_resource(c.user(), param_id<ResourceId>(c, "id"), c.field_or<std::string>("reason", ""), c.now);
    return ok({{"status", std::string(content::to_string(status))}});
  });

  route("POST", "/resources/:id/endorse", true, [](Context& c) {
    c.engine.endorse(c.user(), param_id<ResourceId>(c, "id"), c.now);
    return ok(json::object());
  });

  route("DELETE", "/resources/:id", true, [](Context& c) {
    c.engine.delete_resource(c.user(), param_id<ResourceId>(c, "id"), c.now);
    return ok(json::object());
  });

  route("GET", "/resources/:id/comments", false, [](Context& c) {
    return ok(c.engine.comments(c.user(), param_id<ResourceId>(c, "id")));
  });

  // ---- learning activity
  route("POST", "/attempts", true, [](Context& c) {
    const ResourceId r = body_id<ResourceId>(c, "resource_id");
    std::optional<int> chosen;
    if (c.body.contains("chosen_index") && !c.body.at("chosen_index").is_null())
      chosen = c.body.at("chosen_index").get<int>();
    const UserId u = c.user();
    const auto out = c.engine.attempt(u, r, chosen, c.now);
    json j = {{"attempt_id", out.attempt},
              {"correct", out.correct},
              {"correct_index", out.correct_index},
              {"explanation", out.explanation},
              {"answer_distribution", out.answer_distribution}};
    if (out.delta) j["delta"] = *out.delta;
    return ok(j, 201);
  });

  route("POST", "/ratings", true, [](Context& c) {
    const ResourceId r = body_id<ResourceId>(c, "resource_id");
    const UserId u = c.user();
    const auto q = c.engine.rate_resource(u, r, c.field<int>("stars"), c.now);
    return ok(q, 201);
  });

  route("POST", "/comments", true, [](Context& c) {
    const auto id = c.engine.comment(c.user(), body_id<ResourceId>(c, "resource_id"), c.field<std::string>("text"), c.now);
    return ok({{"comment_id", id}}, 201);
  });

  route("GET", "/learner/state", false, [](Context& c) {
    const OfferingId o = query_id<OfferingId>(c, "offering_id");
    const UserId u = c.user();
    const UserId student = c.query("student_id") ? query_id<UserId>(c, "student_id") : u;
    learner::KnowledgeMode mode = learner::KnowledgeMode::Current;
    if (auto* m = c.query("mode")) {
      if (*m == "over_time" || *m == "overtime") mode = learner::KnowledgeMode::OverTime;
      else if (*m != "current") fail(ErrorCode::Validation, "mode must be current or over_time");
    }
    return ok(knowledge_json(c.engine.knowledge_state(u, o, student, mode), c.engine.offering(o).offering));
  });

  route("GET", "/learner/state.csv", false, [](Context& c) {
    return text(export_report(c.engine, c.user(), query_id<OfferingId>(c, "offering_id"), Report::KnowledgeUnits,
                              false),
                "text/csv; charset=utf-8");
  });

  route("GET", "/learner/ledger.ndjson", false, [](Context& c) {
    return text(delta_ledger_ndjson(c.engine, c.user(), query_id<OfferingId>(c, "offering_id")),
                "application/x-ndjson");
  });

  route("GET", "/recommendations", false, [](Context& c) {
    std::size_t n = 10;
    if (auto* v = c.query("n")) n = parse_u64(*v, "n");
    return ok({{"cards", cards_json(c.engine.recommend(c.user(), query_id<OfferingId>(c, "offering_id"), n))}});
  });

  // ---- profile, grades, reports
  route("GET", "/profile", false, [](Context& c) {
    const OfferingId o = query_id<OfferingId>(c, "offering_id");
    const UserId u = c.user();
    const UserId student = c.query("student_id") ? query_id<UserId>(c, "student_id") : u;
    const auto e = c.engine.engagement(u, o, student);
    return ok({{"student_id", student},
               {"engagement", e.student},
               {"cohort_mean", e.cohort},
               {"badges", c.engine.badges(o, student)}});
  });

  route("GET", "/profile/badges.ndjson", false, [](Context& c) {
    const UserId u = c.user();
    const UserId student = c.query("student_id") ? query_id<UserId>(c, "student_id") : u;
    return text(badge_feed_ndjson(c.engine, u, query_id<OfferingId>(c, "offering_id"), student),
                "application/x-ndjson");
  });

  route("PUT", "/grades/rounds", true, [](Context& c) {
    c.engine.configure_rounds(c.user(), body_id<OfferingId>(c, "offering_id"),
                              c.field<std::vector<grading::RoundConfig>>("rounds"), c.now);
    return ok(json::object());
  });

  route("GET", "/grades/rounds/:k", false, [](Context& c) {
    const OfferingId o = query_id<OfferingId>(c, "offering_id");
    const UserId u = c.user();
    const UserId student = c.query("student_id") ? query_id<UserId>(c, "student_id") : u;
    const auto& os = c.engine.offering(o);
    if (student != u && os.role_of(u) != core::Role::Instructor) fail(ErrorCode::Forbidden, "instructor role required");
    if (!os.is_member(student)) fail(ErrorCode::Forbidden, "not a member of this offering");
    const int k = static_cast<int>(parse_u64(c.params.at("k"), "round"));
    return ok({{"round", k}, {"mark", c.engine.round_mark(o, student, k, c.now, truthy(c.query("force")))}});
  });

  route("GET", "/grades.csv", false, [](Context& c) {
    return text(grades_csv(c.engine, c.user(), query_id<OfferingId>(c, "offering_id")), "text/csv; charset=utf-8");
  });

  route("POST", "/grades/final", false, [](Context& c) {
    const OfferingId o = body_id<OfferingId>(c, "offering_id");
    const UserId student = body_id<UserId>(c, "student_id");
    std::vector<grading::GradeRubric> rubrics{grading::GradeRubric{}};
    if (c.body.contains("rubrics")) rubrics = c.body.at("rubrics").get<std::vector<grading::GradeRubric>>();
    for (const auto& row : c.engine.grade_rows(c.user(), o)) {
      if (row.student != student) continue;
      const double grade =
          grading::final_grade(c.field<double>("exam_pct"), c.field<double>("other_pct"), row.ripple_total, rubrics);
      return ok({{"student_id", student}, {"ripple_total", row.ripple_total}, {"final_grade", grade}});
    }
    fail(ErrorCode::NotFound, "no grade row for student " + student.str());
  });

  route("GET", "/reports/:name", false, [](Context& c) {
    std::string name = c.params.at("name");
    if (name.size() < 5 || name.substr(name.size() - 4) != ".csv") fail(ErrorCode::NotFound, "unknown report " + name);
    name.resize(name.size() - 4);
    return text(export_report(c.engine, c.user(), query_id<OfferingId>(c, "offering_id"), parse_report(name),
                              truthy(c.query("research_export"))),
                "text/csv; charset=utf-8");
  });

  route("GET", "/state/hash", false, [](Context& c) {
    c.user();
    std::ostringstream hex;
    hex << std::hex << c.engine.state_hash();
    return ok({{"hash", hex.str()}, {"seq", c.engine.state().seq}});
  });
}

}  // namespace peerlearn::service
