#include "peerlearn/service/reports.hpp"

#include "peerlearn/error.hpp"
#include "peerlearn/util/csv.hpp"

namespace peerlearn::service {

namespace {

void require_instructor(const OfferingState& os, UserId caller) {
  if (os.role_of(caller) != core::Role::Instructor) fail(ErrorCode::Forbidden, "instructor role required");
}

std::string num(double v) { return csv::format_number(v); }

}  // namespace

std::string_view to_string(Report report) {
  switch (report) {
    case Report::Students: return "students";
    case Report::Resources: return "resources";
    case Report::Comments: return "comments";
    case Report::KnowledgeUnits: return "knowledge_units";
    case Report::Attempts: return "attempts";
  }
  return "students";
}

Report parse_report(std::string_view name) {
  for (auto r : {Report::Students, Report::Resources, Report::Comments, Report::KnowledgeUnits, Report::Attempts})
    if (name == to_string(r)) return r;
  fail(ErrorCode::NotFound, "unknown report '" + std::string(name) + "'");
}

std::string_view report_header(Report report) {
  switch (report) {
    case Report::Students: return "student_id,display_name,role,enrolled_at,overall_rating,research_consent";
    case Report::Resources:
      return "resource_id,author_id,kind,status,topics,difficulty,mean_stars,ratings_count,attempts_count,"
             "comments_count,created_at";
    case Report::Comments: return "comment_id,resource_id,author_id,text,timestamp";
    case Report::KnowledgeUnits: return "student_id,topic,rating,band,cohort_mean";
    case Report::Attempts: return "attempt_id,student_id,resource_id,chosen_index,correct,timestamp";
  }
  return "";
}

bool research_eligible(const UserRecord& user) { return user.research_consent.value_or(false) && !user.consent_changed; }

std::string export_report(const Engine& engine, UserId caller, OfferingId offering, Report report,
                          bool research_export) {
  const OfferingState& os = engine.offering(offering);
  require_instructor(os, caller);
  auto allowed = [&](UserId u) { return !research_export || research_eligible(engine.user(u)); };

  std::string out(report_header(report));
  out += '\n';
  auto row = [&](const std::vector<std::string>& fields) { out += csv::join_row(fields) + "\n"; };

  switch (report) {
    case Report::Students:
      for (UserId s : os.students()) {
        if (!allowed(s)) continue;
        const UserRecord& u = engine.user(s);
        row({s.str(), u.display_name, "student", std::to_string(os.members.at(s).enrolled_at),
             num(engine.overall_rating(offering, s)),
             u.research_consent ? (*u.research_consent ? "true" : "false") : ""});
      }
      break;
    case Report::Resources:
      for (const auto& [id, r] : os.resources) {
        if (!allowed(r.author)) continue;
        std::string topics;
        for (TopicId t : r.tags) {
          if (!topics.empty()) topics += ';';
          const auto* topic = os.offering.find_topic(t);
          topics += topic ? topic->name : t.str();
        }
        const auto q = engine.quality(id);
        auto ac = os.attempt_count.find(id);
        auto cc = os.comment_count.find(id);
        row({id.str(), r.author.str(), std::string(content::to_string(r.kind)), std::string(content::to_string(r.status)),
             topics, num(os.resource_ratings.at(id).rating.points()), q.count ? num(q.mean_stars) : "",
             std::to_string(q.count), std::to_string(ac == os.attempt_count.end() ? 0 : ac->second),
             std::to_string(cc == os.comment_count.end() ? 0 : cc->second), std::to_string(r.created_at)});
      }
      break;
    case Report::Comments:
      for (const auto& c : os.comments) {
        if (!allowed(c.author)) continue;
        row({c.id.str(), c.resource.str(), c.author.str(), c.text, std::to_string(c.at)});
      }
      break;
    case Report::KnowledgeUnits:
      for (UserId s : os.students()) {
        if (!allowed(s)) continue;
        const auto ks = engine.knowledge_state(caller, offering, s, learner::KnowledgeMode::Current);
        for (const auto& tk : ks.current) {
          const auto* topic = os.offering.find_topic(tk.topic);
          row({s.str(), topic ? topic->name : tk.topic.str(), num(tk.rating), std::string(learner::to_string(tk.band)),
               num(tk.cohort_mean)});
        }
      }
      break;
    case Report::Attempts:
      for (const auto& a : os.attempts) {
        if (!allowed(a.student)) continue;
        row({a.id.str(), a.student.str(), a.resource.str(), a.chosen_index ? std::to_string(*a.chosen_index) : "",
             a.correct ? (*a.correct ? "true" : "false") : "", std::to_string(a.at)});
      }
      break;
  }
  return out;
}

std::string grades_csv(const Engine& engine, UserId caller, OfferingId offering) {
  const auto rows = engine.grade_rows(caller, offering);
  const std::size_t rounds = engine.offering(offering).rounds.size();
  std::vector<std::string> header{"student_id"};
  for (std::size_t i = 1; i <= rounds; ++i) header.push_back("round" + std::to_string(i));
  header.insert(header.end(), {"overall_rating", "rating_mark", "ripple_total"});
  std::string out = csv::join_row(header) + "\n";
  for (const auto& r : rows) {
    std::vector<std::string> fields{r.student.str()};
    for (int m : r.round_marks) fields.push_back(std::to_string(m));
    fields.insert(fields.end(), {num(r.overall_rating), num(r.rating_mark), num(r.ripple_total)});
    out += csv::join_row(fields) + "\n";
  }
  return out;
}

std::string delta_ledger_ndjson(const Engine& engine, UserId caller, OfferingId offering) {
  const OfferingState& os = engine.offering(offering);
  require_instructor(os, caller);
  std::string out;
  for (const auto& a : os.attempts) {
    auto it = os.deltas.find(a.id);
    if (it == os.deltas.end()) continue;
    const auto& d = it->second;
    json per_topic = json::object();
    for (const auto& [t, v] : d.per_topic_student_delta) per_topic[t.str()] = v.points();
    json rec = {{"attempt_id", d.attempt},       {"student_id", d.student},     {"resource_id", d.resource},
                {"per_topic_student_delta", per_topic}, {"resource_delta", d.resource_delta.points()},
                {"applied", d.applied},          {"timestamp", a.at}};
    out += rec.dump() + "\n";
  }
  return out;
}

std::string badge_feed_ndjson(const Engine& engine, UserId caller, OfferingId offering, UserId student) {
  const OfferingState& os = engine.offering(offering);
  if (caller != student) require_instructor(os, caller);
  std::string out;
  for (const auto& b : engine.badges(offering, student)) {
    json rec = b;
    rec["student_id"] = student;
    rec["event"] = "badge_awarded";
    out += rec.dump() + "\n";
  }
  return out;
}

}  // namespace peerlearn::service
