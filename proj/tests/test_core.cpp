#include "doctest.h"
#include "peerlearn/core/offering.hpp"
#include "peerlearn/error.hpp"
#include "world.hpp"

using namespace peerlearn;
using world::World;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("offering creation assigns consecutive ordinals") {
  std::vector<std::string> names{"Relational Models", "SQL", "Security"};
  auto o = core::create_offering(OfferingId{1}, {}, names, TopicId{10});
  REQUIRE(o.topics.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(o.topics[i].ordinal == i);
    CHECK(o.topics[i].name == names[i]);
    CHECK(o.topics[i].id == TopicId{10u + i});
  }
  CHECK(o.find_topic("SQL")->id == TopicId{11});
}

TEST_CASE("offering creation rejects duplicates and empty lists") {
  std::vector<std::string> dup{"SQL", "SQL"};
  try {
    core::create_offering(OfferingId{1}, {}, dup, TopicId{1});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Validation);
    REQUIRE(e.details().size() == 1);
    CHECK(e.details()[0] == "SQL");
  }
  std::vector<std::string> none;
  CHECK(code_of([&] { core::create_offering(OfferingId{1}, {}, none, TopicId{1}); }) == ErrorCode::Validation);
  std::vector<std::string> blank{"SQL", "  "};
  CHECK(code_of([&] { core::validate_topic_names(blank); }) == ErrorCode::Validation);
}

TEST_CASE("topic edits keep ordinals dense") {
  std::vector<std::string> names{"A", "B", "C"};
  auto o = core::create_offering(OfferingId{1}, {}, names, TopicId{1});
  core::add_topic(o, TopicId{4}, "D");
  CHECK(o.topics.back().ordinal == 3);
  std::vector<TopicId> order{TopicId{4}, TopicId{3}, TopicId{2}, TopicId{1}};
  core::reorder_topics(o, order);
  CHECK(o.topics[0].name == "D");
  core::remove_topic(o, TopicId{3});
  for (std::size_t i = 0; i < o.topics.size(); ++i) CHECK(o.topics[i].ordinal == static_cast<int>(i));
  core::rename_topic(o, TopicId{1}, "Alpha");
  CHECK(o.find_topic(TopicId{1})->name == "Alpha");
  CHECK(code_of([&] { core::rename_topic(o, TopicId{2}, "Alpha"); }) == ErrorCode::Validation);
}

TEST_CASE("topics csv round trip") {
  std::vector<std::string> names{"Relational Models", "SQL, advanced", "Security"};
  auto o = core::create_offering(OfferingId{1}, {}, names, TopicId{1});
  const auto csv = core::topics_to_csv(o.topics);
  CHECK(core::topics_from_csv(csv) == names);
}

TEST_CASE("lms role mapping") {
  auto role = [](std::string label) { return core::map_lms_role({label, OfferingId{1}, "u"}); };
  CHECK(role("Teaching Assistant") == core::Role::Instructor);
  CHECK(role("Instructor") == core::Role::Instructor);
  CHECK(role("Observer") == core::Role::Student);
  CHECK(role("Guest") == core::Role::Student);
  CHECK(role("student") == core::Role::Student);
  CHECK(code_of([&] { role("Janitor"); }) == ErrorCode::UnknownRole);
}

TEST_CASE("enrolment tickets") {
  World w;
  UserId u = w.eng.register_user("Sam", w.tick()).user;

  SUBCASE("access code enrols") {
    auto code = w.eng.issue_ticket(w.instructor, w.off, core::TicketKind::AccessCode, w.tick());
    auto en = w.eng.enrol(u, w.off, code, w.tick());
    CHECK(en.user == u);
    CHECK(en.role == core::Role::Student);
    CHECK(w.eng.offering(w.off).is_member(u));
  }
  SUBCASE("invitation is single use") {
    auto code = w.eng.issue_ticket(w.instructor, w.off, core::TicketKind::Invitation, w.tick(), std::nullopt,
                                   core::Role::Student, "sam@example.org");
    CHECK(w.eng.outbox().size() == 1);
    w.eng.enrol(u, w.off, code, w.tick());
    UserId v = w.eng.register_user("Val", w.tick()).user;
    CHECK(code_of([&] { w.eng.enrol(v, w.off, code, w.tick()); }) == ErrorCode::AlreadyUsed);
  }
  SUBCASE("code of another offering") {
    auto other = w.eng.create_offering(w.instructor, {"UQ", "X", "Other", "2024S1", 0}, {"T"}, w.tick());
    auto code = w.eng.issue_ticket(w.instructor, other, core::TicketKind::AccessCode, w.tick());
    CHECK(code_of([&] { w.eng.enrol(u, w.off, code, w.tick()); }) == ErrorCode::InvalidCode);
    CHECK(code_of([&] { w.eng.enrol(u, w.off, "nonsense", w.tick()); }) == ErrorCode::InvalidCode);
  }
  SUBCASE("expired code") {
    auto code = w.eng.issue_ticket(w.instructor, w.off, core::TicketKind::AccessCode, w.tick(), w.now + 5);
    w.now += 100;
    CHECK(code_of([&] { w.eng.enrol(u, w.off, code, w.tick()); }) == ErrorCode::InvalidCode);
  }
  SUBCASE("re-enrolment is idempotent") {
    auto code = w.eng.issue_ticket(w.instructor, w.off, core::TicketKind::AccessCode, w.tick());
    w.eng.enrol(u, w.off, code, w.tick());
    const auto seq = w.eng.state().seq;
    w.eng.enrol(u, w.off, code, w.tick());
    CHECK(w.eng.state().seq == seq);
    CHECK(w.eng.offering(w.off).members.size() == 2);
  }
  SUBCASE("students cannot issue tickets") {
    UserId s = w.student();
    CHECK(code_of([&] { w.eng.issue_ticket(s, w.off, core::TicketKind::AccessCode, w.tick()); }) ==
          ErrorCode::Forbidden);
  }
}

TEST_CASE("lms launch creates and reuses accounts") {
  World w;
  auto first = w.eng.lms_launch({"Teaching Assistant", w.off, "lms-42"}, "Tess", w.tick());
  CHECK(first.role == core::Role::Instructor);
  auto again = w.eng.lms_launch({"Teaching Assistant", w.off, "lms-42"}, "Tess", w.tick());
  CHECK(again.user == first.user);
  CHECK(code_of([&] { w.eng.lms_launch({"Janitor", w.off, "lms-43"}, "J", w.tick()); }) == ErrorCode::UnknownRole);
}

TEST_CASE("import resources") {
  World source;  // offering 1 holds the bank
  auto& eng = source.eng;
  UserId author = source.student();
  const TopicId sql = source.topics[1];
  for (int i = 0; i < 3; ++i) source.mcq(author, {sql});
  for (int i = 0; i < 2; ++i) source.note(author, {sql});

  auto target = eng.create_offering(source.instructor, {"UQ", "INFS2200", "Databases 2", "2024S2", 0},
                                    {"Structured Query Language"}, source.tick());
  const TopicId tsql = eng.offering(target).offering.topics[0].id;

  SUBCASE("mcq filter copies three") {
    service::ImportQuery q;
    q.offering_id = source.off;
    q.resource_type = content::ResourceKind::Mcq;
    auto ids = eng.import_resources(source.instructor, target, q, {{sql, tsql}}, source.tick());
    CHECK(ids.size() == 3);
    for (auto id : ids) {
      const auto& r = eng.resource(id);
      CHECK(r.offering == target);
      CHECK(r.tags == std::vector<TopicId>{tsql});
      CHECK(r.status == content::ResourceStatus::Published);
    }
  }
  SUBCASE("no match gives an empty list") {
    service::ImportQuery q;
    q.keywords = "nothing matches this";
    CHECK(eng.import_resources(source.instructor, target, q, {}, source.tick()).empty());
  }
  SUBCASE("unmapped topic is reported") {
    auto joins_off = eng.create_offering(source.instructor, {"UQ", "J", "Joins", "2024S1", 0}, {"Joins"}, source.tick());
    World::mcq_content();
    eng.add_member(source.instructor, joins_off, author, core::Role::Student, source.tick());
    service::ResourceDraft d{content::ResourceKind::Mcq, World::mcq_content(),
                             {eng.offering(joins_off).offering.topics[0].id}};
    eng.author_resource(author, joins_off, d, source.tick());
    service::ImportQuery q;
    q.offering_id = joins_off;
    try {
      eng.import_resources(source.instructor, target, q, {}, source.tick());
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnmappedTopic);
      REQUIRE(e.details().size() == 1);
      CHECK(e.details()[0].find("Joins") != std::string::npos);
    }
  }
}

TEST_CASE("offering config validation") {
  core::OfferingConfig c;
  c.fit.weights = {0.5, 0.5, 0.5};
  CHECK(code_of([&] { core::validate(c); }) == ErrorCode::Validation);
}
