#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "api_driver.hpp"
#include "doctest.h"
#include "httplib.h"
#include "oracles.hpp"
#include "peerlearn/error.hpp"
#include "peerlearn/service/event_store.hpp"
#include "peerlearn/service/reports.hpp"
#include "peerlearn/service/server.hpp"
#include "world.hpp"

using namespace peerlearn;
using namespace peerlearn::service;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> n{0};
    path = fs::temp_directory_path() / ("peerlearn-test-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Api::Clock ticking(Timestamp start = 1'700'000'000) {
  auto t = std::make_shared<Timestamp>(start);
  return [t] { return (*t)++; };
}

std::string token_source() {
  static std::atomic<int> n{0};
  return "t" + std::to_string(n++);
}

std::uint64_t replayed_hash(const std::vector<Event>& events) {
  Engine fresh;
  for (const auto& e : events) fresh.replay(e);
  return fresh.state_hash();
}

}  // namespace

TEST_CASE("replay equals incremental application") {
  world::Recorder full;
  Engine live({}, &full, token_source);
  auto u = live.register_user("I", 1).user;
  auto off = live.create_offering(u, {"U", "C", "N", "S", 0}, {"SQL", "Security"}, 2);
  auto s = live.register_user("S", 3).user;
  live.add_member(u, off, s, core::Role::Student, 4);
  auto topics = live.offering(off).offering.topic_ids();
  service::ResourceDraft d{content::ResourceKind::Mcq, world::World::mcq_content(), {topics[0]}};
  auto r = live.author_resource(u, off, d, 5);
  live.attempt(s, r, 0, 6);
  live.rate_resource(s, r, 5, 7);
  live.delete_resource(u, r, 8);

  CHECK(full.events.size() == live.state().seq);
  for (std::size_t i = 0; i < full.events.size(); ++i) CHECK(full.events[i].seq == i + 1);
  Engine replica;
  for (const auto& e : full.events) replica.replay(e);
  CHECK(replica.state_hash() == live.state_hash());
  CHECK(replica.snapshot() == live.snapshot());

  // Events round trip through JSON unchanged.
  for (const auto& e : full.events) {
    json j = e;
    Event back = j.get<Event>();
    CHECK(json(back) == j);
  }
}

TEST_CASE("replay rejects gaps and unknown kinds") {
  world::Recorder rec;
  Engine live({}, &rec, token_source);
  live.register_user("A", 1);
  live.register_user("B", 2);
  Engine fresh;
  CHECK_THROWS_AS(fresh.replay(rec.events[1]), Error);
  Event bogus = rec.events[0];
  bogus.kind = "mystery";
  try {
    fresh.replay(bogus);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Corrupt);
  }
}

TEST_CASE("event store: restart, snapshot plus tail, torn tail") {
  TempDir dir;
  std::uint64_t hash_at_snapshot = 0, final_hash = 0;
  std::vector<Event> all;
  {
    EventStore store(dir.path);
    Engine engine({}, nullptr, token_source);
    store.load(engine);
    engine.set_sink(&store);
    Api api(engine, &store, nullptr, ticking(), 1'000'000);
    driver::ApiDriver drv(api, 7);
    drv.setup(8);
    for (int i = 0; i < 200; ++i) drv.step();
    store.write_snapshot(engine);
    hash_at_snapshot = engine.state_hash();
    for (int i = 0; i < 150; ++i) drv.step();
    final_hash = engine.state_hash();
    all = store.read_events();
    CHECK(all.size() == engine.state().seq);
    CHECK(drv.stats.bad_event_counts == 0);
  }
  CHECK(hash_at_snapshot != final_hash);
  CHECK(replayed_hash(all) == final_hash);

  {
    EventStore store(dir.path);
    Engine engine;
    const auto replayed = store.load(engine);
    CHECK(engine.state_hash() == final_hash);
    CHECK(replayed < all.size());
  }

  // Crash mid-write: a partial final line is discarded.
  {
    std::ofstream out(dir.path / "events.ndjson", std::ios::app);
    out << R"({"seq":)" << all.size() + 1 << R"(,"kind":"user_regis)";
  }
  {
    EventStore store(dir.path);
    Engine engine;
    store.load(engine);
    CHECK(engine.state_hash() == final_hash);
    // The store keeps working after truncation.
    engine.set_sink(&store);
    engine.register_user("Late", 2'000'000'000);
  }
  {
    EventStore store(dir.path);
    Engine engine;
    store.load(engine);
    CHECK(engine.state().seq == all.size() + 1);
  }

  // Damage in the middle is reported, not skipped.
  {
    fs::remove(dir.path / "snapshot.json");
    std::ifstream in(dir.path / "events.ndjson");
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    in.close();
    lines[3] = "{not json";
    std::ofstream out(dir.path / "events.ndjson", std::ios::trunc);
    for (auto& l : lines) out << l << '\n';
  }
  {
    EventStore store(dir.path);
    Engine engine;
    try {
      store.load(engine);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Corrupt);
    }
  }
}

TEST_CASE("snapshot plus tail equals full replay across many cut points") {
  world::Recorder rec;
  Engine live({}, &rec, token_source);
  Api api(live, nullptr, nullptr, ticking());
  driver::ApiDriver drv(api, 99);
  drv.setup(6);
  for (int i = 0; i < 300; ++i) drv.step();
  const auto target = live.state_hash();
  for (std::size_t cut : {std::size_t{1}, rec.events.size() / 3, rec.events.size() / 2, rec.events.size() - 1}) {
    Engine prefix;
    for (std::size_t i = 0; i < cut; ++i) prefix.replay(rec.events[i]);
    Engine resumed;
    resumed.restore(prefix.snapshot());
    CHECK(resumed.state_hash() == prefix.state_hash());
    for (std::size_t i = cut; i < rec.events.size(); ++i) resumed.replay(rec.events[i]);
    CHECK(resumed.state_hash() == target);
  }
}

TEST_CASE("api status codes and envelopes") {
  Engine engine({}, nullptr, token_source);
  MemoryNotifier notes;
  Api api(engine, nullptr, &notes, ticking());
  driver::ApiDriver drv(api, 1);
  drv.setup(2);
  const auto& inst = drv.instructor;
  const auto& s = drv.students[0];
  const std::string off = std::to_string(drv.offering);

  auto draft = drv.call("POST", "/resources",
                        {{"offering_id", drv.offering},
                         {"kind", "mcq"},
                         {"tags", {drv.topics[0]}},
                         {"body", "Q"},
                         {"draft", true},
                         {"mcq", {{"choices", {"a", "b"}}, {"correct_index", 1}, {"explanation", "b"}}}},
                        inst.token);
  REQUIRE(draft.status == 201);
  const auto rid = draft.as_json().at("resource_id").get<std::uint64_t>();
  CHECK(draft.as_json().at("status") == "draft");

  auto r = drv.call("POST", "/attempts", {{"resource_id", rid}, {"chosen_index", 0}}, s.token);
  CHECK(r.status == 409);
  CHECK(r.as_json().at("code") == "lifecycle");
  CHECK(r.as_json().contains("message"));
  CHECK(r.as_json().at("details").is_array());

  CHECK(drv.call("GET", "/nowhere", nullptr, s.token).status == 404);
  CHECK(drv.call("DELETE", "/users", nullptr, s.token).status == 405);
  CHECK(drv.call("POST", "/ratings", {{"resource_id", rid}, {"stars", 3}}, "").status == 401);
  CHECK(drv.call("POST", "/ratings", {{"resource_id", rid}, {"stars", 3}}, "bogus").status == 401);
  CHECK(drv.call("GET", "/reports/attempts.csv", nullptr, s.token, {{"offering_id", off}}).status == 403);
  CHECK(drv.call("GET", "/reports/nothing.csv", nullptr, inst.token, {{"offering_id", off}}).status == 404);
  CHECK(drv.call("GET", "/learner/state", nullptr, s.token, {{"offering_id", "abc"}}).status == 400);

  Request bad;
  bad.method = "POST";
  bad.path = "/comments";
  bad.body = "{broken";
  bad.bearer = s.token;
  auto badr = api.handle(bad);
  CHECK(badr.status == 400);
  CHECK(badr.as_json().at("code") == "validation");

  auto dup = drv.call("POST", "/offerings", {{"course_code", "X"}, {"topics", {"SQL", "SQL"}}}, inst.token);
  CHECK(dup.status == 400);
  CHECK(dup.as_json().at("details") == json::array({"SQL"}));

  auto unknown_role = drv.call("POST", "/lti/launch",
                               {{"lms_role", "Janitor"}, {"offering_id", drv.offering}, {"user_ref", "x"}}, "");
  CHECK(unknown_role.status == 400);
  CHECK(unknown_role.as_json().at("code") == "unknown_role");
}

TEST_CASE("api learner state, reveal rules and reports") {
  Engine engine({}, nullptr, token_source);
  Api api(engine, nullptr, nullptr, ticking());
  driver::ApiDriver drv(api, 2);
  drv.setup(3);
  const auto& inst = drv.instructor;
  const auto& s = drv.students[0];
  const std::string off = std::to_string(drv.offering);

  auto created = drv.call("POST", "/resources",
                          {{"offering_id", drv.offering},
                           {"kind", "mcq"},
                           {"tags", {drv.topics[1]}},
                           {"body", "Which join?"},
                           {"mcq", {{"choices", {"a", "b", "c", "d"}}, {"correct_index", 2}, {"explanation", "c"}}}},
                          inst.token);
  const auto rid = created.as_json().at("resource_id").get<std::uint64_t>();
  const std::string path = "/resources/" + std::to_string(rid);

  auto before = drv.call("GET", path, nullptr, s.token).as_json();
  CHECK_FALSE(before.at("content").at("mcq").contains("correct_index"));
  CHECK_FALSE(before.at("content").at("mcq").contains("explanation"));
  CHECK(drv.call("POST", "/ratings", {{"resource_id", rid}, {"stars", 4}}, s.token).status == 409);

  auto att = drv.call("POST", "/attempts", {{"resource_id", rid}, {"chosen_index", 2}}, s.token);
  REQUIRE(att.status == 201);
  auto aj = att.as_json();
  CHECK(aj.at("correct") == true);
  CHECK(aj.at("correct_index") == 2);
  CHECK(aj.at("answer_distribution") == json::array({0, 0, 1, 0}));
  CHECK(aj.contains("delta"));

  auto after = drv.call("GET", path, nullptr, s.token).as_json();
  CHECK(after.at("content").at("mcq").at("correct_index") == 2);

  auto ks = drv.call("GET", "/learner/state", nullptr, s.token, {{"offering_id", off}, {"mode", "current"}}).as_json();
  REQUIRE(ks.at("topics").size() == 4);
  for (const auto& t : ks.at("topics")) {
    CHECK(t.contains("rating"));
    CHECK(t.contains("band"));
    CHECK(t.contains("cohort_mean"));
    if (t.at("topic") == drv.topics[1]) {
      CHECK(t.at("rating").get<double>() == doctest::Approx(1020.0));
      CHECK(t.at("band") == "yellow");
    } else {
      CHECK(t.at("rating").get<double>() == 1000.0);
    }
  }
  auto series = drv.call("GET", "/learner/state", nullptr, s.token, {{"offering_id", off}, {"mode", "over_time"}});
  CHECK(series.status == 200);
  CHECK(series.as_json().at("series").size() == 2);

  CHECK(drv.call("GET", "/learner/state", nullptr, drv.students[1].token,
                 {{"offering_id", off}, {"student_id", std::to_string(s.id)}})
            .status == 403);

  auto rec = drv.call("GET", "/recommendations", nullptr, drv.students[1].token, {{"offering_id", off}, {"n", "5"}});
  CHECK(rec.as_json().at("cards").size() == 1);

  const std::pair<const char*, const char*> headers[] = {
      {"students", "student_id,display_name,role,enrolled_at,overall_rating,research_consent"},
      {"resources",
       "resource_id,author_id,kind,status,topics,difficulty,mean_stars,ratings_count,attempts_count,comments_count,"
       "created_at"},
      {"comments", "comment_id,resource_id,author_id,text,timestamp"},
      {"knowledge_units", "student_id,topic,rating,band,cohort_mean"},
      {"attempts", "attempt_id,student_id,resource_id,chosen_index,correct,timestamp"}};
  for (auto [name, header] : headers) {
    auto rep = drv.call("GET", std::string("/reports/") + name + ".csv", nullptr, inst.token, {{"offering_id", off}});
    REQUIRE(rep.status == 200);
    CHECK(rep.content_type.find("text/csv") == 0);
    CHECK(rep.body.substr(0, rep.body.find('\n')) == header);
  }
  auto attempts = oracle::parse_csv(
      drv.call("GET", "/reports/attempts.csv", nullptr, inst.token, {{"offering_id", off}}).body);
  REQUIRE(attempts.size() == 2);
  CHECK(attempts[1][1] == std::to_string(s.id));
  CHECK(attempts[1][4] == "true");

  auto grades = drv.call("GET", "/grades.csv", nullptr, inst.token, {{"offering_id", off}});
  CHECK(grades.body.substr(0, grades.body.find('\n')) == "student_id,overall_rating,rating_mark,ripple_total");

  auto hash = drv.call("GET", "/state/hash", nullptr, s.token).as_json();
  CHECK(hash.at("seq") == engine.state().seq);
}

TEST_CASE("research export drops users without steady consent") {
  Engine engine({}, nullptr, token_source);
  Api api(engine, nullptr, nullptr, ticking());
  driver::ApiDriver drv(api, 3);
  drv.setup(4);
  const auto& inst = drv.instructor;
  const std::string off = std::to_string(drv.offering);
  // 0: consents; 1: never answers; 2: declines; 3: off then on again.
  drv.call("POST", "/consent", {{"consent", true}}, drv.students[0].token);
  drv.call("POST", "/consent", {{"consent", false}}, drv.students[2].token);
  drv.call("POST", "/consent", {{"consent", false}}, drv.students[3].token);
  drv.call("POST", "/consent", {{"consent", true}}, drv.students[3].token);
  CHECK(engine.user(UserId{drv.students[3].id}).consent_changed);

  auto created = drv.call("POST", "/resources",
                          {{"offering_id", drv.offering},
                           {"kind", "mcq"},
                           {"tags", {drv.topics[0]}},
                           {"body", "Q"},
                           {"mcq", {{"choices", {"a", "b"}}, {"correct_index", 0}, {"explanation", "a"}}}},
                          drv.students[3].token);
  const auto rid = created.as_json().at("resource_id").get<std::uint64_t>();
  for (auto& s : drv.students) {
    if (s.id == drv.students[3].id) continue;
    drv.call("POST", "/attempts", {{"resource_id", rid}, {"chosen_index", 0}}, s.token);
    drv.call("POST", "/comments", {{"resource_id", rid}, {"text", "hi"}}, s.token);
  }

  auto ids_in = [&](const std::string& report, bool research) {
    std::map<std::string, std::string> q{{"offering_id", off}};
    if (research) q["research_export"] = "true";
    auto rows = oracle::parse_csv(drv.call("GET", "/reports/" + report + ".csv", nullptr, inst.token, q).body);
    std::set<std::string> ids;
    for (std::size_t c = 0; c < rows[0].size(); ++c)
      if (rows[0][c] == "student_id" || rows[0][c] == "author_id")
        for (std::size_t r = 1; r < rows.size(); ++r) ids.insert(rows[r][c]);
    return ids;
  };
  const std::string yes = std::to_string(drv.students[0].id);
  CHECK(ids_in("attempts", true) == std::set<std::string>{yes});
  CHECK(ids_in("comments", true) == std::set<std::string>{yes});
  CHECK(ids_in("students", true) == std::set<std::string>{yes});
  CHECK(ids_in("knowledge_units", true) == std::set<std::string>{yes});
  CHECK(ids_in("resources", true).empty());
  CHECK(ids_in("attempts", false).size() == 3);
  CHECK(ids_in("resources", false).size() == 1);
}

TEST_CASE("every mutation commits exactly one event and notifications go out") {
  Engine engine({}, nullptr, token_source);
  MemoryNotifier notes;
  Api api(engine, nullptr, &notes, ticking());
  driver::ApiDriver drv(api, 11);
  drv.setup(10);
  for (int i = 0; i < 400; ++i) drv.step();
  CHECK(drv.stats.bad_event_counts == 0);
  CHECK(drv.stats.ok > 200);
  CHECK(drv.stats.rejected > 0);

  auto inv = drv.call("POST", "/enrolment/tickets",
                      {{"offering_id", drv.offering}, {"kind", "invitation"}, {"email", "new@example.org"}},
                      drv.instructor.token);
  REQUIRE(inv.status == 201);
  REQUIRE_FALSE(notes.sent.empty());
  CHECK(notes.sent.back().recipient == "new@example.org");
}

TEST_CASE("concurrent attempt storm stays consistent") {
  world::Recorder rec;
  Engine engine({}, &rec, token_source);
  Api api(engine, nullptr, nullptr, ticking());
  driver::ApiDriver drv(api, 5);
  drv.setup(200);
  std::vector<std::uint64_t> bank;
  for (int i = 0; i < 20; ++i) {
    auto r = drv.call("POST", "/resources",
                      {{"offering_id", drv.offering},
                       {"kind", "mcq"},
                       {"tags", {drv.topics[i % 4]}},
                       {"body", "Q"},
                       {"mcq", {{"choices", {"a", "b", "c"}}, {"correct_index", 1}, {"explanation", "b"}}}},
                      drv.instructor.token);
    bank.push_back(r.as_json().at("resource_id").get<std::uint64_t>());
  }
  const auto start = engine.state().seq;
  std::atomic<int> failures{0};
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < drv.students.size(); ++i) {
    threads.emplace_back([&, i] {
      for (int k = 0; k < 5; ++k) {
        Request req{"POST", "/attempts", {}, json{{"resource_id", bank[(i + k) % bank.size()]}, {"chosen_index", k % 3}}.dump(),
                    drv.students[i].token};
        if (api.handle(req).status != 201) ++failures;
        Request read{"GET", "/recommendations", {{"offering_id", std::to_string(drv.offering)}, {"n", "3"}}, "",
                     drv.students[i].token};
        if (api.handle(read).status != 200) ++failures;
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(failures == 0);
  CHECK(engine.state().seq == start + 1000);
  CHECK(replayed_hash(rec.events) == engine.state_hash());
}

TEST_CASE("config parsing") {
  auto c = parse_config(json{{"port", 9001}, {"storage_path", "/tmp/x"}, {"offering_defaults", {{"elo", {{"k_base", 32}}}}}});
  CHECK(c.port == 9001);
  CHECK(c.offering_defaults.elo.k_base == 32);
  CHECK(c.offering_defaults.elo.initial == 1000);
  try {
    parse_config(json{{"prot", 1}});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Validation);
    CHECK(e.details() == std::vector<std::string>{"prot"});
  }
  CHECK_THROWS_AS(parse_config(json{{"port", 70000}}), Error);
  CHECK_THROWS_AS(parse_config(json{{"offering_defaults", {{"fit", {{"weights", {{"gap", 0.9}}}}}}}}), Error);

  ::setenv("PEERLEARN_PORT", "9123", 1);
  ::setenv("PEERLEARN_STORAGE", "/tmp/elsewhere", 1);
  apply_env_overrides(c);
  CHECK(c.port == 9123);
  CHECK(c.storage_path == "/tmp/elsewhere");
  ::unsetenv("PEERLEARN_PORT");
  ::unsetenv("PEERLEARN_STORAGE");
}

TEST_CASE("server over http survives a restart") {
  TempDir dir;
  ServiceConfig cfg;
  cfg.storage_path = dir.path.string();
  cfg.port = 0;
  cfg.snapshot_every = 25;
  std::string hash;
  std::string token;
  {
    Server server(cfg);
    server.start();
    REQUIRE(server.port() > 0);
    httplib::Client cli("127.0.0.1", server.port());
    auto u = cli.Post("/users", R"({"display_name":"Ada"})", "application/json");
    REQUIRE(u);
    CHECK(u->status == 201);
    token = json::parse(u->body).at("token").get<std::string>();
    httplib::Headers auth{{"Authorization", "Bearer " + token}};
    auto o = cli.Post("/offerings", auth, R"({"course_code":"C1","topics":["SQL","Security"]})", "application/json");
    REQUIRE(o);
    CHECK(o->status == 201);
    const auto off = json::parse(o->body).at("offering_id").get<std::uint64_t>();
    for (int i = 0; i < 40; ++i) {
      auto r = cli.Post("/offerings/" + std::to_string(off) + "/topics", auth,
                        json{{"name", "T" + std::to_string(i)}}.dump(), "application/json");
      REQUIRE(r);
      CHECK(r->status == 201);
    }
    auto csv = cli.Get("/offerings/" + std::to_string(off) + "/topics.csv", auth);
    REQUIRE(csv);
    CHECK(csv->body.rfind("ordinal,name", 0) == 0);
    auto missing = cli.Get("/resources/12345", auth);
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(json::parse(missing->body).at("code") == "not_found");
    auto h = cli.Get("/state/hash", auth);
    hash = json::parse(h->body).at("hash").get<std::string>();
    server.stop();
  }
  CHECK(fs::exists(dir.path / "snapshot.json"));
  {
    Server server(cfg);
    server.start();
    httplib::Client cli("127.0.0.1", server.port());
    auto h = cli.Get("/state/hash", httplib::Headers{{"Authorization", "Bearer " + token}});
    REQUIRE(h);
    CHECK(json::parse(h->body).at("hash") == hash);
    CHECK(server.replayed() < 42);

    ServiceConfig clash = cfg;
    clash.port = server.port();
    clash.storage_path = (dir.path / "other").string();
    Server second(clash);
    try {
      second.start();
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Io);
    }
    server.stop();
  }
}
