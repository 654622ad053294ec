#pragma once

// Drives the HTTP-shaped Api with randomized but mostly valid call sequences.

#include <random>
#include <string>
#include <vector>

#include "peerlearn/service/api.hpp"

namespace driver {

using namespace peerlearn;
using service::Api;
using json = nlohmann::json;
using service::Request;
using service::Response;

struct Actor {
  std::uint64_t id = 0;
  std::string token;
};

struct Stats {
  int ok = 0;
  int rejected = 0;
  int bad_event_counts = 0;  // mutations whose event count was not exactly 1 (0 when rejected)
};

class ApiDriver {
 public:
  ApiDriver(Api& api, std::uint64_t seed) : api_(api), rng_(seed) {}

  Response call(const std::string& method, const std::string& path, const json& body, const std::string& token,
                std::map<std::string, std::string> query = {}) {
    Request r;
    r.method = method;
    r.path = path;
    r.query = std::move(query);
    r.body = body.is_null() ? "" : body.dump();
    r.bearer = token;
    return api_.handle(r);
  }

  // Mutating call that tracks the one-event rule.
  Response mutate(const std::string& method, const std::string& path, const json& body, const std::string& token,
                  std::map<std::string, std::string> query = {}) {
    const auto before = api_.engine().state().seq;
    Response r = call(method, path, body, token, std::move(query));
    const auto added = api_.engine().state().seq - before;
    if (r.status < 300) {
      ++stats.ok;
      if (added != 1) ++stats.bad_event_counts;
    } else {
      ++stats.rejected;
      if (added != 0) ++stats.bad_event_counts;
    }
    return r;
  }

  Actor register_user(const std::string& name) {
    auto r = mutate("POST", "/users", {{"display_name", name}}, "").as_json();
    return {r.at("user_id").get<std::uint64_t>(), r.at("token").get<std::string>()};
  }

  void setup(int n_students) {
    instructor = register_user("Instructor");
    auto o = mutate("POST", "/offerings",
                    {{"university_name", "UQ"},
                     {"course_code", "INFS1200"},
                     {"course_name", "Databases"},
                     {"semester", "2024S1"},
                     {"topics", {"Relational Models", "SQL", "Security", "Normalisation"}}},
                    instructor.token)
                 .as_json();
    offering = o.at("offering_id").get<std::uint64_t>();
    for (auto& t : call("GET", "/offerings/" + std::to_string(offering) + "/topics", nullptr, instructor.token).as_json())
      topics.push_back(t.at("id").get<std::uint64_t>());
    const auto code = mutate("POST", "/enrolment/tickets", {{"offering_id", offering}, {"kind", "access_code"}},
                             instructor.token)
                          .as_json()
                          .at("code")
                          .get<std::string>();
    for (int i = 0; i < n_students; ++i) {
      students.push_back(register_user("Student " + std::to_string(i)));
      mutate("POST", "/enrolment", {{"offering_id", offering}, {"code", code}}, students.back().token);
    }
  }

  void step() {
    std::uniform_int_distribution<int> pick(0, 99);
    const int p = pick(rng_);
    if (p < 12 || resources.empty()) author();
    else if (p < 55) attempt();
    else if (p < 65) rate();
    else if (p < 71) comment();
    else if (p < 75) flag();
    else if (p < 78) remove();
    else if (p < 81) moderate_pending();
    else if (p < 85) consent();
    else if (p < 87) endorse();
    else if (p < 89) edit();
    else if (p < 90) policy();
    else if (p < 91) add_topic();
    else invalid();
  }

  Actor instructor;
  std::vector<Actor> students;
  std::uint64_t offering = 0;
  std::vector<std::uint64_t> topics;
  std::vector<std::uint64_t> resources;
  Stats stats;

 private:
  const Actor& any_student() { return students[uniform(students.size())]; }
  std::uint64_t any_resource() { return resources[uniform(resources.size())]; }
  std::size_t uniform(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  json tags() {
    json t = json::array();
    t.push_back(topics[uniform(topics.size())]);
    if (uniform(3) == 0) {
      auto extra = topics[uniform(topics.size())];
      if (extra != t[0].get<std::uint64_t>()) t.push_back(extra);
    }
    return t;
  }

  void author() {
    const Actor& who = uniform(5) == 0 ? instructor : any_student();
    const int kind = static_cast<int>(uniform(6));
    json body = {{"offering_id", offering}, {"tags", tags()}, {"body", "Resource, \"quoted\" body " + std::to_string(resources.size())}};
    if (kind == 0) {
      body["kind"] = "note";
    } else if (kind == 1) {
      body["kind"] = "worked_example";
      body["worked_example"] = {{"steps", {"one", "two"}}, {"final_solution", "done"}};
    } else {
      const int n = 2 + static_cast<int>(uniform(4));
      json choices = json::array();
      for (int i = 0; i < n; ++i) choices.push_back("option " + std::to_string(i));
      body["kind"] = "mcq";
      body["mcq"] = {{"choices", choices}, {"correct_index", uniform(n)}, {"explanation", "see notes"}};
    }
    auto r = mutate("POST", "/resources", body, who.token);
    if (r.status == 201) resources.push_back(r.as_json().at("resource_id").get<std::uint64_t>());
  }

  void attempt() {
    json body = {{"resource_id", any_resource()}, {"chosen_index", uniform(4)}};
    auto r = mutate("POST", "/attempts", body, any_student().token);
    if (r.status == 400) {  // a note or a shorter MCQ
      body["chosen_index"] = uniform(2) ? json(nullptr) : json(0);
      mutate("POST", "/attempts", body, any_student().token);
    }
  }

  void rate() {
    mutate("POST", "/ratings", {{"resource_id", any_resource()}, {"stars", 1 + uniform(5)}}, any_student().token);
  }

  void comment() {
    mutate("POST", "/comments", {{"resource_id", any_resource()}, {"text", "Comment, with \"quotes\""}},
           any_student().token);
  }

  void flag() {
    mutate("POST", "/resources/" + std::to_string(any_resource()) + "/flag", {{"reason", "wrong"}},
           any_student().token);
  }

  void remove() {
    const Actor& who = uniform(2) ? instructor : any_student();
    mutate("DELETE", "/resources/" + std::to_string(any_resource()), nullptr, who.token);
  }

  void moderate_pending() {
    const std::uint64_t r = any_resource();
    mutate("POST", "/resources/" + std::to_string(r) + "/moderate",
           {{"decision", uniform(3) ? "approve" : "reject"}, {"note", "checked"}}, instructor.token);
  }

  void consent() { mutate("POST", "/consent", {{"consent", uniform(2) == 0}}, any_student().token); }

  void endorse() {
    mutate("POST", "/resources/" + std::to_string(any_resource()) + "/endorse", nullptr, instructor.token);
  }

  void edit() {
    mutate("PUT", "/resources/" + std::to_string(any_resource()),
           {{"kind", "note"}, {"body", "edited"}, {"tags", tags()}}, any_student().token);
  }

  void policy() {
    mutate("PUT", "/offerings/" + std::to_string(offering) + "/policy",
           {{"moderation_policy", uniform(2) ? "none" : "staff"}}, instructor.token);
  }

  void add_topic() {
    auto r = mutate("POST", "/offerings/" + std::to_string(offering) + "/topics",
                    {{"name", "Topic " + std::to_string(topics.size())}}, instructor.token);
    if (r.status == 201) topics.push_back(r.as_json().at("topic_id").get<std::uint64_t>());
  }

  void invalid() {
    switch (uniform(4)) {
      case 0: mutate("POST", "/attempts", {{"resource_id", 999999}, {"chosen_index", 0}}, any_student().token); break;
      case 1: mutate("POST", "/ratings", {{"resource_id", any_resource()}, {"stars", 9}}, any_student().token); break;
      case 2: mutate("POST", "/resources/" + std::to_string(any_resource()) + "/endorse", nullptr, any_student().token); break;
      default: mutate("POST", "/comments", {{"resource_id", any_resource()}, {"text", "x"}}, "not-a-token"); break;
    }
  }

  Api& api_;
  std::mt19937_64 rng_;
};

}  // namespace driver
