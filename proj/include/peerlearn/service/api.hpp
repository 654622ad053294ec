#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "peerlearn/error.hpp"
#include "peerlearn/service/engine.hpp"
#include "peerlearn/service/event_store.hpp"

namespace peerlearn::service {

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::string bearer;  // token without the "Bearer " prefix
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  json as_json() const { return json::parse(body); }
};

int http_status(ErrorCode code);

class Notifier {
 public:
  virtual ~Notifier() = default;
  virtual void send(const OutboundMessage& message) = 0;
};

// Appends one JSON line per message.
class OutboxFileNotifier final : public Notifier {
 public:
  explicit OutboxFileNotifier(std::string path) : path_(std::move(path)) {}
  void send(const OutboundMessage& message) override;

 private:
  std::string path_;
};

class MemoryNotifier final : public Notifier {
 public:
  void send(const OutboundMessage& message) override { sent.push_back(message); }
  std::vector<OutboundMessage> sent;
};

// Transport-independent request handling over one Engine. Commands run
// under an exclusive lock, queries under a shared one. Errors come back as
// {"code","message","details"} with a matching HTTP status.
class Api {
 public:
  using Clock = std::function<Timestamp()>;

  explicit Api(Engine& engine, EventStore* store = nullptr, Notifier* notifier = nullptr, Clock clock = {},
               std::uint64_t snapshot_every = 1000);

  Response handle(const Request& request);

  Engine& engine() { return engine_; }

  struct Context;
  using Handler = std::function<Response(Context&)>;

 private:
  struct Route {
    std::string method;
    std::vector<std::string> pattern;
    bool mutating;
    Handler handler;
  };

  void route(std::string method, std::string pattern, bool mutating, Handler handler);
  void register_routes();
  void after_command(Context& ctx);

  Engine& engine_;
  EventStore* store_;
  Notifier* notifier_;
  Clock clock_;
  std::uint64_t snapshot_every_;
  std::vector<Route> routes_;
  std::shared_mutex mutex_;
};

}  // namespace peerlearn::service
