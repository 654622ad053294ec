#include "peerlearn/service/server.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "httplib.h"
#include "peerlearn/error.hpp"

namespace peerlearn::service {

ServiceConfig parse_config(const json& j) {
  if (!j.is_object()) fail(ErrorCode::Validation, "config must be a JSON object");
  static const std::set<std::string> known{"storage_path", "host", "port", "snapshot_every", "offering_defaults"};
  std::vector<std::string> unknown;
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) unknown.push_back(k);
  if (!unknown.empty()) fail(ErrorCode::Validation, "unknown config keys", unknown);

  ServiceConfig c;
  c.storage_path = j.value("storage_path", c.storage_path);
  c.host = j.value("host", c.host);
  c.port = j.value("port", c.port);
  c.snapshot_every = j.value("snapshot_every", c.snapshot_every);
  if (j.contains("offering_defaults")) c.offering_defaults = j.at("offering_defaults").get<core::OfferingConfig>();
  if (c.port < 0 || c.port > 65535) fail(ErrorCode::Validation, "port out of range");
  core::validate(c.offering_defaults);
  return c;
}

ServiceConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    fail(ErrorCode::Validation, "config file " + path + " is not valid JSON: " + ex.what());
  }
  ServiceConfig c = parse_config(j);
  apply_env_overrides(c);
  return c;
}

void apply_env_overrides(ServiceConfig& c) {
  if (const char* port = std::getenv("PEERLEARN_PORT")) {
    try {
      c.port = std::stoi(port);
    } catch (const std::exception&) {
      fail(ErrorCode::Validation, std::string("PEERLEARN_PORT is not a number: ") + port);
    }
  }
  if (const char* storage = std::getenv("PEERLEARN_STORAGE")) c.storage_path = storage;
}

Server::Server(ServiceConfig config) : config_(std::move(config)) {
  engine_ = std::make_unique<Engine>(config_.offering_defaults);
  store_ = std::make_unique<EventStore>(config_.storage_path);
  replayed_ = store_->load(*engine_);
  engine_->set_sink(store_.get());
  notifier_ = std::make_unique<OutboxFileNotifier>((store_->dir() / "outbox.ndjson").string());
  api_ = std::make_unique<Api>(*engine_, store_.get(), notifier_.get(), Api::Clock{}, config_.snapshot_every);
  http_ = std::make_unique<httplib::Server>();
  // no SO_REUSEPORT: a second instance must fail to bind
  http_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });

  auto handler = [this](const httplib::Request& hreq, httplib::Response& hres) {
    Request req;
    req.method = hreq.method;
    req.path = hreq.path;
    for (const auto& [k, v] : hreq.params) req.query[k] = v;
    req.body = hreq.body;
    const std::string auth = hreq.get_header_value("Authorization");
    if (auth.rfind("Bearer ", 0) == 0) req.bearer = auth.substr(7);
    const Response res = api_->handle(req);
    hres.status = res.status;
    hres.set_content(res.body, res.content_type);
  };
  http_->Get(".*", handler);
  http_->Post(".*", handler);
  http_->Put(".*", handler);
  http_->Patch(".*", handler);
  http_->Delete(".*", handler);
}

Server::~Server() { stop(); }

void Server::start() {
  if (config_.port == 0) {
    port_ = http_->bind_to_any_port(config_.host);
    if (port_ < 0) fail(ErrorCode::Io, "cannot bind " + config_.host);
  } else {
    if (!http_->bind_to_port(config_.host, config_.port))
      fail(ErrorCode::Io, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
    port_ = config_.port;
  }
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
}

void Server::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

void Server::wait() {
  if (thread_.joinable()) thread_.join();
}

}  // namespace peerlearn::service
