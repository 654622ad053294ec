#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "peerlearn/core/config.hpp"
#include "peerlearn/service/api.hpp"

namespace httplib {
class Server;
}

namespace peerlearn::service {

struct ServiceConfig {
  std::string storage_path = "./peerlearn-data";
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::uint64_t snapshot_every = 1000;
  core::OfferingConfig offering_defaults;
};

// Reads a JSON config file; unknown keys and out-of-range values are
// rejected. PEERLEARN_PORT and PEERLEARN_STORAGE override the file.
ServiceConfig load_config(const std::string& path);
ServiceConfig parse_config(const json& j);
void apply_env_overrides(ServiceConfig& config);

// Owns the engine, the on-disk ledger and the HTTP listener.
class Server {
 public:
  explicit Server(ServiceConfig config);
  ~Server();

  // Binds the port; throws Io when it cannot.
  void start();
  void stop();
  // Blocks until stop().
  void wait();
  int port() const { return port_; }

  Api& api() { return *api_; }
  std::size_t replayed() const { return replayed_; }

 private:
  ServiceConfig config_;
  std::unique_ptr<Engine> engine_;
  std::unique_ptr<EventStore> store_;
  std::unique_ptr<OutboxFileNotifier> notifier_;
  std::unique_ptr<Api> api_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
  std::size_t replayed_ = 0;
  int port_ = 0;
};

}  // namespace peerlearn::service
