#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "peerlearn/service/engine.hpp"

namespace peerlearn::service {

// Append-only NDJSON ledger (`events.ndjson`) plus an optional full-state
// snapshot (`snapshot.json`). Startup restores the snapshot and replays only
// the events after it.
class EventStore final : public EventSink {
 public:
  explicit EventStore(std::filesystem::path dir);
  ~EventStore() override;
  EventStore(const EventStore&) = delete;
  EventStore& operator=(const EventStore&) = delete;

  // fsyncs before returning.
  void append(const Event& event) override;

  // Restores `engine` from disk; returns the number of events replayed. A
  // torn final line (crash mid-write) is dropped; any other damage throws
  // Corrupt.
  std::size_t load(Engine& engine);

  void write_snapshot(const Engine& engine);
  std::uint64_t events_since_snapshot() const { return since_snapshot_; }

  std::vector<Event> read_events() const;

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path log_path() const { return dir_ / "events.ndjson"; }
  std::filesystem::path snapshot_path() const { return dir_ / "snapshot.json"; }

 private:
  void open_log();

  std::filesystem::path dir_;
  std::FILE* log_ = nullptr;
  std::uint64_t since_snapshot_ = 0;
};

}  // namespace peerlearn::service
