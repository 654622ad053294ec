#include "peerlearn/service/event_store.hpp"

#include <unistd.h>

#include <fstream>
#include <sstream>

#include "peerlearn/error.hpp"

namespace peerlearn::service {

namespace fs = std::filesystem;

EventStore::EventStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) fail(ErrorCode::Io, "cannot create storage directory " + dir_.string() + ": " + ec.message());
  open_log();
}

EventStore::~EventStore() {
  if (log_) std::fclose(log_);
}

void EventStore::open_log() {
  if (log_) std::fclose(log_);
  log_ = std::fopen(log_path().c_str(), "ab");
  if (!log_) fail(ErrorCode::Io, "cannot open event log " + log_path().string());
}

void EventStore::append(const Event& event) {
  const std::string line = json(event).dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), log_) != line.size() || std::fflush(log_) != 0)
    fail(ErrorCode::Io, "short write to event log");
  if (::fsync(fileno(log_)) != 0) fail(ErrorCode::Io, "fsync of event log failed");
  ++since_snapshot_;
}

std::vector<Event> EventStore::read_events() const {
  std::vector<Event> events;
  std::ifstream in(log_path(), std::ios::binary);
  if (!in) return events;
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  std::size_t pos = 0, lineno = 0;
  while (pos < text.size()) {
    ++lineno;
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail: never acknowledged
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    try {
      events.push_back(json::parse(line).get<Event>());
    } catch (const json::exception& ex) {
      fail(ErrorCode::Corrupt, "event log line " + std::to_string(lineno) + " is unreadable: " + ex.what());
    }
  }
  return events;
}

std::size_t EventStore::load(Engine& engine) {
  std::uint64_t from = 0;
  if (fs::exists(snapshot_path())) {
    std::ifstream in(snapshot_path());
    json snap;
    try {
      in >> snap;
    } catch (const json::exception& ex) {
      fail(ErrorCode::Corrupt, std::string("snapshot is unreadable: ") + ex.what());
    }
    engine.restore(snap);
    from = engine.state().seq;
  }

  // Drop a torn final line so later appends start on a fresh line.
  {
    std::error_code ec;
    const auto size = fs::exists(log_path()) ? fs::file_size(log_path(), ec) : 0;
    if (size > 0) {
      std::ifstream in(log_path(), std::ios::binary);
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      const auto last_nl = text.rfind('\n');
      const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
      if (keep != text.size()) {
        std::fclose(log_);
        log_ = nullptr;
        fs::resize_file(log_path(), keep, ec);
        if (ec) fail(ErrorCode::Io, "cannot truncate torn event log tail: " + ec.message());
        open_log();
      }
    }
  }

  std::size_t replayed = 0;
  for (const Event& e : read_events()) {
    if (e.seq <= from) continue;
    try {
      engine.replay(e);
    } catch (const Error& err) {
      fail(ErrorCode::Corrupt, "replay of event " + std::to_string(e.seq) + " failed: " + err.what());
    }
    ++replayed;
  }
  since_snapshot_ = replayed;
  return replayed;
}

void EventStore::write_snapshot(const Engine& engine) {
  const fs::path tmp = dir_ / "snapshot.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << engine.snapshot().dump();
    out.flush();
    if (!out) fail(ErrorCode::Io, "cannot write snapshot");
  }
  std::error_code ec;
  fs::rename(tmp, snapshot_path(), ec);
  if (ec) fail(ErrorCode::Io, "cannot install snapshot: " + ec.message());
  since_snapshot_ = 0;
}

}  // namespace peerlearn::service
