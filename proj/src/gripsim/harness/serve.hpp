#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "gripsim/harness/session.hpp"

namespace gripsim::harness {

struct ServeOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
  double snapshot_rate = 30.0;  // Hz
  bool realtime = true;         // pace ticks to the wall clock
  int max_connections = 0;      // stop after this many sessions ended; 0 = never
};

using SessionFactory = std::function<std::unique_ptr<Session>()>;

// WebSocket server: one Session per connection, hello first, then state
// snapshots; every client message gets an ack or error reply.
class SessionServer {
 public:
  SessionServer(ServeOptions options, SessionFactory factory);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  // Bound port (after construction).
  unsigned short port() const;
  // Blocks until stop() or the connection limit is reached.
  void run();
  // Thread-safe.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gripsim::harness
