#pragma once

#include <memory>
#include <string>

#include "micobot/harness/live.hpp"

namespace micobot::server {

struct ServerOptions {
  std::string address = "127.0.0.1";
  /// 0 picks a free port.
  unsigned short port = 8080;
  /// Directory served for plain HTTP GETs; empty serves nothing.
  std::string static_dir;
};

/// WebSocket endpoint at /ws plus static files, on one port.
class SessionServer {
 public:
  SessionServer(harness::SessionProtocol& protocol, ServerOptions options);
  ~SessionServer();

  /// Bound port (after construction).
  unsigned short port() const;
  /// Serves until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace micobot::server
