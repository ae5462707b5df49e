#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "taskgrid/session.hpp"

namespace taskgrid {

class BindError : public Error {
 public:
  using Error::Error;
};

/// WebSocket front end: one thread and one Session per connection, text
/// frames carrying one JSON message each.
class CollectServer {
 public:
  explicit CollectServer(ServiceConfig config);
  ~CollectServer();
  CollectServer(const CollectServer&) = delete;
  CollectServer& operator=(const CollectServer&) = delete;

  /// Binds and starts accepting; port 0 picks a free port. Throws BindError.
  void start(const std::string& address, unsigned short port);
  unsigned short port() const { return port_; }
  /// Closes the listener and every open connection, then joins.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  unsigned short port_ = 0;
};

}  // namespace taskgrid
