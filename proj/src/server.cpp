#include "taskgrid/server.hpp"

#include <sys/socket.h>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <list>

namespace taskgrid {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct CollectServer::Impl {
  ServiceConfig config;
  std::shared_ptr<const SceneCatalog> catalog;
  std::shared_ptr<const std::vector<TaskDefinition>> library;

  net::io_context ioc;
  std::unique_ptr<tcp::acceptor> acceptor;
  std::thread accept_thread;

  struct Connection {
    int fd = -1;
    std::thread thread;
    bool done = false;
  };
  std::mutex mu;
  std::list<Connection> connections;
  std::atomic<bool> stopping{false};
  std::atomic<unsigned> next_id{0};

  void serve(tcp::socket socket, Connection* conn) {
    const std::string sid = "s" + std::to_string(++next_id);
    Session session(catalog, library, config, sid);
    websocket::stream<tcp::socket> ws(std::move(socket));
    try {
      ws.accept();
      for (;;) {
        beast::flat_buffer buffer;
        ws.read(buffer);
        std::vector<Json> out;
        if (!ws.got_text()) {
          out = session.handle(Json::object({{"type", "Binary"}}));
        } else {
          out = session.handle_text(beast::buffers_to_string(buffer.data()));
        }
        for (const auto& msg : out) {
          ws.text(true);
          ws.write(net::buffer(msg.dump()));
        }
      }
    } catch (const std::exception&) {
      // Disconnects end the session; unsaved work is discarded.
    }
    std::lock_guard lock(mu);
    conn->fd = -1;  // before ws closes the descriptor
    conn->done = true;
  }

  void reap() {
    for (auto it = connections.begin(); it != connections.end();) {
      if (it->done) {
        it->thread.join();
        it = connections.erase(it);
      } else {
        ++it;
      }
    }
  }

  void accept_loop() {
    acceptor->async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec || stopping) return;
      std::lock_guard lock(mu);
      reap();
      connections.emplace_back();
      Connection* conn = &connections.back();
      conn->fd = socket.native_handle();
      conn->thread = std::thread(
          [this, conn, s = std::move(socket)]() mutable { serve(std::move(s), conn); });
      accept_loop();
    });
  }
};

CollectServer::CollectServer(ServiceConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->catalog =
      std::make_shared<const SceneCatalog>(SceneCatalog::load(config.scene_dir));
  if (!config.task_library.empty())
    impl_->library = std::make_shared<const std::vector<TaskDefinition>>(
        load_task_library(config.task_library.string()));
  impl_->config = std::move(config);
}

CollectServer::~CollectServer() { stop(); }

void CollectServer::start(const std::string& address, unsigned short port) {
  Impl& s = *impl_;
  try {
    const tcp::endpoint ep(net::ip::make_address(address), port);
    s.acceptor = std::make_unique<tcp::acceptor>(s.ioc);
    s.acceptor->open(ep.protocol());
    s.acceptor->set_option(net::socket_base::reuse_address(true));
    s.acceptor->bind(ep);
    s.acceptor->listen();
    port_ = s.acceptor->local_endpoint().port();
  } catch (const std::exception& e) {
    throw BindError("cannot listen on " + address + ":" + std::to_string(port) +
                    ": " + e.what());
  }
  s.accept_loop();
  s.accept_thread = std::thread([&s] { s.ioc.run(); });
}

void CollectServer::stop() {
  Impl& s = *impl_;
  if (s.stopping.exchange(true)) return;
  if (s.acceptor) {
    net::post(s.ioc, [&s] {
      beast::error_code ec;
      s.acceptor->close(ec);
    });
  }
  if (s.accept_thread.joinable()) s.accept_thread.join();
  {
    std::lock_guard lock(s.mu);
    // Unblocks readers; each serve() then exits through its catch.
    for (auto& c : s.connections)
      if (c.fd >= 0) ::shutdown(c.fd, SHUT_RDWR);
  }
  for (auto& c : s.connections)
    if (c.thread.joinable()) c.thread.join();
  s.connections.clear();
}

}  // namespace taskgrid
