#include "micobot/server/server.hpp"

#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <boost/asio.hpp>
#include <boost/beast.hpp>

namespace micobot::server {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

std::string mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, harness::SessionProtocol& protocol)
      : ws_(std::move(socket)), protocol_(protocol) {}

  void start(http::request<http::string_body> req) {
    auto self = shared_from_this();
    ws_.async_accept(req, [self](beast::error_code ec) {
      if (ec) return;
      std::weak_ptr<WsSession> weak = self;
      self->client_ = self->protocol_.connect([weak](const nlohmann::json& m) {
        if (auto s = weak.lock()) s->send(m.dump());
      });
      self->read();
    });
  }

 private:
  void send(std::string text) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
      self->queue_.push_back(std::move(text));
      if (self->queue_.size() == 1) self->write();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->protocol_.disconnect(self->client_);
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->protocol_.handle(self->client_, text);
      self->read();
    });
  }

  websocket::stream<tcp::socket> ws_;
  harness::SessionProtocol& protocol_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  int client_ = 0;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, harness::SessionProtocol& protocol, std::string static_dir)
      : socket_(std::move(socket)), protocol_(protocol), static_dir_(std::move(static_dir)) {}

  void start() {
    http::async_read(socket_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (websocket::is_upgrade(self->req_)) {
        if (self->req_.target() == "/ws") {
          std::make_shared<WsSession>(std::move(self->socket_), self->protocol_)->start(std::move(self->req_));
        }
        return;
      }
      self->respond();
    });
  }

 private:
  void respond() {
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(false);
    std::string target(req_.target());
    if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);
    if (target == "/") target = "/index.html";
    const std::filesystem::path rel = std::filesystem::path(target).relative_path();
    const bool escapes = std::any_of(rel.begin(), rel.end(), [](const auto& part) { return part == ".."; });
    const std::filesystem::path full = std::filesystem::path(static_dir_) / rel;
    std::ifstream in(full, std::ios::binary);
    if (req_.method() != http::verb::get) {
      res->result(http::status::method_not_allowed);
    } else if (static_dir_.empty() || escapes || !in) {
      res->result(http::status::not_found);
      res->set(http::field::content_type, "text/plain");
      res->body() = "not found\n";
    } else {
      std::ostringstream ss;
      ss << in.rdbuf();
      res->result(http::status::ok);
      res->set(http::field::content_type, mime_type(full));
      res->body() = ss.str();
    }
    res->prepare_payload();
    http::async_write(socket_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->socket_.shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  tcp::socket socket_;
  harness::SessionProtocol& protocol_;
  std::string static_dir_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

struct SessionServer::Impl {
  Impl(harness::SessionProtocol& p, ServerOptions o)
      : protocol(p), options(std::move(o)), acceptor(ioc, {asio::ip::make_address(options.address), options.port}) {}

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (!ec) std::make_shared<HttpConnection>(std::move(socket), protocol, options.static_dir)->start();
      if (acceptor.is_open()) accept();
    });
  }

  harness::SessionProtocol& protocol;
  ServerOptions options;
  asio::io_context ioc;
  tcp::acceptor acceptor;
};

SessionServer::SessionServer(harness::SessionProtocol& protocol, ServerOptions options)
    : impl_(std::make_unique<Impl>(protocol, std::move(options))) {}

SessionServer::~SessionServer() = default;

unsigned short SessionServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void SessionServer::run() {
  impl_->accept();
  impl_->ioc.run();
}

void SessionServer::stop() {
  asio::post(impl_->ioc, [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
    impl_->ioc.stop();
  });
}

}  // namespace micobot::server
