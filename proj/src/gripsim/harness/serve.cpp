#include "gripsim/harness/serve.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <cmath>
#include <deque>

namespace gripsim::harness {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, const ServeOptions& options, SessionFactory& factory, std::function<void()> on_close)
      : ws_(std::move(socket)),
        timer_(ws_.get_executor()),
        options_(options),
        factory_(factory),
        on_close_(std::move(on_close)) {}

  void start() {
    ws_.text(true);
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return close();
    try {
      session_ = factory_();
    } catch (const std::exception& e) {
      nlohmann::ordered_json err{{"type", "error"}, {"message", e.what()}};
      send(err.dump());
      closing_ = true;
      return;
    }
    send(session_->hello().dump());
    send(session_->snapshot().dump());
    start_ = std::chrono::steady_clock::now();
    read();
    schedule_tick();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      if (self->closed_) return;
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->send(self->session_->submit(text).dump());
      self->read();
    });
  }

  void schedule_tick() {
    if (closed_) return;
    const auto period = std::chrono::duration<double>(session_->engine().config().tick_seconds());
    if (options_.realtime) {
      timer_.expires_at(start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(period * (beats_ + 1)));
    } else {
      timer_.expires_after(std::chrono::milliseconds(0));
    }
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->on_tick();
    });
  }

  void on_tick() {
    ++beats_;
    try {
      session_->advance();
    } catch (const std::exception& e) {
      nlohmann::ordered_json err{{"type", "error"}, {"message", e.what()}};
      send(err.dump());
      closing_ = true;
      return;
    }
    // Snapshots on a fixed beat schedule so they also flow while paused.
    const double tick = session_->engine().config().tick_seconds();
    const auto due = static_cast<std::int64_t>(std::floor(beats_ * tick * options_.snapshot_rate));
    if (due > published_) {
      published_ = due;
      send(session_->snapshot().dump());
    }
    schedule_tick();
  }

  void send(std::string text) {
    outbox_.push_back(std::move(text));
    if (outbox_.size() == 1) write();
  }

  void write() {
    ws_.async_write(asio::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) {
        self->write();
      } else if (self->closing_) {
        self->ws_.async_close(websocket::close_code::internal_error,
                              [self](beast::error_code) { self->close(); });
      }
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    timer_.cancel();
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).close(ignored);
    session_.reset();
    on_close_();
  }

  websocket::stream<tcp::socket> ws_;
  asio::steady_timer timer_;
  const ServeOptions& options_;
  SessionFactory& factory_;
  std::function<void()> on_close_;
  std::unique_ptr<Session> session_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  std::chrono::steady_clock::time_point start_;
  std::int64_t beats_ = 0;
  std::int64_t published_ = 0;
  bool closing_ = false;
  bool closed_ = false;
};

}  // namespace

struct SessionServer::Impl {
  Impl(ServeOptions o, SessionFactory f) : options(std::move(o)), factory(std::move(f)), acceptor(io) {
    beast::error_code ec;
    const auto address = asio::ip::make_address(options.address, ec);
    if (ec) fail(ErrorCode::InvalidArgument, "invalid bind address '" + options.address + "'");
    const tcp::endpoint endpoint(address, options.port);
    acceptor.open(endpoint.protocol(), ec);
    if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(endpoint, ec);
    if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) fail(ErrorCode::Io, "cannot listen on " + options.address + ":" + std::to_string(options.port) + ": " + ec.message());
  }

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(std::move(socket), options, factory, [this] { ended(); })->start();
      accept();
    });
  }

  void ended() {
    ++finished;
    if (options.max_connections > 0 && finished >= options.max_connections) {
      beast::error_code ignored;
      acceptor.close(ignored);
      io.stop();
    }
  }

  ServeOptions options;
  SessionFactory factory;
  asio::io_context io;
  tcp::acceptor acceptor;
  int finished = 0;
};

SessionServer::SessionServer(ServeOptions options, SessionFactory factory)
    : impl_(std::make_unique<Impl>(std::move(options), std::move(factory))) {}

SessionServer::~SessionServer() = default;

unsigned short SessionServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void SessionServer::run() {
  impl_->accept();
  impl_->io.run();
}

void SessionServer::stop() {
  asio::post(impl_->io, [impl = impl_.get()] {
    beast::error_code ignored;
    impl->acceptor.close(ignored);
    impl->io.stop();
  });
}

}  // namespace gripsim::harness
