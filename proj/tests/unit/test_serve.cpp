#include <gtest/gtest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <thread>

#include "gripsim/harness/serve.hpp"
#include "support.hpp"

using namespace gripsim;
using namespace gripsim::harness;
namespace beast = boost::beast;
namespace asio = boost::asio;
using nlohmann::json;

namespace {

class Client {
 public:
  explicit Client(unsigned short port) : ws_(io_) {
    asio::ip::tcp::resolver resolver(io_);
    asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }

  json next() {
    beast::flat_buffer b;
    ws_.read(b);
    return json::parse(beast::buffers_to_string(b.data()));
  }

  // Skips state snapshots.
  json reply() {
    for (;;) {
      auto m = next();
      if (m["type"] != "state") return m;
    }
  }

  void send(const std::string& text) { ws_.write(asio::buffer(text)); }
  void close() { ws_.close(beast::websocket::close_code::normal); }

 private:
  asio::io_context io_;
  beast::websocket::stream<asio::ip::tcp::socket> ws_;
};

SessionFactory factory() {
  return [] {
    SessionOptions o;
    o.seed = 2;
    return std::make_unique<Session>(SimConfig{}, testkit::threshold_classifier(), o);
  };
}

}  // namespace

TEST(Serve, WireProtocol) {
  ServeOptions opts;
  opts.port = 0;
  opts.realtime = false;
  opts.snapshot_rate = 20.0;
  SessionServer server(opts, factory());
  const auto port = server.port();
  ASSERT_NE(port, 0);
  std::thread t([&] { server.run(); });

  {
    Client c(port);
    const auto hello = c.next();
    EXPECT_EQ(hello["type"], "hello");
    EXPECT_EQ(hello["protocol_version"], kProtocolVersion);
    const auto first = c.next();
    EXPECT_EQ(first["type"], "state");
    EXPECT_EQ(first["fingers"].size(), 3u);

    // snapshots advance on their own
    std::int64_t last = first["tick"];
    for (int i = 0; i < 3; ++i) {
      const auto s = c.next();
      ASSERT_EQ(s["type"], "state");
      EXPECT_GT(s["tick"].get<std::int64_t>(), last);
      last = s["tick"];
    }

    c.send(R"({"type":"wrench","fx":0.2,"duration":0.1,"id":1})");
    auto r = c.reply();
    EXPECT_EQ(r["type"], "ack");
    EXPECT_EQ(r["id"], 1);
    c.send("garbage");
    r = c.reply();
    EXPECT_EQ(r["type"], "error");
    c.send(R"({"type":"release","finger":9,"id":"x"})");
    r = c.reply();
    EXPECT_EQ(r["type"], "error");
    EXPECT_EQ(r["id"], "x");

    c.send(R"({"type":"pause"})");
    EXPECT_EQ(c.reply()["command"], "pause");
    // States keep flowing while paused but the tick stops.
    std::int64_t frozen = -1;
    for (int i = 0; i < 4; ++i) {
      const auto s = c.next();
      if (!s["paused"].get<bool>()) continue;
      if (frozen < 0) frozen = s["tick"];
      EXPECT_EQ(s["tick"].get<std::int64_t>(), frozen);
    }
    EXPECT_GE(frozen, 0);
    for (const char* cmd : {R"({"type":"resume"})", R"({"type":"override","finger":0,"velocity":[0,0]})",
                            R"({"type":"reset","seed":4})"}) {
      c.send(cmd);
      EXPECT_EQ(c.reply()["type"], "ack") << cmd;
    }
    c.close();
  }

  server.stop();
  t.join();
}

TEST(Serve, StopsAfterConnectionLimit) {
  ServeOptions opts;
  opts.port = 0;
  opts.realtime = false;
  opts.max_connections = 1;
  SessionServer server(opts, factory());
  std::thread t([&] { server.run(); });
  {
    Client c(server.port());
    EXPECT_EQ(c.next()["type"], "hello");
    c.close();
  }
  t.join();
}

TEST(Serve, BadAddress) {
  ServeOptions opts;
  opts.address = "not-an-address";
  EXPECT_THROW(SessionServer(opts, factory()), Error);
}
