#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>

#include "acord/server.hpp"
#include "criteria.hpp"

using namespace acord;

namespace {

using Clock = std::chrono::steady_clock;

ServerContext test_context(const std::filesystem::path& dir) {
  ServerContext ctx;
  for (const auto* name : {"heart", "house"}) {
    ctx.shapes[name] = load_named_shape(oracle::source_path("data/shapes"), name);
  }
  std::mt19937_64 rng(1);
  ctx.actor = std::make_shared<const sac::ActorPolicy<float>>(
      sac::ActorPolicy<float>::initialized(kPainterObservationSize + 2, 4, {16, 16}, rng));
  ctx.tick_hz = 50.0;
  ctx.session_dir = dir;
  return ctx;
}

class Client {
 public:
  explicit Client(unsigned short port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }
  ~Client() {
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }

  void send(const json& j) { ws_.write(net::buffer(j.dump())); }

  json read() {
    beast::flat_buffer b;
    ws_.read(b);
    return json::parse(beast::buffers_to_string(b.data()));
  }

  /// Next frame that is not a state frame.
  json reply() {
    for (;;) {
      json j = read();
      if (j["type"] != "state") return j;
    }
  }

  json request(const json& j) {
    send(j);
    return reply();
  }

 private:
  net::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

std::pair<int, std::string> http_get(unsigned short port, const std::string& target) {
  net::io_context ioc;
  tcp::socket sock(ioc);
  tcp::resolver resolver(ioc);
  net::connect(sock, resolver.resolve("127.0.0.1", std::to_string(port)));
  http::request<http::empty_body> req{http::verb::get, target, 11};
  req.set(http::field::host, "127.0.0.1");
  http::write(sock, req);
  beast::flat_buffer b;
  http::response<http::string_body> res;
  http::read(sock, b, res);
  return {static_cast<int>(res.result_int()), res.body()};
}

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "acord_server_test";
    std::filesystem::remove_all(dir_);
    server_ = std::make_unique<RolloutServer>(test_context(dir_), 0);
    server_->start();
  }
  void TearDown() override { server_->stop(); }

  unsigned short port() const { return server_->port(); }

  std::filesystem::path dir_;
  std::unique_ptr<RolloutServer> server_;
};

}  // namespace

TEST(FrameQueueTest, DropsOldestStateFrameOnly) {
  FrameQueue q(3);
  q.push("reply-a", false);
  for (int i = 0; i < 5; ++i) q.push("state-" + std::to_string(i), true);
  q.push("reply-b", false);
  EXPECT_EQ(q.dropped(), 2u);
  std::vector<std::string> out;
  std::string f;
  while (q.pop(f)) out.push_back(f);
  EXPECT_EQ(out, (std::vector<std::string>{"reply-a", "state-2", "state-3", "state-4", "reply-b"}));
}

TEST(Routes, SafeSessionIds) {
  EXPECT_TRUE(safe_id("s123-4_x"));
  EXPECT_FALSE(safe_id(""));
  EXPECT_FALSE(safe_id("../etc"));
  EXPECT_FALSE(safe_id("a/b"));
}

TEST_F(ServerTest, StateFramesArriveAndSetKIsReflected) {
  Client c(port());
  const auto t0 = Clock::now();
  const json ack = c.request({{"type", "start"}, {"condition", "acord"}, {"shape", "heart"}, {"k", {0.2, 0.2}}});
  ASSERT_EQ(ack["type"], "ack") << ack.dump();
  EXPECT_EQ(ack["k"], json({0.2, 0.2}));
  json first = c.read();
  while (first["type"] != "state") first = c.read();
  EXPECT_LT(Clock::now() - t0, std::chrono::seconds(1));
  EXPECT_EQ(first["k"], json({0.2, 0.2}));

  c.send({{"type", "set_k"}, {"k", {0.9, 1.5}}});
  bool acked = false;
  std::size_t after_ack = 0;
  std::size_t reflected = 0;
  while (after_ack < 10) {
    const json f = c.read();
    if (f["type"] == "ack") {
      EXPECT_EQ(f["k"], json({0.9, 1.0}));
      acked = true;
      continue;
    }
    if (!acked) continue;
    ++after_ack;
    // The tick that was already in flight when the ack went out may still
    // carry the old value; everything after it carries the new one.
    if (f["k"] == json({0.9, 1.0})) ++reflected;
  }
  EXPECT_GE(reflected, 9u);
}

TEST_F(ServerTest, RejectsBadRequestsWithoutDroppingTheEpisode) {
  Client c(port());
  EXPECT_EQ(c.request({{"type", "set_k"}, {"k", {0.5, 0.5}}})["type"], "error");
  ASSERT_EQ(c.request({{"type", "start"}, {"condition", "acord"}, {"shape", "heart"}})["type"], "ack");
  const json joy = c.request({{"type", "joystick"}, {"u", {0.1, 0.1}}});
  EXPECT_EQ(joy["type"], "error");
  EXPECT_NE(joy["reason"].get<std::string>().find("not accepted"), std::string::npos);
  const json again = c.request({{"type", "start"}, {"condition", "sa"}, {"shape", "heart"}});
  EXPECT_EQ(again["type"], "error");
  EXPECT_NE(again["reason"].get<std::string>().find("already running"), std::string::npos);
  EXPECT_EQ(c.request({{"type", "set_k"}, {"k", {0.5}}})["type"], "error");
  c.send("garbage");
  EXPECT_EQ(c.reply()["type"], "error");
  EXPECT_EQ(c.request({{"type", "set_k"}, {"k", {0.5, 0.5}}})["type"], "ack");
}

TEST_F(ServerTest, StyleOutOfRangeAndUnknownShape) {
  Client c(port());
  EXPECT_EQ(c.request({{"type", "start"}, {"condition", "styles"}, {"shape", "heart"}, {"style", 7}})["type"], "error");
  EXPECT_EQ(c.request({{"type", "start"}, {"condition", "styles"}, {"shape", "star"}})["type"], "error");
  const json ok = c.request({{"type", "start"}, {"condition", "styles"}, {"shape", "house"}, {"style", 2}});
  ASSERT_EQ(ok["type"], "ack");
  EXPECT_EQ(ok["style"], 2);
  EXPECT_EQ(c.request({{"type", "select_style"}, {"index", 7}})["type"], "error");
  EXPECT_EQ(c.request({{"type", "select_style"}, {"index", 5}})["style"], 5);
}

TEST_F(ServerTest, FinishPersistsAndServesTheRecord) {
  std::string id;
  {
    Client c(port());
    const json ack = c.request({{"type", "start"}, {"condition", "sa"}, {"shape", "heart"}});
    ASSERT_EQ(ack["type"], "ack");
    id = ack["session"];
    c.send({{"type", "joystick"}, {"u", {0.5, -0.5}}});
    std::size_t states = 0;
    while (states < 5) {
      const json f = c.read();
      if (f["type"] == "state") {
        ++states;
        EXPECT_EQ(f["belief"].size(), 6u);
      }
    }
    const json done = c.request({{"type", "finish"}});
    ASSERT_EQ(done["type"], "ack") << done.dump();
    EXPECT_EQ(done["session"], id);
    EXPECT_GE(done["ticks"].get<std::size_t>(), 5u);
    EXPECT_TRUE(done["scores"].contains("consistency"));
    EXPECT_EQ(c.request({{"type", "finish"}})["type"], "error");
  }
  const auto [status, body] = http_get(port(), "/sessions/" + id);
  ASSERT_EQ(status, 200);
  const auto record = json::parse(body);
  EXPECT_EQ(record["id"], id);
  EXPECT_EQ(record["condition"], "sa");
  EXPECT_TRUE(std::filesystem::exists(dir_ / (id + ".json")));

  EXPECT_EQ(http_get(port(), "/sessions/nope").first, 404);
  EXPECT_EQ(http_get(port(), "/sessions/..%2fx").first, 400);
  EXPECT_EQ(http_get(port(), "/elsewhere").first, 404);
}

TEST_F(ServerTest, ShapesAndStyles) {
  const auto [s1, shapes] = http_get(port(), "/shapes");
  ASSERT_EQ(s1, 200);
  const auto sj = json::parse(shapes);
  ASSERT_EQ(sj.size(), 2u);
  EXPECT_EQ(sj[0]["name"], "heart");
  EXPECT_EQ(sj[0]["waypoints"].size(), 48u);
  const auto [s2, styles] = http_get(port(), "/styles");
  ASSERT_EQ(s2, 200);
  const auto st = json::parse(styles);
  ASSERT_EQ(st.size(), 6u);
  EXPECT_EQ(st[3]["index"], 3);
  EXPECT_TRUE(st[3].contains("thumbnail"));
}

TEST_F(ServerTest, DisconnectMidEpisodeStillSavesTheRecord) {
  std::string id;
  {
    Client c(port());
    const json ack = c.request({{"type", "start"}, {"condition", "acord"}, {"shape", "house"}});
    id = ack["session"];
    c.read();
  }
  const auto deadline = Clock::now() + std::chrono::seconds(5);
  while (!std::filesystem::exists(dir_ / (id + ".json")) && Clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  EXPECT_TRUE(std::filesystem::exists(dir_ / (id + ".json")));
}
