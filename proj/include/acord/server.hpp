#pragma once

// Live rollout service: WebSocket control/stream endpoint plus a few HTTP GET
// routes, all on one port. Each episode steps on its own thread at a fixed
// tick rate; control arrives through the session's ControlCell and frames
// leave through a bounded queue that drops the oldest state frame when full.

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "acord/session.hpp"

namespace acord {

namespace beast = boost::beast;
namespace http = boost::beast::http;
namespace websocket = boost::beast::websocket;
namespace net = boost::asio;
using tcp = boost::asio::ip::tcp;

struct ServerContext {
  std::map<std::string, Shape> shapes;
  PainterParams painter;
  StyleLibrary styles;
  SAParams sa;
  MetricsConfig metrics;
  FeatureMap features = make_feature_map({kPainterHeight, kPainterPitch}, {"height", "pitch"});
  std::shared_ptr<const sac::ActorPolicy<float>> actor;
  double tick_hz = 20.0;
  std::size_t queue_capacity = 64;
  std::filesystem::path session_dir = "sessions";
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t checkpoint_hash = 0;
};

/// Outbound frames. State frames may be dropped (oldest first) when the
/// consumer falls behind; replies to requests are never dropped.
class FrameQueue {
 public:
  explicit FrameQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(std::string frame, bool droppable) {
    std::lock_guard lock(mu_);
    if (droppable) {
      std::size_t held = 0;
      for (const auto& f : frames_) held += f.droppable ? 1 : 0;
      if (held >= capacity_) {
        for (auto it = frames_.begin(); it != frames_.end(); ++it) {
          if (it->droppable) {
            frames_.erase(it);
            ++dropped_;
            break;
          }
        }
      }
    }
    frames_.push_back({std::move(frame), droppable});
  }

  bool pop(std::string& out) {
    std::lock_guard lock(mu_);
    if (frames_.empty()) return false;
    out = std::move(frames_.front().text);
    frames_.pop_front();
    return true;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return frames_.size();
  }
  std::size_t dropped() const {
    std::lock_guard lock(mu_);
    return dropped_;
  }

 private:
  struct Frame {
    std::string text;
    bool droppable;
  };
  mutable std::mutex mu_;
  std::deque<Frame> frames_;
  std::size_t capacity_;
  std::size_t dropped_ = 0;
};

/// Lets stepping threads post to the io_context only while it is serving.
class PostGate {
 public:
  template <typename Executor, typename F>
  void post(const Executor& ex, F&& f) {
    std::lock_guard lock(mu_);
    if (open_) net::post(ex, std::forward<F>(f));
  }
  void close() {
    std::lock_guard lock(mu_);
    open_ = false;
  }

 private:
  std::mutex mu_;
  bool open_ = true;
};

inline json state_frame(const std::string& id, const TickRecord& t) {
  json j{{"type", "state"},
         {"session", id},
         {"t", t.t},
         {"time", t.time},
         {"brush", {t.state.brush_position.x(), t.state.brush_position.y(), t.state.brush_height, t.state.brush_pitch}},
         {"waypoint_index", t.state.next_waypoint_index},
         {"terminated", t.terminated},
         {"failed", t.failed}};
  switch (t.control.condition) {
    case Condition::acord: j["k"] = t.control.k.values(); break;
    case Condition::sa:
      j["u"] = {t.control.u[0], t.control.u[1]};
      j["belief"] = t.belief;
      break;
    case Condition::styles: j["style"] = t.control.style; break;
  }
  return j;
}

inline json scores_json(const CoverageReport& c) {
  return {{"coverage", c.coverage},
          {"consistency", c.consistency},
          {"best_shift", {c.best_shift.dx, c.best_shift.dy, c.best_shift.dtheta}}};
}

inline std::string new_session_id() {
  static std::atomic<std::uint64_t> counter{0};
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count();
  return "s" + std::to_string(ms) + "-" + std::to_string(counter.fetch_add(1));
}

/// One running episode and its stepping thread.
class LiveSession {
 public:
  using Notify = std::function<void()>;

  LiveSession(std::string id, SessionSetup setup, std::optional<ControlValue> initial,
              std::shared_ptr<FrameQueue> queue, Notify notify)
      : id_(std::move(id)), session_(std::move(setup), std::move(initial)), queue_(std::move(queue)),
        notify_(std::move(notify)) {}

  ~LiveSession() { stop(); }

  void start() {
    thread_ = std::thread([this] { loop(); });
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) thread_.join();
  }

  const std::string& id() const { return id_; }
  PaintSession& session() { return session_; }

 private:
  void loop() {
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / session_.setup().tick_hz));
    auto next = std::chrono::steady_clock::now();
    while (true) {
      {
        std::unique_lock lock(mu_);
        if (cv_.wait_until(lock, next, [this] { return stop_; })) return;
      }
      if (session_.done()) return;
      const TickRecord& t = session_.tick();
      queue_->push(state_frame(id_, t).dump(), true);
      notify_();
      next += period;
    }
  }

  std::string id_;
  PaintSession session_;
  std::shared_ptr<FrameQueue> queue_;
  Notify notify_;
  std::thread thread_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stop_ = false;
};

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, std::shared_ptr<const ServerContext> ctx, std::shared_ptr<PostGate> gate)
      : ws_(std::move(socket)),
        ctx_(std::move(ctx)),
        gate_(std::move(gate)),
        queue_(std::make_shared<FrameQueue>(ctx_->queue_capacity)) {}

  ~WsConnection() { close_episode(); }

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    do_read();
  }

  void do_read() { ws_.async_read(in_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this())); }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      close_episode();
      return;
    }
    const std::string text = beast::buffers_to_string(in_.data());
    in_.consume(in_.size());
    reply(handle(text));
    do_read();
  }

  json handle(const std::string& text) {
    try {
      const WireMessage m = parse_message(text);
      if (const auto* s = std::get_if<StartMessage>(&m)) return start(*s);
      if (std::holds_alternative<FinishMessage>(m)) return finish();
      if (!live_) throw RequestError("no episode is running");
      const ControlValue v = live_->session().apply(m);
      json ack{{"type", "ack"}, {"for", message_type(m)}, {"session", live_->id()}};
      ack.update(control_to_json(v));
      return ack;
    } catch (const std::exception& e) {
      return {{"type", "error"}, {"reason", e.what()}};
    }
  }

  json start(const StartMessage& m) {
    if (live_) throw RequestError("an episode is already running on this session");
    const auto shape = ctx_->shapes.find(m.shape);
    if (shape == ctx_->shapes.end()) throw RequestError("unknown shape '" + m.shape + "'");
    SessionSetup setup;
    setup.condition = m.condition;
    setup.shape = shape->second;
    setup.painter = ctx_->painter;
    setup.styles = ctx_->styles;
    setup.sa = ctx_->sa;
    setup.metrics = ctx_->metrics;
    setup.features = ctx_->features;
    setup.actor = ctx_->actor;
    setup.tick_hz = ctx_->tick_hz;
    setup.seed = ctx_->seed;
    setup.config_hash = ctx_->config_hash;
    setup.checkpoint_hash = ctx_->checkpoint_hash;

    ControlValue initial = PaintSession::default_control(setup);
    if (m.k) {
      if (m.condition != Condition::acord) throw RequestError("'k' only applies to the acord condition");
      initial = control_from_message(SetKMessage{*m.k}, initial, setup.features.size(), setup.styles.size());
    }
    if (m.style) {
      if (m.condition != Condition::styles) throw RequestError("'style' only applies to the styles condition");
      initial = control_from_message(SelectStyleMessage{*m.style}, initial, setup.features.size(), setup.styles.size());
    }

    std::weak_ptr<WsConnection> weak = weak_from_this();
    auto executor = ws_.get_executor();
    auto notify = [weak, executor, gate = gate_] {
      gate->post(executor, [weak] {
        if (auto self = weak.lock()) self->flush();
      });
    };
    live_ = std::make_unique<LiveSession>(new_session_id(), std::move(setup), initial, queue_, notify);
    live_->start();
    json ack{{"type", "ack"}, {"for", "start"}, {"session", live_->id()}, {"condition", to_string(m.condition)},
             {"shape", m.shape}};
    ack.update(control_to_json(initial));
    return ack;
  }

  json finish() {
    if (!live_) throw RequestError("no episode is running");
    live_->stop();
    const SessionRecord record = finish_session(live_->session(), live_->id(), ctx_->session_dir);
    live_.reset();
    return {{"type", "ack"},
            {"for", "finish"},
            {"session", record.id},
            {"terminated", record.terminated},
            {"failed", record.failed},
            {"ticks", record.ticks.size()},
            {"scores", scores_json(*record.scores)}};
  }

  /// Persists whatever ran if the client goes away mid-episode.
  void close_episode() {
    if (!live_) return;
    live_->stop();
    try {
      finish_session(live_->session(), live_->id(), ctx_->session_dir);
    } catch (const std::exception&) {
    }
    live_.reset();
  }

  void reply(const json& j) {
    queue_->push(j.dump(), false);
    flush();
  }

  void flush() {
    if (writing_) return;
    if (!queue_->pop(out_)) return;
    writing_ = true;
    ws_.async_write(net::buffer(out_), beast::bind_front_handler(&WsConnection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    writing_ = false;
    if (ec) return;
    flush();
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<const ServerContext> ctx_;
  std::shared_ptr<PostGate> gate_;
  std::shared_ptr<FrameQueue> queue_;
  beast::flat_buffer in_;
  std::string out_;
  bool writing_ = false;
  std::unique_ptr<LiveSession> live_;
};

inline bool safe_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  for (unsigned char c : id) {
    if (!std::isalnum(c) && c != '-' && c != '_') return false;
  }
  return true;
}

inline http::response<http::string_body> route(const http::request<http::string_body>& req, const ServerContext& ctx) {
  auto respond = [&](http::status status, std::string body, const char* type = "application/json") {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::content_type, type);
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(false);
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  };
  if (req.method() != http::verb::get) return respond(http::status::method_not_allowed, R"({"error":"GET only"})");
  const std::string target(req.target());
  if (target == "/shapes") {
    json out = json::array();
    for (const auto& [name, shape] : ctx.shapes) {
      json wp = json::array();
      for (const auto& p : shape.waypoints) wp.push_back({p.x(), p.y()});
      out.push_back({{"name", name}, {"waypoints", wp}});
    }
    return respond(http::status::ok, out.dump());
  }
  if (target == "/styles") {
    json out = json::array();
    for (std::size_t i = 0; i < ctx.styles.size(); ++i) {
      const auto& s = ctx.styles[i];
      out.push_back({{"index", i},
                     {"label", s.label},
                     {"height", s.height},
                     {"pitch", s.pitch},
                     {"thumbnail", s.thumbnail}});
    }
    return respond(http::status::ok, out.dump());
  }
  const std::string prefix = "/sessions/";
  if (target.rfind(prefix, 0) == 0) {
    const std::string id = target.substr(prefix.size());
    if (!safe_id(id)) return respond(http::status::bad_request, R"({"error":"bad session id"})");
    std::ifstream in(ctx.session_dir / (id + ".json"));
    if (!in) return respond(http::status::not_found, R"({"error":"no such session"})");
    std::stringstream ss;
    ss << in.rdbuf();
    return respond(http::status::ok, ss.str());
  }
  return respond(http::status::not_found, R"({"error":"not found"})");
}

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, std::shared_ptr<const ServerContext> ctx, std::shared_ptr<PostGate> gate)
      : stream_(std::move(socket)), ctx_(std::move(ctx)), gate_(std::move(gate)) {}

  void run() {
    net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
  }

 private:
  void do_read() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      stream_.expires_never();
      std::make_shared<WsConnection>(stream_.release_socket(), ctx_, gate_)->run(std::move(req_));
      return;
    }
    res_ = std::make_shared<http::response<http::string_body>>(route(req_, *ctx_));
    http::async_write(stream_, *res_, beast::bind_front_handler(&HttpSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code, std::size_t) {
    beast::error_code ignored;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::shared_ptr<http::response<http::string_body>> res_;
  std::shared_ptr<const ServerContext> ctx_;
  std::shared_ptr<PostGate> gate_;
};

class RolloutServer {
 public:
  RolloutServer(ServerContext ctx, unsigned short port, const std::string& address = "127.0.0.1")
      : ctx_(std::make_shared<const ServerContext>(std::move(ctx))), acceptor_(net::make_strand(ioc_)) {
    const tcp::endpoint endpoint(net::ip::make_address(address), port);
    acceptor_.open(endpoint.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(endpoint);
    acceptor_.listen(net::socket_base::max_listen_connections);
    std::filesystem::create_directories(ctx_->session_dir);
  }

  ~RolloutServer() { stop(); }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  /// Serves on a background thread.
  void start() {
    do_accept();
    thread_ = std::thread([this] { ioc_.run(); });
  }

  /// Serves on the calling thread until stop().
  void run() {
    do_accept();
    ioc_.run();
  }

  void stop() {
    gate_->close();
    ioc_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  void do_accept() {
    acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
      if (!ec) std::make_shared<HttpSession>(std::move(socket), ctx_, gate_)->run();
      if (acceptor_.is_open()) do_accept();
    });
  }

  net::io_context ioc_{1};
  std::shared_ptr<const ServerContext> ctx_;
  std::shared_ptr<PostGate> gate_ = std::make_shared<PostGate>();
  tcp::acceptor acceptor_;
  std::thread thread_;
};

}  // namespace acord
