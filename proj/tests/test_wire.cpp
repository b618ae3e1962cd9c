#include <doctest.h>

#include <deque>
#include <sstream>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "alqa/cli.hpp"
#include "alqa/errors.hpp"
#include "alqa/synthetic_backend.hpp"
#include "alqa/wire.hpp"
#include "fixtures.hpp"

using namespace alqa;
using nlohmann::json;

namespace {

// Scripted peer: answers each batch of writes from a queue of canned lines.
class ScriptedChannel final : public LineChannel {
 public:
  std::vector<std::string> written;
  std::deque<std::string> replies;

  void write_line(std::string_view line) override { written.emplace_back(line); }
  std::optional<std::string> read_line() override {
    if (replies.empty()) return std::nullopt;
    auto r = replies.front();
    replies.pop_front();
    return r;
  }
};

struct ServedPair {
  std::unique_ptr<WireBackend> client;
  std::thread server;
  SyntheticBackend* served = nullptr;
  std::unique_ptr<SyntheticBackend> owned;

  ~ServedPair() {
    client.reset();  // closes our end so the server sees end of stream
    if (server.joinable()) server.join();
  }
};

std::unique_ptr<ServedPair> serve_in_thread(std::uint64_t seed) {
  int fds[2];
  REQUIRE(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) == 0);
  auto pair = std::make_unique<ServedPair>();
  pair->owned = std::make_unique<SyntheticBackend>(seed);
  pair->served = pair->owned.get();
  pair->server = std::thread([backend = pair->served, fd = fds[1]] {
    SocketChannel ch(fd);
    serve(*backend, ch);
  });
  pair->client = std::make_unique<WireBackend>(std::make_unique<SocketChannel>(fds[0]), "wire:test");
  return pair;
}

void check_matches_local(Backend& remote, std::uint64_t seed) {
  SyntheticBackend local(seed);
  const auto pool = fixtures::topic_pool(12, 3, seed);
  auto rm = remote.current();
  auto lm = local.current();
  CHECK(rm.dim == lm.dim);
  CHECK(rm.t == 0);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (i % 4 == 0) {
      const std::vector<QAInstance> batch = {pool[i]};
      rm = remote.fine_tune(rm, batch);
      lm = local.fine_tune(lm, batch);
      CHECK(rm.t == lm.t);
    }
    // bitwise: doubles survive the round trip exactly
    CHECK(remote.embed(rm, pool[i].context) == local.embed(lm, pool[i].context));
    const auto a = remote.predict(rm, pool[i].question, pool[i].context);
    const auto b = local.predict(lm, pool[i].question, pool[i].context);
    CHECK(a.start_probs == b.start_probs);
    CHECK(a.end_probs == b.end_probs);
    CHECK(a.token_offsets == b.token_offsets);
  }
}

}  // namespace

TEST_CASE("distribution and instance encodings round-trip exactly") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.index(30));
    SpanDistribution d;
    d.start_probs = Eigen::VectorXd(n);
    d.end_probs = Eigen::VectorXd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      d.start_probs[i] = rng.uniform() / 3.0;
      d.end_probs[i] = std::ldexp(rng.uniform(), -static_cast<int>(rng.index(900)));
      d.token_offsets.push_back({static_cast<std::size_t>(3 * i), static_cast<std::size_t>(3 * i + 2)});
    }
    const auto back = decode_distribution(json::parse(encode_distribution(d).dump()));
    CHECK(back.start_probs == d.start_probs);
    CHECK(back.end_probs == d.end_probs);
    CHECK(back.token_offsets == d.token_offsets);
  }
  const auto inst = fixtures::make_instance("x\"1", "Wh\xC3\xA9re?", "Caf\xC3\xA9 is here.", "here");
  const auto back = decode_instance(json::parse(encode_instance(inst).dump()));
  CHECK(back == inst);
}

TEST_CASE("wire backend over a socket pair matches the in-process backend") {
  auto pair = serve_in_thread(11);
  check_matches_local(*pair->client, 11);
}

TEST_CASE("wire backend over a child process") {
  auto channel = spawn_process(std::string(ALQA_CLI_PATH) + " serve --backend synthetic:4");
  WireBackend remote(std::move(channel), "wire:cmd");
  check_matches_local(remote, 4);
}

TEST_CASE("wire backend over TCP") {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(listener >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  REQUIRE(::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  REQUIRE(::listen(listener, 1) == 0);
  socklen_t len = sizeof addr;
  REQUIRE(::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len) == 0);
  const int port = ntohs(addr.sin_port);

  SyntheticBackend served(8);
  std::thread server([&] {
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) return;
    SocketChannel ch(fd);
    serve(served, ch);
  });
  {
    auto remote = make_backend("wire:tcp:127.0.0.1:" + std::to_string(port));
    check_matches_local(*remote, 8);
  }
  server.join();
  ::close(listener);
}

TEST_CASE("responses are matched by id whatever their order") {
  auto ch = std::make_unique<ScriptedChannel>();
  auto* raw = ch.get();
  raw->replies.push_back(R"({"id":1,"dim":2,"t":0})");
  WireBackend b(std::move(ch), "scripted");
  CHECK(b.current().dim == 2);

  raw->replies.push_back(R"({"id":4,"vector":[4,4]})");
  raw->replies.push_back(R"({"id":2,"vector":[2,2]})");
  raw->replies.push_back(R"({"id":3,"vector":[3,3]})");
  const auto out = b.exchange({{{"op", "embed"}, {"text", "a"}}, {{"op", "embed"}, {"text", "b"}},
                               {{"op", "embed"}, {"text", "c"}}});
  REQUIRE(out.size() == 3);
  CHECK(out[0]["vector"][0] == 2);
  CHECK(out[1]["vector"][0] == 3);
  CHECK(out[2]["vector"][0] == 4);
  // requests carried the assigned ids in order
  CHECK(json::parse(raw->written[1])["id"] == 2);
  CHECK(json::parse(raw->written[3])["id"] == 4);

  SUBCASE("an early response for a later request is kept") {
    raw->replies.push_back(R"({"id":6,"vector":[6,6]})");
    raw->replies.push_back(R"({"id":5,"vector":[5,5]})");
    const auto first = b.exchange({{{"op", "embed"}, {"text", "d"}}});
    CHECK(first[0]["vector"][0] == 5);
    const auto second = b.exchange({{{"op", "embed"}, {"text", "e"}}});
    CHECK(second[0]["vector"][0] == 6);
  }
  SUBCASE("errors map to their kinds") {
    raw->replies.push_back(R"({"id":5,"error":"bad text","kind":"argument"})");
    CHECK_THROWS_AS(b.embed(b.current(), "x"), ArgumentError);
    raw->replies.push_back(R"({"id":6,"error":"gpu on fire","kind":"internal"})");
    CHECK_THROWS_AS(b.embed(b.current(), "x"), TransportError);
  }
  SUBCASE("wrong dimension is a transport error") {
    raw->replies.push_back(R"({"id":5,"vector":[1,2,3]})");
    CHECK_THROWS_AS(b.embed(b.current(), "x"), TransportError);
  }
  SUBCASE("garbage and end of stream are transport errors") {
    raw->replies.push_back("not json");
    CHECK_THROWS_AS(b.embed(b.current(), "x"), TransportError);
    CHECK_THROWS_AS(b.embed(b.current(), "x"), TransportError);
  }
}

TEST_CASE("an adapter that goes away leaves the handle unchanged") {
  // answers the info request, then exits
  auto ch = spawn_process("read line; echo '{\"id\":1,\"dim\":3,\"t\":0}'");
  WireBackend b(std::move(ch), "short-lived");
  const auto before = b.current();
  const std::vector<QAInstance> batch = {fixtures::make_instance("a", "Q?", "x y", "x")};
  CHECK_THROWS_AS(b.fine_tune(before, batch), TransportError);
  CHECK(b.current() == before);
}

TEST_CASE("stale handles are rejected before anything is sent") {
  auto pair = serve_in_thread(2);
  auto& b = *pair->client;
  const auto old = b.current();
  const std::vector<QAInstance> batch = {fixtures::make_instance("a", "Q?", "x y", "x")};
  b.fine_tune(old, batch);
  CHECK_THROWS_AS(b.predict(old, "Q?", "x y"), ArgumentError);
}

TEST_CASE("server side request handling") {
  SyntheticBackend s(1);
  SUBCASE("ids are echoed verbatim") {
    CHECK(handle_request(s, {{"id", 41}, {"op", "info"}})["id"] == 41);
    CHECK(handle_request(s, {{"id", "abc"}, {"op", "info"}})["id"] == "abc");
    const auto info = handle_request(s, {{"id", 1}, {"op", "info"}});
    CHECK(info["dim"] == 64);
    CHECK(info["t"] == 0);
  }
  SUBCASE("argument errors") {
    auto r = handle_request(s, {{"id", 2}, {"op", "embed"}, {"text", ""}});
    CHECK(r["kind"] == "argument");
    CHECK(r["id"] == 2);
    r = handle_request(s, {{"id", 3}, {"op", "teleport"}});
    CHECK(r["kind"] == "argument");
    r = handle_request(s, {{"id", 4}, {"op", "predict"}, {"question", "q"}});
    CHECK(r["kind"] == "argument");
    r = handle_request(s, {{"id", 5}, {"op", "fine_tune"}, {"instances", json::array()}});
    CHECK(r["kind"] == "argument");
  }
  SUBCASE("internal errors") {
    struct Broken final : Backend {
      ModelHandle current() const override { return {"b", 0, 1}; }
      Embedding embed(const ModelHandle&, std::string_view) override { throw std::runtime_error("boom"); }
      SpanDistribution predict(const ModelHandle&, std::string_view, std::string_view) override { return {}; }
      ModelHandle fine_tune(const ModelHandle& m, std::span<const QAInstance>) override { return m; }
    } broken;
    const auto r = handle_request(broken, {{"id", 6}, {"op", "embed"}, {"text", "x"}});
    CHECK(r["kind"] == "internal");
    CHECK(r["error"] == "boom");
  }
  SUBCASE("stream serving answers every line, including malformed ones") {
    std::istringstream in("{\"id\":1,\"op\":\"info\"}\n\n{broken\n{\"id\":2,\"op\":\"embed\",\"text\":\"hi\"}\n");
    std::ostringstream out;
    serve(s, in, out);
    std::istringstream lines(out.str());
    std::vector<json> got;
    for (std::string l; std::getline(lines, l);) got.push_back(json::parse(l));
    REQUIRE(got.size() == 3);
    CHECK(got[0]["id"] == 1);
    CHECK(got[1]["id"].is_null());
    CHECK(got[1]["kind"] == "argument");
    CHECK(got[2]["vector"].size() == 64);
  }
}

TEST_CASE("backend specs") {
  CHECK(make_backend("synthetic:3")->current().backend == "synthetic:3");
  CHECK_THROWS_AS(make_backend("synthetic:x"), ArgumentError);
  CHECK_THROWS_AS(make_backend("gpu:0"), ArgumentError);
  CHECK_THROWS_AS(make_backend("wire:tcp:nohostport"), ArgumentError);
  CHECK_THROWS_AS(make_backend("wire:tcp:127.0.0.1:1"), TransportError);
}
