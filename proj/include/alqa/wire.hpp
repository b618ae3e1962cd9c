#pragma once

// Backend wire protocol: newline-delimited JSON over a byte stream.
//
//   request  {"id": 7, "op": "embed",     "text": "..."}
//            {"id": 8, "op": "predict",   "question": "...", "context": "..."}
//            {"id": 9, "op": "fine_tune", "instances": [{"id", "question", "context",
//                                                        "answer", "answer_start"}, ...]}
//            {"id": 10, "op": "info"}
//   response {"id": 7, "vector": [...]}
//            {"id": 8, "start_probs": [...], "end_probs": [...], "token_offsets": [[s, e], ...]}
//            {"id": 9, "t": 3}
//            {"id": 10, "dim": 64, "t": 0}
//            {"id": n, "error": "...", "kind": "argument" | "internal"}
//
// Responses may arrive in any order; they are matched by id. Doubles are
// written in shortest round-trip form.

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "alqa/backend.hpp"

namespace alqa {

/// Bidirectional line transport.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  /// Throws TransportError if the peer is gone.
  virtual void write_line(std::string_view line) = 0;
  /// nullopt on end of stream; throws TransportError on timeout or I/O failure.
  virtual std::optional<std::string> read_line() = 0;
};

/// Line channel over a connected stream socket it owns.
class SocketChannel : public LineChannel {
 public:
  explicit SocketChannel(int fd, std::chrono::milliseconds timeout = std::chrono::minutes(10));
  ~SocketChannel() override;
  SocketChannel(const SocketChannel&) = delete;
  SocketChannel& operator=(const SocketChannel&) = delete;

  void write_line(std::string_view line) override;
  std::optional<std::string> read_line() override;

 protected:
  void close_socket();

 private:
  int fd_;
  std::chrono::milliseconds timeout_;
  std::string buffer_;
};

/// Runs `command` through /bin/sh with its stdin and stdout on a socket pair.
std::unique_ptr<LineChannel> spawn_process(const std::string& command);

/// Connects to "host:port".
std::unique_ptr<LineChannel> connect_tcp(const std::string& address);

nlohmann::json encode_distribution(const SpanDistribution& dist);
SpanDistribution decode_distribution(const nlohmann::json& j);
nlohmann::json encode_instance(const QAInstance& inst);
QAInstance decode_instance(const nlohmann::json& j);

/// Backend reached through the wire protocol.
class WireBackend final : public Backend {
 public:
  /// Sends an info request to learn the embedding width and counter.
  WireBackend(std::unique_ptr<LineChannel> channel, std::string name);

  ModelHandle current() const override { return handle_; }
  Embedding embed(const ModelHandle& m, std::string_view text) override;
  SpanDistribution predict(const ModelHandle& m, std::string_view question,
                           std::string_view context) override;
  ModelHandle fine_tune(const ModelHandle& m, std::span<const QAInstance> labeled) override;

  /// Sends every request (ids are assigned here), then collects the
  /// responses in request order whatever order they arrive in.
  std::vector<nlohmann::json> exchange(std::vector<nlohmann::json> requests);

 private:
  nlohmann::json call(nlohmann::json request);
  void check_handle(const ModelHandle& m) const;

  std::unique_ptr<LineChannel> channel_;
  ModelHandle handle_;
  std::int64_t next_id_ = 1;
  std::map<std::int64_t, nlohmann::json> early_;
};

/// Answers one request using `backend`'s current state.
nlohmann::json handle_request(Backend& backend, const nlohmann::json& request);

/// Serves requests until end of stream. Malformed lines get an error
/// response with a null id.
void serve(Backend& backend, LineChannel& channel);
void serve(Backend& backend, std::istream& in, std::ostream& out);

}  // namespace alqa
