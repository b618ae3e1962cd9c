#include "alqa/wire.hpp"

#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>

#include "alqa/errors.hpp"

namespace alqa {

using nlohmann::json;

// ---------------------------------------------------------------- transports

SocketChannel::SocketChannel(int fd, std::chrono::milliseconds timeout)
    : fd_(fd), timeout_(timeout) {}

SocketChannel::~SocketChannel() { close_socket(); }

void SocketChannel::close_socket() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void SocketChannel::write_line(std::string_view line) {
  if (fd_ < 0) throw TransportError("channel is closed");
  std::string data(line);
  data += '\n';
  std::size_t sent = 0;
  while (sent < data.size()) {
    const auto n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("send failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> SocketChannel::read_line() {
  if (fd_ < 0) throw TransportError("channel is closed");
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(timeout_.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("poll failed: ") + std::strerror(errno));
    }
    if (ready == 0) throw TransportError("timed out waiting for the backend");
    char chunk[65536];
    const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("recv failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      return line;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

namespace {

class ChildProcessChannel final : public SocketChannel {
 public:
  ChildProcessChannel(int fd, pid_t pid) : SocketChannel(fd), pid_(pid) {}
  ~ChildProcessChannel() override {
    close_socket();  // the adapter sees end of stream and exits
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

 private:
  pid_t pid_;
};

}  // namespace

std::unique_ptr<LineChannel> spawn_process(const std::string& command) {
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, sv) != 0) {
    throw TransportError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    throw TransportError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::close(sv[0]);
    ::dup2(sv[1], STDIN_FILENO);
    ::dup2(sv[1], STDOUT_FILENO);
    ::close(sv[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(sv[1]);
  return std::make_unique<ChildProcessChannel>(sv[0], pid);
}

std::unique_ptr<LineChannel> connect_tcp(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw ArgumentError("expected host:port, got \"" + address + "\"");
  }
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &found); rc != 0) {
    throw TransportError("cannot resolve " + address + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (auto* ai = found; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) throw TransportError("cannot connect to " + address);
  return std::make_unique<SocketChannel>(fd);
}

// ---------------------------------------------------------------- encoding

json encode_distribution(const SpanDistribution& dist) {
  json offsets = json::array();
  for (const auto& r : dist.token_offsets) offsets.push_back({r.begin, r.end});
  return {{"start_probs", std::vector<double>(dist.start_probs.data(),
                                              dist.start_probs.data() + dist.start_probs.size())},
          {"end_probs", std::vector<double>(dist.end_probs.data(),
                                            dist.end_probs.data() + dist.end_probs.size())},
          {"token_offsets", offsets}};
}

SpanDistribution decode_distribution(const json& j) {
  const auto start = j.at("start_probs").get<std::vector<double>>();
  const auto end = j.at("end_probs").get<std::vector<double>>();
  SpanDistribution d;
  d.start_probs = Eigen::Map<const Eigen::VectorXd>(start.data(), static_cast<Eigen::Index>(start.size()));
  d.end_probs = Eigen::Map<const Eigen::VectorXd>(end.data(), static_cast<Eigen::Index>(end.size()));
  for (const auto& r : j.at("token_offsets")) {
    d.token_offsets.push_back({r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>()});
  }
  return d;
}

json encode_instance(const QAInstance& inst) {
  return {{"id", inst.id},
          {"question", inst.question},
          {"context", inst.context},
          {"answer", inst.answer_text},
          {"answer_start", inst.answer_start}};
}

QAInstance decode_instance(const json& j) {
  QAInstance inst;
  inst.id = j.at("id").get<std::string>();
  inst.question = j.at("question").get<std::string>();
  inst.context = j.at("context").get<std::string>();
  inst.answer_text = j.at("answer").get<std::string>();
  inst.answer_start = j.at("answer_start").get<std::size_t>();
  return inst;
}

// ---------------------------------------------------------------- client

WireBackend::WireBackend(std::unique_ptr<LineChannel> channel, std::string name)
    : channel_(std::move(channel)) {
  const auto info = call({{"op", "info"}});
  try {
    handle_ = {std::move(name), info.value("t", std::size_t{0}),
               info.at("dim").get<Eigen::Index>()};
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed info response: ") + e.what());
  }
  if (handle_.dim < 1) throw TransportError("backend reported a non-positive dimension");
}

void WireBackend::check_handle(const ModelHandle& m) const {
  if (m != handle_) throw ArgumentError("model handle does not name the backend's current state");
}

std::vector<json> WireBackend::exchange(std::vector<json> requests) {
  std::vector<std::int64_t> ids;
  ids.reserve(requests.size());
  for (auto& r : requests) {
    r["id"] = next_id_;
    ids.push_back(next_id_++);
    channel_->write_line(r.dump());
  }

  std::vector<json> out(requests.size());
  std::size_t missing = requests.size();
  auto place = [&](std::int64_t id, json&& j) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == id && out[i].is_null()) {
        out[i] = std::move(j);
        --missing;
        return true;
      }
    }
    return false;
  };
  for (auto it = early_.begin(); it != early_.end();) {
    if (place(it->first, std::move(it->second))) {
      it = early_.erase(it);
    } else {
      ++it;
    }
  }
  while (missing > 0) {
    auto line = channel_->read_line();
    if (!line) throw TransportError("backend closed the stream");
    json j;
    try {
      j = json::parse(*line);
    } catch (const json::parse_error& e) {
      throw TransportError(std::string("malformed response: ") + e.what());
    }
    if (!j.contains("id") || !j["id"].is_number_integer()) {
      throw TransportError("response without a usable id: " + line->substr(0, 200));
    }
    const auto id = j["id"].get<std::int64_t>();
    if (!place(id, std::move(j))) early_[id] = std::move(j);
  }

  for (auto& j : out) {
    if (auto err = j.find("error"); err != j.end()) {
      const std::string msg = err->is_string() ? err->get<std::string>() : err->dump();
      if (j.value("kind", "") == "argument") throw ArgumentError("backend: " + msg);
      throw TransportError("backend: " + msg);
    }
  }
  return out;
}

json WireBackend::call(json request) {
  std::vector<json> batch;
  batch.push_back(std::move(request));
  return std::move(exchange(std::move(batch)).front());
}

Embedding WireBackend::embed(const ModelHandle& m, std::string_view text) {
  check_handle(m);
  if (text.empty()) throw ArgumentError("cannot embed empty text");
  const auto r = call({{"op", "embed"}, {"text", text}});
  std::vector<double> v;
  try {
    v = r.at("vector").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed embed response: ") + e.what());
  }
  if (static_cast<Eigen::Index>(v.size()) != handle_.dim) {
    throw TransportError("embedding has dimension " + std::to_string(v.size()) + ", expected " +
                         std::to_string(handle_.dim));
  }
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

SpanDistribution WireBackend::predict(const ModelHandle& m, std::string_view question,
                                      std::string_view context) {
  check_handle(m);
  if (question.empty() || context.empty()) throw ArgumentError("question and context must be non-empty");
  const auto r = call({{"op", "predict"}, {"question", question}, {"context", context}});
  try {
    return decode_distribution(r);
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed predict response: ") + e.what());
  }
}

ModelHandle WireBackend::fine_tune(const ModelHandle& m, std::span<const QAInstance> labeled) {
  check_handle(m);
  if (labeled.empty()) throw ArgumentError("fine_tune needs a non-empty batch");
  json instances = json::array();
  for (const auto& inst : labeled) instances.push_back(encode_instance(inst));
  const auto r = call({{"op", "fine_tune"}, {"instances", std::move(instances)}});
  std::size_t t = 0;
  try {
    t = r.at("t").get<std::size_t>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed fine_tune response: ") + e.what());
  }
  if (t < handle_.t) throw TransportError("backend counter went backwards");
  handle_.t = t;
  return handle_;
}

// ---------------------------------------------------------------- server

json handle_request(Backend& backend, const json& request) {
  json response;
  response["id"] = request.contains("id") ? request["id"] : json(nullptr);
  try {
    const auto op = request.at("op").get<std::string>();
    const ModelHandle model = backend.current();
    if (op == "info") {
      response["dim"] = model.dim;
      response["t"] = model.t;
    } else if (op == "embed") {
      const auto v = backend.embed(model, request.at("text").get<std::string>());
      response["vector"] = std::vector<double>(v.data(), v.data() + v.size());
    } else if (op == "predict") {
      const auto d = backend.predict(model, request.at("question").get<std::string>(),
                                     request.at("context").get<std::string>());
      response.update(encode_distribution(d));
    } else if (op == "fine_tune") {
      std::vector<QAInstance> batch;
      for (const auto& j : request.at("instances")) batch.push_back(decode_instance(j));
      response["t"] = backend.fine_tune(model, batch).t;
    } else {
      throw ArgumentError("unknown op \"" + op + "\"");
    }
  } catch (const ArgumentError& e) {
    response = {{"id", response["id"]}, {"error", e.what()}, {"kind", "argument"}};
  } catch (const json::exception& e) {
    response = {{"id", response["id"]}, {"error", e.what()}, {"kind", "argument"}};
  } catch (const std::exception& e) {
    response = {{"id", response["id"]}, {"error", e.what()}, {"kind", "internal"}};
  }
  return response;
}

namespace {

std::string respond_to(Backend& backend, const std::string& line) {
  json request;
  try {
    request = json::parse(line);
  } catch (const json::parse_error& e) {
    return json{{"id", nullptr}, {"error", e.what()}, {"kind", "argument"}}.dump();
  }
  return handle_request(backend, request).dump();
}

}  // namespace

void serve(Backend& backend, LineChannel& channel) {
  while (auto line = channel.read_line()) {
    if (line->empty()) continue;
    channel.write_line(respond_to(backend, *line));
  }
}

void serve(Backend& backend, std::istream& in, std::ostream& out) {
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    out << respond_to(backend, line) << '\n';
    out.flush();
  }
}

}  // namespace alqa
