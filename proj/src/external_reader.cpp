#include "spanforge/external_reader.hpp"

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include <netdb.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "spanforge/error.hpp"

namespace spanforge {
namespace {

using nlohmann::json;

std::string errno_text() { return std::strerror(errno); }

// Line framing over a stream socket. Writes use MSG_NOSIGNAL so a dead peer
// surfaces as an error instead of SIGPIPE.
class SocketTransport : public Transport {
 public:
  explicit SocketTransport(int fd, std::string peer) : fd_(fd), peer_(std::move(peer)) {}
  ~SocketTransport() override {
    if (fd_ >= 0) ::close(fd_);
  }

  std::string round_trip(std::string_view line) override {
    std::string out(line);
    out.push_back('\n');
    std::size_t sent = 0;
    while (sent < out.size()) {
      const auto n = ::send(fd_, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(peer_ + ": write failed: " + errno_text());
      }
      sent += static_cast<std::size_t>(n);
    }
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        auto response = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return response;
      }
      char chunk[65536];
      const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(peer_ + ": read failed: " + errno_text());
      }
      if (n == 0) throw TransportError(peer_ + ": connection closed by adapter");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  void close_socket() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_;
  std::string peer_;
  std::string buffer_;
};

class ProcessTransport final : public SocketTransport {
 public:
  ProcessTransport(int fd, pid_t pid, const std::string& command)
      : SocketTransport(fd, "adapter '" + command + "'"), pid_(pid) {}

  ~ProcessTransport() override {
    // Closing our end is end-of-input for the adapter; give it a moment to
    // exit cleanly before terminating it.
    close_socket();
    for (int i = 0; i < 200; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGTERM);
    ::waitpid(pid_, nullptr, 0);
  }

 private:
  pid_t pid_;
};

std::atomic<unsigned> g_dataset_counter{0};

}  // namespace

std::unique_ptr<Transport> spawn_process_transport(const std::string& command) {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw TransportError("socketpair failed: " + errno_text());
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw TransportError("fork failed: " + errno_text());
  }
  if (pid == 0) {
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fds[1]);
  return std::make_unique<ProcessTransport>(fds[0], pid, command);
}

std::unique_ptr<Transport> connect_tcp_transport(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw ValidationError("adapter address must be host:port, got '" + address + "'");
  }
  auto host = address.substr(0, colon);
  if (host.size() > 2 && host.front() == '[' && host.back() == ']') {
    host = host.substr(1, host.size() - 2);
  }
  const auto port = address.substr(colon + 1);

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &result); rc != 0) {
    throw TransportError("cannot resolve " + address + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no addresses";
  for (auto* ai = result; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) {
      last_error = errno_text();
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(result);
      return std::make_unique<SocketTransport>(fd, "adapter at " + address);
    }
    last_error = errno_text();
    ::close(fd);
  }
  ::freeaddrinfo(result);
  throw TransportError("cannot connect to " + address + ": " + last_error);
}

ExternalReader::ExternalReader(std::unique_ptr<Transport> transport)
    : transport_(std::move(transport)) {
  if (!transport_) throw ContractError("external reader needs a transport");
}

std::string ExternalReader::model_id(const ReaderModel& model) {
  if (model.kind != ReaderKind::External) {
    throw ContractError("external reader given a model of another kind");
  }
  try {
    return json::parse(model.state).at("model_id").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed external model state: ") + e.what());
  }
}

json ExternalReader::call(const json& request) const {
  std::string line;
  {
    std::lock_guard lock(mutex_);
    line = transport_->round_trip(request.dump());
  }
  json response;
  try {
    response = json::parse(line);
  } catch (const json::parse_error& e) {
    throw TransportError(std::string("adapter sent malformed JSON: ") + e.what());
  }
  if (!response.is_object() || !response.contains("ok") || !response["ok"].is_boolean()) {
    throw TransportError("adapter response lacks a boolean 'ok' field");
  }
  if (!response["ok"].get<bool>()) {
    const auto error = response.value("error", std::string("unspecified error"));
    throw TransportError("adapter error: " + error);
  }
  return response;
}

ReaderModel ExternalReader::pretrained(const TrainConfig& config) const {
  return ReaderModel{ReaderKind::External, json{{"model_id", kPretrainedId}}.dump(), config};
}

ReaderModel ExternalReader::train(const ReaderModel& init, const Dataset& data,
                                  const TrainConfig& config) const {
  const auto init_id = model_id(init);
  config.validate();
  if (!data.labeled() && !data.empty()) {
    throw ContractError("external reader can only train on labeled data");
  }
  if (data.empty()) return init;

  const auto path = std::filesystem::temp_directory_path() /
                    ("spanforge-train-" + std::to_string(::getpid()) + "-" +
                     std::to_string(g_dataset_counter.fetch_add(1)) + ".json");
  save_squad_json(data, path);
  nlohmann::ordered_json request;
  request["op"] = "train";
  request["dataset_path"] = path.string();
  request["config"] = json(config);
  request["language"] = language_code(data.language());
  if (init_id != kPretrainedId) request["init_model_id"] = init_id;

  json response;
  try {
    response = call(request);
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(path, ignored);
    throw;
  }
  std::error_code ignored;
  std::filesystem::remove(path, ignored);
  if (!response.contains("model_id") || !response["model_id"].is_string()) {
    throw TransportError("train response lacks a string 'model_id'");
  }
  return ReaderModel{ReaderKind::External,
                     json{{"model_id", response["model_id"].get<std::string>()}}.dump(), config};
}

SpanDistributions ExternalReader::predict(const ReaderModel& model, const Context& context,
                                          const Question& question, Language language) const {
  const PredictItem item{&context, &question};
  return predict_batch(model, std::span(&item, 1), language, 1).front();
}

std::vector<SpanDistributions> ExternalReader::predict_batch(const ReaderModel& model,
                                                             std::span<const PredictItem> items,
                                                             Language language, int) const {
  nlohmann::ordered_json request;
  request["op"] = "predict";
  request["model_id"] = model_id(model);
  request["language"] = language_code(language);
  auto& list = request["items"] = nlohmann::ordered_json::array();
  for (const auto& item : items) {
    list.push_back({{"context", item.context->text}, {"question", item.question->text}});
  }
  const auto response = call(request);
  if (!response.contains("results") || !response["results"].is_array() ||
      response["results"].size() != items.size()) {
    throw TransportError("predict response must carry one result per item");
  }
  std::vector<SpanDistributions> out;
  out.reserve(items.size());
  for (const auto& r : response["results"]) {
    try {
      auto d = span_distributions_from_json(r);
      check_distributions(d);
      out.push_back(std::move(d));
    } catch (const Error& e) {
      throw TransportError(std::string("adapter sent invalid distributions: ") + e.what());
    }
  }
  return out;
}

}  // namespace spanforge
