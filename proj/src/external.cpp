#include "borex/external.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <map>

#include <json.hpp>

namespace borex {

std::string base64_encode(const unsigned char* data, std::size_t len) {
  static const char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  for (std::size_t i = 0; i < len; i += 3) {
    const unsigned b0 = data[i];
    const unsigned b1 = i + 1 < len ? data[i + 1] : 0;
    const unsigned b2 = i + 2 < len ? data[i + 2] : 0;
    out.push_back(table[b0 >> 2]);
    out.push_back(table[((b0 & 0x3) << 4) | (b1 >> 4)]);
    out.push_back(i + 1 < len ? table[((b1 & 0xf) << 2) | (b2 >> 6)] : '=');
    out.push_back(i + 2 < len ? table[b2 & 0x3f] : '=');
  }
  return out;
}

ExternalClassifier::ExternalClassifier(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {}

ExternalClassifier::~ExternalClassifier() {
  try {
    shutdown();
  } catch (...) {
    // Destructor cannot propagate; shutdown() is the checked path.
  }
}

void ExternalClassifier::ensure_started() {
  if (child_pid_ >= 0) return;

  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
    throw ProtocolError("external classifier: pipe() failed");
  }
  const pid_t pid = fork();
  if (pid < 0) {
    throw ProtocolError("external classifier: fork() failed");
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  child_pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

std::string ExternalClassifier::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    const auto nl = read_buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = read_buffer_.substr(0, nl);
      read_buffer_.erase(0, nl + 1);
      return line;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      throw TimeoutError("external classifier: response timed out");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (rc == 0) {
      throw TimeoutError("external classifier: response timed out");
    }
    if (rc < 0) {
      throw ProtocolError("external classifier: poll() failed");
    }
    char buf[4096];
    const ssize_t n = read(from_child_, buf, sizeof(buf));
    if (n <= 0) {
      throw ProtocolError("external classifier: stream closed before all ids were answered");
    }
    read_buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

std::vector<double> ExternalClassifier::evaluate(std::span<const ImageVolume> batch,
                                                 const Label& label) {
  ensure_started();

  std::vector<std::uint64_t> ids;
  std::string requests;
  for (const auto& image : batch) {
    const std::uint64_t id = next_id_++;
    ids.push_back(id);
    nlohmann::json req;
    req["id"] = id;
    req["shape"] = {image.shape().frames, image.shape().height, image.shape().width,
                    image.channels()};
    req["tensor"] = base64_encode(reinterpret_cast<const unsigned char*>(image.data().data()),
                                  image.data().size() * sizeof(float));
    req["label"] = label.id;
    requests += req.dump();
    requests += '\n';
  }

  std::size_t written = 0;
  while (written < requests.size()) {
    const ssize_t n = write(to_child_, requests.data() + written, requests.size() - written);
    if (n <= 0) {
      throw ProtocolError("external classifier: write to child failed");
    }
    written += static_cast<std::size_t>(n);
  }

  std::map<std::uint64_t, double> answers;
  while (answers.size() < ids.size()) {
    const std::string line = read_line();
    if (line.empty()) continue;
    nlohmann::json resp;
    try {
      resp = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ProtocolError(std::string("external classifier: malformed response line: ") +
                          e.what());
    }
    if (!resp.contains("id") || !resp.contains("confidence")) {
      throw ProtocolError("external classifier: response missing id or confidence");
    }
    const std::uint64_t id = resp["id"].get<std::uint64_t>();
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
      throw ProtocolError("external classifier: response for unknown id " + std::to_string(id));
    }
    const double conf = resp["confidence"].get<double>();
    if (conf < 0.0 || conf > 1.0) {
      throw ProtocolError("external classifier: confidence out of [0,1] for id " +
                          std::to_string(id));
    }
    if (answers.count(id)) {
      throw ProtocolError("external classifier: duplicate response for id " + std::to_string(id));
    }
    answers[id] = conf;
  }

  std::vector<double> out;
  out.reserve(ids.size());
  for (std::uint64_t id : ids) {
    auto it = answers.find(id);
    if (it == answers.end()) {
      throw ProtocolError("external classifier: no response for id " + std::to_string(id));
    }
    out.push_back(it->second);
  }
  return out;
}

std::vector<Label> ExternalClassifier::label_set() const { return {}; }

void ExternalClassifier::shutdown() {
  if (child_pid_ < 0) return;
  close(to_child_);
  close(from_child_);
  to_child_ = from_child_ = -1;
  int status = 0;
  waitpid(child_pid_, &status, 0);
  child_pid_ = -1;
  if (WIFEXITED(status) && WEXITSTATUS(status) != 0) {
    throw NonZeroExit("external classifier exited with status " +
                      std::to_string(WEXITSTATUS(status)));
  }
  if (WIFSIGNALED(status)) {
    throw NonZeroExit("external classifier killed by signal " +
                      std::to_string(WTERMSIG(status)));
  }
}

}  // namespace borex
