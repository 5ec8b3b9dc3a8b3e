#include "wildloc/external_matcher.h"

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <optional>

#include <json.hpp>

#include "wildloc/error.h"

extern char** environ;

namespace wildloc {
namespace {

using nlohmann::json;

// Removes the file on scope exit.
class TempPng {
 public:
  explicit TempPng(const GrayRaster& img) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("wildloc-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++) + ".png");
    WritePng(img, path_);
  }
  ~TempPng() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  TempPng(const TempPng&) = delete;
  TempPng& operator=(const TempPng&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

bool InBounds(const PixelPoint& p, const GrayRaster& img) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= img.width() &&
         p.y <= img.height();
}

}  // namespace

ExternalMatcher::ExternalMatcher(const std::string& command,
                                 std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  if (command.empty()) {
    throw Error(ErrorKind::kExternalMatcherUnavailable,
                "no matcher command configured");
  }
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0) {
    throw Error(ErrorKind::kExternalMatcherUnavailable, std::strerror(errno));
  }
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw Error(ErrorKind::kExternalMatcherUnavailable, std::strerror(errno));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
  posix_spawn_file_actions_addclose(&actions, out_pipe[0]);

  std::string sh = "/bin/sh";
  std::string flag = "-c";
  std::string cmd = command;
  char* argv[] = {sh.data(), flag.data(), cmd.data(), nullptr};
  pid_t pid = -1;
  const int rc =
      ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  if (rc != 0) {
    ::close(to_child_);
    ::close(from_child_);
    throw Error(ErrorKind::kExternalMatcherUnavailable,
                command + ": " + std::strerror(rc));
  }
  pid_ = pid;

  std::string hello;
  try {
    hello = ReadLine();
  } catch (const Error& e) {
    const std::string detail = command + ": " + e.detail();
    Shutdown();
    throw Error(ErrorKind::kExternalMatcherUnavailable, detail);
  }
  if (hello != kMatcherHandshake) {
    Shutdown();
    throw Error(ErrorKind::kExternalMatcherUnavailable,
                command + ": unexpected handshake '" + hello + "'");
  }
}

ExternalMatcher::~ExternalMatcher() { Shutdown(); }

void ExternalMatcher::Shutdown() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    // End-of-input asks the bridge to exit; give it a moment, then kill.
    for (int i = 0; i < 200; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      ::usleep(10000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::string ExternalMatcher::ReadLine() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      throw Error(ErrorKind::kExternalMatcherError, "timed out waiting for bridge");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::kExternalMatcherError, std::strerror(errno));
    }
    if (ready == 0) continue;
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::kExternalMatcherError, std::strerror(errno));
    }
    if (n == 0) {
      throw Error(ErrorKind::kExternalMatcherError, "bridge closed its output");
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void ExternalMatcher::WriteLine(const std::string& line) {
  // A dead bridge would raise SIGPIPE; block it for this thread and swallow
  // any pending instance so the failure surfaces as EPIPE instead.
  sigset_t pipe_set;
  sigset_t old_set;
  sigemptyset(&pipe_set);
  sigaddset(&pipe_set, SIGPIPE);
  pthread_sigmask(SIG_BLOCK, &pipe_set, &old_set);

  const std::string data = line + "\n";
  std::size_t off = 0;
  int err = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      err = errno;
      break;
    }
    off += static_cast<std::size_t>(n);
  }
  if (err == EPIPE) {
    const timespec zero{0, 0};
    sigtimedwait(&pipe_set, nullptr, &zero);
  }
  pthread_sigmask(SIG_SETMASK, &old_set, nullptr);
  if (err != 0) {
    throw Error(ErrorKind::kExternalMatcherError, std::strerror(err));
  }
}

std::vector<MatchPair> ExternalMatcher::MatchFiles(
    const std::filesystem::path& a, const std::filesystem::path& b) {
  std::lock_guard lock(mutex_);
  const json request = {
      {"v", kMatcherProtocolVersion}, {"a", a.string()}, {"b", b.string()}};
  WriteLine(request.dump());
  const std::string line = ReadLine();

  json response;
  try {
    response = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kExternalMatcherError,
                std::string("malformed response: ") + e.what());
  }
  if (!response.is_object() || !response.contains("status")) {
    throw Error(ErrorKind::kExternalMatcherError, "response without status");
  }
  if (response["status"] != "ok") {
    std::string message = "bridge error";
    if (response.contains("message") && response["message"].is_string()) {
      message = response["message"].get<std::string>();
    }
    throw Error(ErrorKind::kExternalMatcherError, message);
  }
  if (!response.contains("matches") || !response["matches"].is_array()) {
    throw Error(ErrorKind::kExternalMatcherError, "response without matches");
  }
  std::vector<MatchPair> pairs;
  pairs.reserve(response["matches"].size());
  for (const json& m : response["matches"]) {
    if (!m.is_array() || m.size() != 5) {
      throw Error(ErrorKind::kExternalMatcherError,
                  "match record is not [ax,ay,bx,by,c]");
    }
    double v[5];
    for (int i = 0; i < 5; ++i) {
      if (!m[i].is_number()) {
        throw Error(ErrorKind::kExternalMatcherError,
                    "non-numeric match field");
      }
      v[i] = m[i].get<double>();
      if (!std::isfinite(v[i])) {
        throw Error(ErrorKind::kExternalMatcherError, "non-finite match field");
      }
    }
    if (v[4] < 0.0 || v[4] > 1.0) {
      throw Error(ErrorKind::kExternalMatcherError,
                  "match confidence outside [0, 1]");
    }
    pairs.push_back({{v[0], v[1]}, {v[2], v[3]}, v[4]});
  }
  return pairs;
}

std::vector<MatchPair> ExternalMatcher::Match(const MatchImage& a,
                                              const MatchImage& b) {
  std::optional<TempPng> temp_a;
  std::optional<TempPng> temp_b;
  std::filesystem::path path_a = a.source;
  std::filesystem::path path_b = b.source;
  if (path_a.empty()) path_a = temp_a.emplace(*a.raster).path();
  if (path_b.empty()) path_b = temp_b.emplace(*b.raster).path();

  std::vector<MatchPair> pairs = MatchFiles(path_a, path_b);
  std::erase_if(pairs, [&](const MatchPair& m) {
    if (!InBounds(m.a, *a.raster) || !InBounds(m.b, *b.raster)) return true;
    if (a.mask == nullptr) return false;
    const int x = std::min(static_cast<int>(m.a.x), a.mask->width() - 1);
    const int y = std::min(static_cast<int>(m.a.y), a.mask->height() - 1);
    return !a.mask->valid(x, y);
  });
  return pairs;
}

ExternalMatcherPool::ExternalMatcherPool(const std::string& command,
                                         int size) {
  for (int i = 0; i < std::max(1, size); ++i) {
    matchers_.push_back(std::make_unique<ExternalMatcher>(command));
    idle_.push_back(matchers_.back().get());
  }
}

ExternalMatcherPool::Lease ExternalMatcherPool::Acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return !idle_.empty(); });
  ExternalMatcher* m = idle_.back();
  idle_.pop_back();
  return Lease(this, m);
}

void ExternalMatcherPool::Release(ExternalMatcher* matcher) {
  {
    std::lock_guard lock(mutex_);
    idle_.push_back(matcher);
  }
  cv_.notify_one();
}

}  // namespace wildloc
