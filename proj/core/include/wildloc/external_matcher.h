#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "wildloc/features.h"

namespace wildloc {

// Handshake line every bridge prints before serving requests.
inline constexpr std::string_view kMatcherHandshake = "wildloc-matcher v1";
inline constexpr int kMatcherProtocolVersion = 1;

// Client side of the match-exchange protocol: a child process started with
// `/bin/sh -c <command>` that answers one JSON line per JSON request line.
//
//   request:  {"v":1,"a":"<path>","b":"<path>"}
//   response: {"status":"ok","matches":[[ax,ay,bx,by,c],...]}
//             {"status":"error","message":"<text>"}
//
// Requests on one client are serialized. Throws
// kExternalMatcherUnavailable when the process cannot be started or does
// not complete the handshake.
class ExternalMatcher {
 public:
  explicit ExternalMatcher(
      const std::string& command,
      std::chrono::milliseconds timeout = std::chrono::minutes(5));
  ~ExternalMatcher();

  ExternalMatcher(const ExternalMatcher&) = delete;
  ExternalMatcher& operator=(const ExternalMatcher&) = delete;

  // Raw protocol exchange on two files. An in-band error response raises
  // kExternalMatcherError carrying the bridge's message; the client stays
  // usable afterwards.
  std::vector<MatchPair> MatchFiles(const std::filesystem::path& a,
                                    const std::filesystem::path& b);

  // Matches two images, writing temporary PNGs for any image without a
  // `source` file. Matches whose A point falls on an invalid mask pixel or
  // outside either image are dropped.
  std::vector<MatchPair> Match(const MatchImage& a, const MatchImage& b);

 private:
  void Shutdown();
  std::string ReadLine();
  void WriteLine(const std::string& line);

  std::mutex mutex_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::chrono::milliseconds timeout_;
};

// Fixed-size pool of bridge processes for parallel per-tile matching.
class ExternalMatcherPool {
 public:
  ExternalMatcherPool(const std::string& command, int size);

  class Lease {
   public:
    Lease(ExternalMatcherPool* pool, ExternalMatcher* matcher)
        : pool_(pool), matcher_(matcher) {}
    Lease(Lease&& other) noexcept
        : pool_(other.pool_), matcher_(other.matcher_) {
      other.pool_ = nullptr;
    }
    Lease(const Lease&) = delete;
    Lease& operator=(const Lease&) = delete;
    Lease& operator=(Lease&&) = delete;
    ~Lease() {
      if (pool_ != nullptr) pool_->Release(matcher_);
    }
    ExternalMatcher& operator*() const { return *matcher_; }
    ExternalMatcher* operator->() const { return matcher_; }

   private:
    ExternalMatcherPool* pool_;
    ExternalMatcher* matcher_;
  };

  Lease Acquire();

 private:
  void Release(ExternalMatcher* matcher);

  std::vector<std::unique_ptr<ExternalMatcher>> matchers_;
  std::vector<ExternalMatcher*> idle_;
  std::mutex mutex_;
  std::condition_variable cv_;
};

}  // namespace wildloc
