#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "lem/error.hpp"
#include "lem/net/message.hpp"

namespace lem::net {

/// Per-station receive buffer. Transports push whatever arrives, in any
/// order; protocol code takes messages for one (round, sender) at a time, so
/// early arrivals for later rounds simply wait here.
class Inbox {
 public:
  struct Key {
    std::uint64_t round;
    NodeId from;
    NodeId to;
    Op op;
    std::uint8_t tag;

    friend auto operator<=>(const Key& a, const Key& b) {
      return std::tie(a.round, a.from, a.to, a.op, a.tag) <=> std::tie(b.round, b.from, b.to, b.op, b.tag);
    }
    friend bool operator==(const Key&, const Key&) = default;
  };

  explicit Inbox(std::uint64_t session = 0) : session_(session) {}

  void push(Message m) {
    std::lock_guard lk(mu_);
    if (m.session != session_) {
      ++foreign_;
      return;
    }
    if (m.op == Op::kAbort) {
      if (!abort_reason_) {
        abort_reason_ = m.from.str() + " aborted: " + std::string(m.payload.begin(), m.payload.end());
      }
      cv_.notify_all();
      return;
    }
    Key k{m.round, m.from, m.to, m.op, m.tag};
    if (!buf_.emplace(k, std::move(m)).second) {
      ++duplicates_;
      return;
    }
    cv_.notify_all();
  }

  /// Blocks until the keyed message arrives; throws ProtocolAbort on timeout
  /// (naming the silent sender and round) or when any peer aborted.
  Message wait(const Key& key, std::chrono::milliseconds timeout) {
    std::unique_lock lk(mu_);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      auto it = buf_.find(key);
      if (it != buf_.end()) {
        Message m = std::move(it->second);
        buf_.erase(it);
        return m;
      }
      if (abort_reason_) throw PeerAbort(*abort_reason_);
      if (cv_.wait_until(lk, deadline) == std::cv_status::timeout) {
        if (buf_.count(key)) continue;
        throw ProtocolAbort("timeout waiting for " + key.from.str() + " in round " + std::to_string(key.round) +
                            " (" + op_name(key.op) + ")");
      }
    }
  }

  /// Removes and returns every buffered message for (round, op, to), ordered
  /// by sender. Does not block.
  std::vector<Message> drain(std::uint64_t round, Op op, NodeId to) {
    std::lock_guard lk(mu_);
    if (abort_reason_) throw PeerAbort(*abort_reason_);
    std::vector<Message> out;
    for (auto it = buf_.begin(); it != buf_.end();) {
      if (it->first.round == round && it->first.op == op && it->first.to == to) {
        out.push_back(std::move(it->second));
        it = buf_.erase(it);
      } else {
        ++it;
      }
    }
    return out;
  }

  bool has(const Key& key) const {
    std::lock_guard lk(mu_);
    return buf_.count(key) > 0;
  }

  void abort_locally(const std::string& reason) {
    std::lock_guard lk(mu_);
    if (!abort_reason_) abort_reason_ = reason;
    cv_.notify_all();
  }

  std::optional<std::string> abort_reason() const {
    std::lock_guard lk(mu_);
    return abort_reason_;
  }

  std::size_t duplicates() const {
    std::lock_guard lk(mu_);
    return duplicates_;
  }

  std::size_t pending() const {
    std::lock_guard lk(mu_);
    return buf_.size();
  }

 private:
  std::uint64_t session_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<Key, Message> buf_;
  std::optional<std::string> abort_reason_;
  std::size_t duplicates_ = 0;
  std::size_t foreign_ = 0;
};

}  // namespace lem::net
