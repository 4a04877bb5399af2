#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "lem/error.hpp"
#include "lem/net/inbox.hpp"
#include "lem/net/message.hpp"
#include "lem/net/registry.hpp"

namespace lem::net {

/// The destination station could not be reached (connection refused, marked
/// down, no address). Callers decide whether to retry or abort.
class Unreachable : public ProtocolAbort {
 public:
  using ProtocolAbort::ProtocolAbort;
};

/// A station's view of the network: send anywhere, receive into one inbox.
class Transport {
 public:
  virtual ~Transport() = default;

  /// Frames and sends; returns the number of bytes put on the wire.
  virtual std::size_t send(const Message& m) = 0;

  virtual Inbox& inbox() = 0;
};

// ---------------------------------------------------------------------------
// In-memory backend. Frames are still encoded and decoded so both backends
// see byte-identical traffic.

class MemoryHub {
 public:
  MemoryHub(RoleRegistry registry, std::uint64_t session) : registry_(std::move(registry)) {
    for (const auto& s : registry_.stations()) inboxes_.emplace(s, std::make_unique<Inbox>(session));
  }

  const RoleRegistry& registry() const { return registry_; }

  Inbox& inbox(const std::string& station) {
    auto it = inboxes_.find(station);
    if (it == inboxes_.end()) throw ConfigError("memory hub: unknown station " + station);
    return *it->second;
  }

  /// Simulates a station that never answers.
  void set_down(const std::string& station, bool down = true) {
    std::lock_guard lk(mu_);
    if (down) {
      down_.insert(station);
    } else {
      down_.erase(station);
    }
  }

  std::size_t deliver(const Message& m) {
    const std::string station = registry_.station_of(m.to);
    {
      std::lock_guard lk(mu_);
      if (down_.count(station)) throw Unreachable("station " + station + " is unreachable");
    }
    const std::vector<std::uint8_t> frame = encode_frame(m);
    inbox(station).push(decode_frame(frame));
    return frame.size();
  }

 private:
  RoleRegistry registry_;
  std::map<std::string, std::unique_ptr<Inbox>> inboxes_;
  std::mutex mu_;
  std::set<std::string> down_;
};

class MemoryTransport final : public Transport {
 public:
  MemoryTransport(MemoryHub& hub, std::string station) : hub_(hub), station_(std::move(station)) {}

  std::size_t send(const Message& m) override { return hub_.deliver(m); }

  Inbox& inbox() override { return hub_.inbox(station_); }

 private:
  MemoryHub& hub_;
  std::string station_;
};

// ---------------------------------------------------------------------------
// TCP backend. One listener per station; one outbound connection per
// destination station, opened lazily. Frames on a connection stay in order.
// No channel security: deploy behind TLS or a VPN.

class TcpTransport final : public Transport {
 public:
  struct Options {
    std::chrono::milliseconds connect_timeout{5000};
  };

  TcpTransport(RoleRegistry registry, std::string station, std::uint64_t session, Options opts)
      : registry_(std::move(registry)), station_(std::move(station)), inbox_(session), opts_(opts) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw ConfigError("tcp: socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = resolve(registry_.address(station_));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      const std::string err = std::strerror(errno);
      ::close(listen_fd_);
      throw ConfigError("tcp: cannot bind " + registry_.address(station_).str() + ": " + err);
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_port_ = ntohs(addr.sin_port);
    ::listen(listen_fd_, 64);
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  TcpTransport(RoleRegistry registry, std::string station, std::uint64_t session)
      : TcpTransport(std::move(registry), std::move(station), session, Options{}) {}

  ~TcpTransport() override { stop(); }

  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  std::uint16_t port() const { return bound_port_; }

  /// Peers' ports may only be known after they bind (port 0 configs).
  void update_registry(const RoleRegistry& reg) {
    std::lock_guard lk(out_mu_);
    registry_ = reg;
  }

  std::size_t send(const Message& m) override {
    const std::vector<std::uint8_t> frame = encode_frame(m);
    std::string target;
    Address addr;
    {
      std::lock_guard lk(out_mu_);
      target = registry_.station_of(m.to);
      addr = registry_.address(target);
    }
    if (target == station_) {
      inbox_.push(decode_frame(frame));
      return frame.size();
    }
    Conn& c = connection(target, addr);
    std::lock_guard lk(c.mu);
    write_all(c.fd, frame, target);
    return frame.size();
  }

  Inbox& inbox() override { return inbox_; }

  void stop() {
    if (stopping_.exchange(true)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable()) acceptor_.join();
    {
      std::lock_guard lk(in_mu_);
      for (int fd : inbound_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    for (auto& t : readers_) {
      if (t.joinable()) t.join();
    }
    {
      std::lock_guard lk(in_mu_);
      for (int fd : inbound_fds_) ::close(fd);
      inbound_fds_.clear();
    }
    std::lock_guard lk(out_mu_);
    for (auto& [name, c] : out_) ::close(c->fd);
    out_.clear();
  }

 private:
  struct Conn {
    int fd = -1;
    std::mutex mu;
  };

  static sockaddr_in resolve(const Address& a) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(a.port);
    if (::inet_pton(AF_INET, a.host.c_str(), &addr.sin_addr) != 1) {
      addrinfo hints{};
      hints.ai_family = AF_INET;
      addrinfo* res = nullptr;
      if (::getaddrinfo(a.host.c_str(), nullptr, &hints, &res) != 0 || !res) {
        throw ConfigError("tcp: cannot resolve host " + a.host);
      }
      addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
      ::freeaddrinfo(res);
    }
    return addr;
  }

  Conn& connection(const std::string& target, const Address& a) {
    std::lock_guard lk(out_mu_);
    auto it = out_.find(target);
    if (it != out_.end()) return *it->second;
    const sockaddr_in addr = resolve(a);
    const auto deadline = std::chrono::steady_clock::now() + opts_.connect_timeout;
    for (;;) {
      int fd = ::socket(AF_INET, SOCK_STREAM, 0);
      if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) {
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        auto c = std::make_unique<Conn>();
        c->fd = fd;
        Conn& ref = *c;
        out_.emplace(target, std::move(c));
        return ref;
      }
      ::close(fd);
      if (std::chrono::steady_clock::now() >= deadline || stopping_) {
        throw Unreachable("tcp: cannot connect to " + target + " at " + a.str());
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }

  static void write_all(int fd, const std::vector<std::uint8_t>& buf, const std::string& target) {
    std::size_t off = 0;
    while (off < buf.size()) {
      const ssize_t n = ::send(fd, buf.data() + off, buf.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Unreachable("tcp: send to " + target + " failed: " + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  static bool read_exact(int fd, std::uint8_t* p, std::size_t n) {
    std::size_t off = 0;
    while (off < n) {
      const ssize_t r = ::recv(fd, p + off, n - off, 0);
      if (r == 0) return false;
      if (r < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      off += static_cast<std::size_t>(r);
    }
    return true;
  }

  void accept_loop() {
    while (!stopping_) {
      pollfd p{listen_fd_, POLLIN, 0};
      const int rc = ::poll(&p, 1, 100);
      if (rc <= 0 || stopping_) continue;
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) continue;
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      std::lock_guard lk(in_mu_);
      inbound_fds_.push_back(fd);
      readers_.emplace_back([this, fd] { read_loop(fd); });
    }
  }

  void read_loop(int fd) {
    std::vector<std::uint8_t> frame;
    for (;;) {
      frame.resize(4);
      if (!read_exact(fd, frame.data(), 4)) return;
      const std::uint32_t len = frame_payload_len(frame);
      if (len > kMaxPayload) {
        inbox_.abort_locally("tcp: oversized frame from peer");
        return;
      }
      frame.resize(kFrameOverhead + len);
      if (!read_exact(fd, frame.data() + 4, frame.size() - 4)) return;
      try {
        inbox_.push(decode_frame(frame));
      } catch (const std::exception& e) {
        inbox_.abort_locally(std::string("tcp: bad frame: ") + e.what());
        return;
      }
    }
  }

  RoleRegistry registry_;
  std::string station_;
  Inbox inbox_;
  Options opts_;
  int listen_fd_ = -1;
  std::uint16_t bound_port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex in_mu_;
  std::vector<int> inbound_fds_;
  std::vector<std::thread> readers_;
  std::mutex out_mu_;
  std::map<std::string, std::unique_ptr<Conn>> out_;
};

}  // namespace lem::net
