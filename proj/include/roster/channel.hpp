#pragma once

// Newline-delimited message channels over TCP sockets or a child process's
// stdin/stdout (POSIX).

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <memory>
#include <string>
#include <utility>

#include "roster/core.hpp"

namespace roster {

struct ChannelError : Error {
  using Error::Error;
};

class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void send_line(const std::string& line) = 0;
  /// Next line without its terminator; throws ChannelError on timeout or EOF.
  virtual std::string recv_line(std::chrono::milliseconds timeout) = 0;
};

namespace detail {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

inline void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
#ifdef MSG_NOSIGNAL
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == ENOTSOCK) {
      const ssize_t m = ::write(fd, data.data() + off, data.size() - off);
      if (m < 0) {
        if (errno == EINTR) continue;
        throw ChannelError(errno_text("write"));
      }
      off += static_cast<std::size_t>(m);
      continue;
    }
#else
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
#endif
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ChannelError(errno_text("send"));
    }
    off += static_cast<std::size_t>(n);
  }
}

/// Buffered line reader over a file descriptor.
class LineReader {
 public:
  std::string next(int fd, std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      const auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw ChannelError("timed out waiting for a reply");
      pollfd p{fd, POLLIN, 0};
      const int r = ::poll(&p, 1, static_cast<int>(left.count()));
      if (r < 0) {
        if (errno == EINTR) continue;
        throw ChannelError(errno_text("poll"));
      }
      if (r == 0) throw ChannelError("timed out waiting for a reply");
      char chunk[65536];
      const ssize_t n = ::read(fd, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw ChannelError(errno_text("read"));
      }
      if (n == 0) throw ChannelError("connection closed by peer");
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  std::string buf_;
};

}  // namespace detail

class TcpChannel final : public LineChannel {
 public:
  TcpChannel(const std::string& host, const std::string& port, std::chrono::milliseconds timeout) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0)
      throw ChannelError("resolve " + host + ": " + ::gai_strerror(rc));
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);
    std::string last_error = "no address";
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      detail::Fd fd(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
      if (!fd) continue;
      const int flags = ::fcntl(fd.get(), F_GETFL, 0);
      ::fcntl(fd.get(), F_SETFL, flags | O_NONBLOCK);
      int rc = ::connect(fd.get(), ai->ai_addr, ai->ai_addrlen);
      if (rc < 0 && errno == EINPROGRESS) {
        pollfd p{fd.get(), POLLOUT, 0};
        rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (rc == 0) {
          last_error = "connect timed out";
          continue;
        }
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        errno = err;
      }
      if (rc < 0) {
        last_error = detail::errno_text("connect");
        continue;
      }
      ::fcntl(fd.get(), F_SETFL, flags);
      int one = 1;
      ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      fd_ = std::move(fd);
      return;
    }
    throw ChannelError(host + ":" + port + ": " + last_error);
  }

  /// Wraps an already connected socket.
  explicit TcpChannel(int connected_fd) : fd_(connected_fd) {}

  void send_line(const std::string& line) override { detail::write_all(fd_.get(), line + "\n"); }
  std::string recv_line(std::chrono::milliseconds timeout) override { return reader_.next(fd_.get(), timeout); }

 private:
  detail::Fd fd_;
  detail::LineReader reader_;
};

/// Runs `/bin/sh -c command` and speaks over its stdin/stdout.
class ProcessChannel final : public LineChannel {
 public:
  explicit ProcessChannel(const std::string& command) {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) < 0) throw ChannelError(detail::errno_text("pipe"));
    if (::pipe(from_child) < 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw ChannelError(detail::errno_text("pipe"));
    }
    pid_ = ::fork();
    if (pid_ < 0) throw ChannelError(detail::errno_text("fork"));
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_ = detail::Fd(to_child[1]);
    out_ = detail::Fd(from_child[0]);
    ::signal(SIGPIPE, SIG_IGN);
  }

  ~ProcessChannel() override {
    in_.reset();
    out_.reset();
    if (pid_ > 0) {
      int status = 0;
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
        ::usleep(10000);
      }
      ::kill(pid_, SIGTERM);
      ::waitpid(pid_, &status, 0);
    }
  }

  void send_line(const std::string& line) override { detail::write_all(in_.get(), line + "\n"); }
  std::string recv_line(std::chrono::milliseconds timeout) override { return reader_.next(out_.get(), timeout); }

 private:
  pid_t pid_ = -1;
  detail::Fd in_;
  detail::Fd out_;
  detail::LineReader reader_;
};

inline std::unique_ptr<LineChannel> open_channel(const std::string& endpoint, std::chrono::milliseconds timeout) {
  if (endpoint.rfind("exec:", 0) == 0) return std::make_unique<ProcessChannel>(endpoint.substr(5));
  std::string addr = endpoint;
  if (addr.rfind("tcp://", 0) == 0) addr = addr.substr(6);
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size())
    throw ConfigurationError("endpoint must be host:port, tcp://host:port or exec:<command>: " + endpoint);
  std::string host = addr.substr(0, colon);
  if (host.size() > 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  return std::make_unique<TcpChannel>(host, addr.substr(colon + 1), timeout);
}

/// Listening TCP socket on the loopback interface; used by protocol stubs.
class TcpListener {
 public:
  /// Port 0 picks an ephemeral port.
  explicit TcpListener(int port = 0) : fd_(::socket(AF_INET, SOCK_STREAM, 0)) {
    if (!fd_) throw ChannelError(detail::errno_text("socket"));
    int one = 1;
    ::setsockopt(fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    a.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(fd_.get(), reinterpret_cast<sockaddr*>(&a), sizeof a) < 0)
      throw ChannelError(detail::errno_text("bind"));
    if (::listen(fd_.get(), 8) < 0) throw ChannelError(detail::errno_text("listen"));
    socklen_t len = sizeof a;
    ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&a), &len);
    port_ = ntohs(a.sin_port);
  }

  int port() const noexcept { return port_; }

  /// Blocks until a client connects or `timeout` elapses (then returns null).
  std::unique_ptr<TcpChannel> accept(std::chrono::milliseconds timeout) {
    pollfd p{fd_.get(), POLLIN, 0};
    if (::poll(&p, 1, static_cast<int>(timeout.count())) <= 0) return nullptr;
    const int c = ::accept(fd_.get(), nullptr, nullptr);
    if (c < 0) throw ChannelError(detail::errno_text("accept"));
    return std::make_unique<TcpChannel>(c);
  }

 private:
  detail::Fd fd_;
  int port_ = 0;
};

}  // namespace roster
