#include "seqmc/transport.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "seqmc/error.hpp"

namespace seqmc {

namespace {

[[noreturn]] void connect_failure(const std::string& what) {
  throw Error(Errc::ConnectFailure, what);
}

[[noreturn]] void os_failure(const std::string& what) {
  connect_failure(what + ": " + std::strerror(errno));
}

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() > 0 ? static_cast<int>(left.count()) : 0;
}

void wait_ready(int fd, short events, Clock::time_point deadline, const char* what) {
  pollfd p{fd, events, 0};
  for (;;) {
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc > 0) return;
    if (rc == 0) connect_failure(std::string("timed out while ") + what);
    if (errno != EINTR) os_failure(std::string("poll failed while ") + what);
  }
}

// Writing to a closed pipe raises SIGPIPE; block it for this thread and
// swallow any pending instance so the library never changes the process-wide
// disposition.
class SigpipeGuard {
 public:
  SigpipeGuard() {
    sigset_t pipe_only;
    sigemptyset(&pipe_only);
    sigaddset(&pipe_only, SIGPIPE);
    sigset_t pending;
    sigpending(&pending);
    was_pending_ = sigismember(&pending, SIGPIPE) == 1;
    pthread_sigmask(SIG_BLOCK, &pipe_only, &old_);
  }
  ~SigpipeGuard() {
    if (!was_pending_) {
      sigset_t pipe_only;
      sigemptyset(&pipe_only);
      sigaddset(&pipe_only, SIGPIPE);
      const timespec zero{0, 0};
      while (sigtimedwait(&pipe_only, nullptr, &zero) > 0) {
      }
    }
    pthread_sigmask(SIG_SETMASK, &old_, nullptr);
  }
  SigpipeGuard(const SigpipeGuard&) = delete;
  SigpipeGuard& operator=(const SigpipeGuard&) = delete;

 private:
  sigset_t old_{};
  bool was_pending_ = false;
};

}  // namespace

FdTransport::~FdTransport() { close_fds(); }

void FdTransport::adopt(int read_fd, int write_fd) noexcept {
  read_fd_ = read_fd;
  write_fd_ = write_fd;
}

void FdTransport::close_fds() noexcept {
  if (read_fd_ >= 0) ::close(read_fd_);
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  read_fd_ = write_fd_ = -1;
}

void FdTransport::send_line(std::string_view line) {
  if (write_fd_ < 0) connect_failure("transport is closed");
  std::string data(line);
  data += '\n';
  const auto deadline = Clock::now() + timeout_;
  SigpipeGuard guard;
  std::size_t sent = 0;
  while (sent < data.size()) {
    wait_ready(write_fd_, POLLOUT, deadline, "sending");
    const ssize_t n = ::write(write_fd_, data.data() + sent, data.size() - sent);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      os_failure("write failed");
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string FdTransport::receive_line() {
  if (read_fd_ < 0) connect_failure("transport is closed");
  const auto deadline = Clock::now() + timeout_;
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    wait_ready(read_fd_, POLLIN, deadline, "waiting for a reply");
    char chunk[4096];
    const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
    if (n == 0) connect_failure("peer closed the connection");
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      os_failure("read failed");
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

namespace {

int connect_tcp(const std::string& host, const std::string& port, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &found); rc != 0) {
    connect_failure("cannot resolve " + host + ":" + port + ": " + ::gai_strerror(rc));
  }
  const auto deadline = Clock::now() + timeout;
  std::string last_error = "no addresses";
  for (addrinfo* a = found; a != nullptr; a = a->ai_next) {
    const int fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC | SOCK_NONBLOCK, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) {
      ::freeaddrinfo(found);
      return fd;
    }
    if (errno == EINPROGRESS) {
      pollfd p{fd, POLLOUT, 0};
      if (::poll(&p, 1, remaining_ms(deadline)) > 0) {
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        if (err == 0) {
          ::freeaddrinfo(found);
          return fd;
        }
        last_error = std::strerror(err);
      } else {
        last_error = "timed out";
      }
    } else {
      last_error = std::strerror(errno);
    }
    ::close(fd);
  }
  ::freeaddrinfo(found);
  connect_failure("cannot connect to " + host + ":" + port + ": " + last_error);
}

}  // namespace

TcpTransport::TcpTransport(const std::string& host, const std::string& port,
                           std::chrono::milliseconds timeout)
    : FdTransport(timeout) {
  const int fd = connect_tcp(host, port, timeout);
  adopt(fd, fd);
}

ProcessTransport::ProcessTransport(const std::string& command, std::chrono::milliseconds timeout)
    : FdTransport(timeout), child_(-1) {
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) os_failure("pipe failed");
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    os_failure("pipe failed");
  }
  child_ = ::fork();
  if (child_ < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
    os_failure("fork failed");
  }
  if (child_ == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  adopt(from_child[0], to_child[1]);
}

ProcessTransport::~ProcessTransport() {
  close_fds();
  if (child_ <= 0) return;
  // Give the child a moment to exit on EOF before forcing it.
  for (int i = 0; i < 50; ++i) {
    if (::waitpid(child_, nullptr, WNOHANG) == child_) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  ::kill(child_, SIGKILL);
  ::waitpid(child_, nullptr, 0);
}

std::unique_ptr<Transport> open_transport(const std::string& endpoint,
                                          std::chrono::milliseconds timeout) {
  constexpr std::string_view tcp = "tcp://";
  constexpr std::string_view exec = "exec:";
  if (endpoint.starts_with(tcp)) {
    const std::string rest = endpoint.substr(tcp.size());
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size()) {
      throw Error(Errc::ConfigInvalid, "endpoint '" + endpoint + "' needs tcp://host:port");
    }
    std::string host = rest.substr(0, colon);
    if (host.size() > 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    return std::make_unique<TcpTransport>(host, rest.substr(colon + 1), timeout);
  }
  if (endpoint.starts_with(exec) && endpoint.size() > exec.size()) {
    return std::make_unique<ProcessTransport>(endpoint.substr(exec.size()), timeout);
  }
  throw Error(Errc::ConfigInvalid,
              "endpoint '" + endpoint + "' must be tcp://host:port or exec:<command>");
}

}  // namespace seqmc
