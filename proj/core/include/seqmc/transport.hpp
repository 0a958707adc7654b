#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

#include <sys/types.h>

namespace seqmc {

/// Newline-delimited, blocking-with-deadline message channel. Every failure
/// (closed peer, timeout, OS error) is a ConnectFailure.
class Transport {
 public:
  virtual ~Transport() = default;

  /// Appends the newline.
  virtual void send_line(std::string_view line) = 0;
  virtual std::string receive_line() = 0;
};

/// Shared line buffering over a pair of file descriptors.
class FdTransport : public Transport {
 public:
  explicit FdTransport(std::chrono::milliseconds timeout) : timeout_(timeout) {}
  ~FdTransport() override;
  FdTransport(const FdTransport&) = delete;
  FdTransport& operator=(const FdTransport&) = delete;

  void send_line(std::string_view line) override;
  std::string receive_line() override;

 protected:
  /// Takes ownership; the same descriptor may serve both directions.
  void adopt(int read_fd, int write_fd) noexcept;
  void close_fds() noexcept;

 private:
  int read_fd_ = -1;
  int write_fd_ = -1;
  std::chrono::milliseconds timeout_;
  std::string buffer_;
};

class TcpTransport final : public FdTransport {
 public:
  /// Connects within `timeout`.
  TcpTransport(const std::string& host, const std::string& port, std::chrono::milliseconds timeout);
};

/// Runs `command` through /bin/sh and talks over its stdin/stdout. The child
/// is terminated on destruction.
class ProcessTransport final : public FdTransport {
 public:
  ProcessTransport(const std::string& command, std::chrono::milliseconds timeout);
  ~ProcessTransport() override;

 private:
  pid_t child_;
};

/// "tcp://host:port" or "exec:<shell command>". Anything else is
/// ConfigInvalid.
std::unique_ptr<Transport> open_transport(const std::string& endpoint,
                                          std::chrono::milliseconds timeout);

}  // namespace seqmc
