#include "loopback_server.hpp"

#include <cerrno>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "seqmc/error.hpp"

namespace seqmc::testing {

namespace {

bool write_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == ENOTSOCK) {
      const ssize_t m = ::write(fd, data.data() + sent, data.size() - sent);
      if (m <= 0) return false;
      sent += static_cast<std::size_t>(m);
      continue;
    }
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

bool claim_marker(const std::filesystem::path& marker) {
  if (std::filesystem::exists(marker)) return false;
  std::ofstream(marker) << "dropped\n";
  return true;
}

}  // namespace

TabularService tabular_service(std::shared_ptr<const TabularMLM> model, std::int64_t mask_id,
                               bool mask_in_vocab) {
  const auto v = static_cast<std::int64_t>(model->vocab().size());
  if (mask_id < 0 || mask_id > v) throw std::invalid_argument("mask_id must lie in [0, |V|]");
  if (!mask_in_vocab && mask_id != v) throw std::invalid_argument("an outside mask sits at |V|");
  const std::int64_t server_size = mask_in_vocab ? v + 1 : v;

  TabularService service;
  service.info = {protocol::kVersion, server_size, mask_id,
                  static_cast<std::int64_t>(model->length()), "tabular-loopback"};
  service.backend = [model, mask_id, server_size](const protocol::LogitsRequest& req) {
    if (req.masked.empty()) throw std::invalid_argument("no masked positions");
    const auto& vocab = model->vocab();
    std::vector<Token> tokens;
    std::vector<Position> masked;
    for (std::size_t i = 0; i < req.tokens.size(); ++i) {
      const auto id = req.tokens[i];
      if (id == mask_id) {
        tokens.push_back(0);
        masked.push_back(i);
      } else if (id < 0 || id >= server_size) {
        throw std::invalid_argument("token id " + std::to_string(id) + " out of range");
      } else {
        tokens.push_back(static_cast<Token>(id > mask_id ? id - 1 : id));
      }
    }
    std::vector<Position> requested;
    for (auto p : req.masked) {
      if (p < 0 || static_cast<std::size_t>(p) >= req.tokens.size()) {
        throw std::invalid_argument("masked position out of range");
      }
      if (!requested.empty() && static_cast<Position>(p) <= requested.back()) {
        throw std::invalid_argument("masked positions must be strictly ascending");
      }
      requested.push_back(static_cast<Position>(p));
    }
    if (requested != masked) throw std::invalid_argument("masked list disagrees with mask tokens");

    const MaskedView view(Sequence(tokens, vocab), masked, vocab);
    std::vector<std::vector<double>> rows;
    for (const auto& pl : model->positional_logits(view)) {
      std::vector<double> row;
      for (std::int64_t s = 0; s < server_size; ++s) {
        if (s == mask_id) {
          row.push_back(-1e4);
        } else {
          row.push_back(pl.logits[static_cast<std::size_t>(s > mask_id ? s - 1 : s)]);
        }
      }
      rows.push_back(std::move(row));
    }
    return rows;
  };
  return service;
}

std::vector<double> fixed_row(std::int64_t position, std::int64_t vocab_size) {
  constexpr double kPalette[] = {-0.0,
                                 std::numeric_limits<double>::denorm_min(),
                                 -3.0e-310,
                                 0.1,
                                 -1.0 / 3.0,
                                 1.7976931348623157e308,
                                 -2.5e-300,
                                 123456789.0};
  constexpr auto n = static_cast<std::int64_t>(std::size(kPalette));
  std::vector<double> row;
  for (std::int64_t w = 0; w < vocab_size; ++w) {
    const double base = kPalette[(position + w) % n];
    row.push_back(w % 2 == 0 ? base : std::nextafter(base, 1.0));
  }
  return row;
}

TabularService fixed_rows_service(std::int64_t vocab_size, std::int64_t max_length) {
  TabularService service;
  service.info = {protocol::kVersion, vocab_size, vocab_size, max_length, "fixed-rows"};
  service.backend = [vocab_size](const protocol::LogitsRequest& req) {
    if (req.masked.empty()) throw std::invalid_argument("no masked positions");
    std::vector<std::vector<double>> rows;
    for (auto p : req.masked) rows.push_back(fixed_row(p, vocab_size));
    return rows;
  };
  return service;
}

bool serve_connection(int read_fd, int write_fd, const protocol::ModelInfo& info,
                      const Backend& backend, const ServerFaults& faults, bool drop_this,
                      const std::atomic<bool>* stop) {
  std::string buffer;
  char chunk[4096];
  for (;;) {
    std::size_t nl;
    while ((nl = buffer.find('\n')) == std::string::npos) {
      if (stop != nullptr) {
        pollfd p{read_fd, POLLIN, 0};
        if (::poll(&p, 1, 20) == 0) {
          if (*stop) return true;
          continue;
        }
      }
      const ssize_t n = ::read(read_fd, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return true;
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
    const std::string line = buffer.substr(0, nl);
    buffer.erase(0, nl + 1);

    std::string reply;
    try {
      const auto message = protocol::decode(line);
      if (std::holds_alternative<protocol::Hello>(message)) {
        auto out = info;
        out.protocol_version = faults.protocol_version;
        reply = protocol::encode(out);
      } else if (const auto* req = std::get_if<protocol::LogitsRequest>(&message)) {
        if (drop_this) return false;
        if (faults.drop_once_marker && claim_marker(*faults.drop_once_marker)) return false;
        if (faults.garbage_logits) {
          reply = "this is not json";
        } else {
          reply = protocol::encode(
              protocol::LogitsResponse{req->id + (faults.wrong_id ? 1 : 0), backend(*req)});
        }
      } else {
        reply = protocol::encode(protocol::ErrorReply{"unexpected message kind"});
      }
    } catch (const std::exception& e) {
      reply = protocol::encode(protocol::ErrorReply{e.what()});
    }
    if (!write_all(write_fd, reply + "\n")) return true;
  }
}

TcpLoopbackServer::TcpLoopbackServer(TabularService service, ServerFaults faults)
    : service_(std::move(service)), faults_(std::move(faults)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket failed");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 8) != 0) {
    ::close(listen_fd_);
    throw std::runtime_error("bind/listen failed");
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  thread_ = std::thread([this] { run(); });
}

TcpLoopbackServer::~TcpLoopbackServer() {
  stop_ = true;
  thread_.join();
  ::close(listen_fd_);
}

std::string TcpLoopbackServer::endpoint() const {
  return "tcp://127.0.0.1:" + std::to_string(port_);
}

void TcpLoopbackServer::run() {
  while (!stop_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 20) <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    const std::size_t index = connections_++;
    serve_connection(fd, fd, service_.info, service_.backend, faults_,
                     index < faults_.drop_connections, &stop_);
    ::close(fd);
  }
}

}  // namespace seqmc::testing
