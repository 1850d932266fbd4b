#include "fedman/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "fedman/errors.hpp"

namespace fedman {

namespace {

std::string errno_text() { return std::strerror(errno); }

std::string type_name(MsgType t) {
  switch (t) {
    case MsgType::Broadcast: return "broadcast";
    case MsgType::ModelUpload: return "model upload";
    case MsgType::GradientUpload: return "gradient upload";
    case MsgType::Shutdown: return "shutdown";
  }
  return "unknown";
}

void check_reply(const WireFrame& reply, std::size_t client, std::uint32_t round, MsgType expected) {
  if (reply.type != expected || reply.round != round) {
    throw TransportError("client " + std::to_string(client) + " replied with " + type_name(reply.type) +
                         " for round " + std::to_string(reply.round) + ", expected " + type_name(expected) +
                         " for round " + std::to_string(round));
  }
}

addrinfo* resolve(const HostPort& hp, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(hp.port);
  const int rc = getaddrinfo(hp.host.empty() ? nullptr : hp.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) throw TransportError("cannot resolve " + hp.host + ": " + gai_strerror(rc));
  return res;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

InprocTransport::InprocTransport(std::vector<std::unique_ptr<ClientNode>> clients)
    : clients_(std::move(clients)) {
  if (clients_.empty()) throw InvalidArgument("InprocTransport: no clients");
}

void InprocTransport::broadcast(const WireFrame& frame) {
  if (shut_down_) throw TransportError("broadcast after shutdown");
  replies_.clear();
  replies_.reserve(clients_.size());
  for (auto& c : clients_) replies_.push_back(c->handle(frame));
}

std::vector<DenseMatrix> InprocTransport::gather(std::uint32_t round, MsgType expected) {
  if (replies_.size() != clients_.size()) throw TransportError("gather without a preceding broadcast");
  std::vector<DenseMatrix> out;
  out.reserve(replies_.size());
  for (std::size_t i = 0; i < replies_.size(); ++i) {
    check_reply(replies_[i], i, round, expected);
    out.push_back(std::move(replies_[i].payload));
  }
  replies_.clear();
  return out;
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

Socket::~Socket() {
  if (fd_ >= 0) ::close(fd_);
}

void Socket::send_all(std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError("send failed: " + errno_text());
    }
    sent += static_cast<std::size_t>(n);
  }
}

void Socket::recv_exact(std::span<std::uint8_t> out) {
  std::size_t got = 0;
  while (got < out.size()) {
    const ssize_t n = ::recv(fd_, out.data() + got, out.size() - got, 0);
    if (n == 0) throw TransportError("peer disconnected");
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError("recv failed: " + errno_text());
    }
    got += static_cast<std::size_t>(n);
  }
}

void Socket::send_frame(const WireFrame& frame) { send_all(encode_frame(frame)); }

WireFrame Socket::recv_frame() {
  std::uint8_t header_bytes[kFrameHeaderBytes];
  recv_exact(header_bytes);
  FrameHeader header{};
  try {
    header = decode_frame_header(header_bytes);
  } catch (const FormatError& e) {
    throw TransportError(std::string("malformed frame: ") + e.what());
  }
  std::vector<std::uint8_t> payload(header.payload_bytes());
  recv_exact(payload);
  return {header.type, header.round, decode_frame_payload(header, payload)};
}

HostPort parse_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw ConfigError("address must be host:port, got '" + address + "'");
  HostPort hp;
  hp.host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  char* end = nullptr;
  const unsigned long value = std::strtoul(port.c_str(), &end, 10);
  if (port.empty() || *end != '\0' || value > 65535) {
    throw ConfigError("invalid port in address '" + address + "'");
  }
  hp.port = static_cast<std::uint16_t>(value);
  return hp;
}

TcpServerTransport::TcpServerTransport(const std::string& address, std::size_t num_clients)
    : n_(num_clients) {
  if (n_ == 0) throw InvalidArgument("TcpServerTransport: no clients");
  const HostPort hp = parse_address(address);
  addrinfo* res = resolve(hp, true);
  Socket sock(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
  if (!sock.valid()) {
    freeaddrinfo(res);
    throw TransportError("socket failed: " + errno_text());
  }
  int one = 1;
  ::setsockopt(sock.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  const int rc = ::bind(sock.fd(), res->ai_addr, res->ai_addrlen);
  freeaddrinfo(res);
  if (rc != 0) throw TransportError("bind " + address + " failed: " + errno_text());
  if (::listen(sock.fd(), static_cast<int>(n_)) != 0) throw TransportError("listen failed: " + errno_text());
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(sock.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  listener_ = std::move(sock);
  clients_.resize(n_);
}

TcpServerTransport::~TcpServerTransport() {
  try {
    shutdown();
  } catch (...) {
  }
}

void TcpServerTransport::accept_clients() {
  std::size_t connected = 0;
  while (connected < n_) {
    Socket conn(::accept(listener_.fd(), nullptr, nullptr));
    if (!conn.valid()) {
      if (errno == EINTR) continue;
      throw TransportError("accept failed: " + errno_text());
    }
    set_nodelay(conn.fd());
    const WireFrame hello = conn.recv_frame();
    if (hello.type != MsgType::ModelUpload || hello.round != 0 || hello.payload.rows() != 1 ||
        hello.payload.cols() != 1) {
      throw TransportError("malformed client handshake");
    }
    const double id_value = hello.payload(0, 0);
    if (!(id_value >= 0.0) || id_value >= static_cast<double>(n_) || id_value != static_cast<double>(static_cast<std::size_t>(id_value))) {
      throw TransportError("client announced invalid id " + std::to_string(id_value));
    }
    const auto id = static_cast<std::size_t>(id_value);
    if (clients_[id].valid()) throw TransportError("duplicate client id " + std::to_string(id));
    clients_[id] = std::move(conn);
    ++connected;
  }
}

void TcpServerTransport::broadcast(const WireFrame& frame) {
  if (shut_down_) throw TransportError("broadcast after shutdown");
  const auto bytes = encode_frame(frame);
  for (std::size_t i = 0; i < n_; ++i) {
    if (!clients_[i].valid()) throw TransportError("client " + std::to_string(i) + " not connected");
    clients_[i].send_all(bytes);
  }
}

std::vector<DenseMatrix> TcpServerTransport::gather(std::uint32_t round, MsgType expected) {
  std::vector<DenseMatrix> out;
  out.reserve(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    WireFrame reply = clients_[i].recv_frame();
    check_reply(reply, i, round, expected);
    out.push_back(std::move(reply.payload));
  }
  return out;
}

void TcpServerTransport::shutdown() {
  if (shut_down_) return;
  shut_down_ = true;
  const auto bytes = encode_frame({MsgType::Shutdown, 0, {}});
  for (auto& c : clients_) {
    if (!c.valid()) continue;
    try {
      c.send_all(bytes);
    } catch (const TransportError&) {
      // Peer already gone.
    }
  }
  clients_.clear();
  listener_ = Socket();
}

void run_tcp_client(const std::string& address, std::size_t client_id, ClientNode& node, int connect_timeout_ms) {
  const HostPort hp = parse_address(address);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(connect_timeout_ms);
  Socket sock;
  while (true) {
    addrinfo* res = resolve(hp, false);
    Socket attempt(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
    const int rc = attempt.valid() ? ::connect(attempt.fd(), res->ai_addr, res->ai_addrlen) : -1;
    freeaddrinfo(res);
    if (rc == 0) {
      sock = std::move(attempt);
      break;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      throw TransportError("cannot connect to " + address + ": " + errno_text());
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  set_nodelay(sock.fd());
  sock.send_frame({MsgType::ModelUpload, 0, DenseMatrix(1, 1, static_cast<double>(client_id))});
  while (true) {
    const WireFrame frame = sock.recv_frame();
    if (frame.type == MsgType::Shutdown) return;
    if (frame.type != MsgType::Broadcast) {
      throw TransportError("client received unexpected " + type_name(frame.type) + " frame");
    }
    sock.send_frame(node.handle(frame));
  }
}

}  // namespace fedman
