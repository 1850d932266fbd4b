#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedman/wire.hpp"

namespace fedman {

/// Client-side message handler: one reply frame per non-shutdown frame.
class ClientNode {
 public:
  virtual ~ClientNode() = default;
  virtual WireFrame handle(const WireFrame& frame) = 0;
};

/// Server-side view of the client population.
///
/// broadcast() delivers the same frame to every client; gather() blocks until
/// every client has replied and returns the payloads ordered by client id.
/// Replies must carry the expected round and message type.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::size_t num_clients() const = 0;
  virtual void broadcast(const WireFrame& frame) = 0;
  virtual std::vector<DenseMatrix> gather(std::uint32_t round, MsgType expected) = 0;
  /// Sends the shutdown frame. Idempotent.
  virtual void shutdown() = 0;
};

/// Loopback transport: clients live in this process and are driven
/// sequentially in ascending id order.
class InprocTransport final : public Transport {
 public:
  explicit InprocTransport(std::vector<std::unique_ptr<ClientNode>> clients);

  std::size_t num_clients() const override { return clients_.size(); }
  void broadcast(const WireFrame& frame) override;
  std::vector<DenseMatrix> gather(std::uint32_t round, MsgType expected) override;
  void shutdown() override { shut_down_ = true; }

  ClientNode& node(std::size_t i) { return *clients_.at(i); }

 private:
  std::vector<std::unique_ptr<ClientNode>> clients_;
  std::vector<WireFrame> replies_;
  bool shut_down_ = false;
};

/// Owning socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket();

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }

  void send_all(std::span<const std::uint8_t> bytes);
  void recv_exact(std::span<std::uint8_t> out);
  void send_frame(const WireFrame& frame);
  WireFrame recv_frame();

 private:
  int fd_ = -1;
};

struct HostPort {
  std::string host;
  std::uint16_t port;
};

/// "host:port"; the port may be 0 for an ephemeral listener.
HostPort parse_address(const std::string& address);

/// TCP server side. The constructor binds and listens; accept_clients()
/// blocks until all n clients have connected and identified themselves.
///
/// Handshake: each client first sends a ModelUpload frame with round 0 and a
/// 1x1 payload holding its client id.
class TcpServerTransport final : public Transport {
 public:
  TcpServerTransport(const std::string& address, std::size_t num_clients);
  ~TcpServerTransport() override;

  std::uint16_t port() const noexcept { return port_; }
  void accept_clients();

  std::size_t num_clients() const override { return n_; }
  void broadcast(const WireFrame& frame) override;
  std::vector<DenseMatrix> gather(std::uint32_t round, MsgType expected) override;
  void shutdown() override;

 private:
  std::size_t n_;
  std::uint16_t port_ = 0;
  Socket listener_;
  std::vector<Socket> clients_;  // indexed by client id
  bool shut_down_ = false;
};

/// Connects to the server (retrying for up to `connect_timeout_ms`), performs
/// the handshake and serves frames with `node` until a shutdown frame
/// arrives. Throws TransportError on disconnect or malformed frames.
void run_tcp_client(const std::string& address, std::size_t client_id, ClientNode& node,
                    int connect_timeout_ms = 10000);

}  // namespace fedman
