#pragma once

#include "brsa/protocol.hpp"

#include <cstddef>
#include <cstdint>
#include <span>

namespace brsa::net {

class NetError : public Error {
 public:
  using Error::Error;
};

/// Owning POSIX socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release();
  void close();
  /// Wakes any thread blocked in accept or recv on this socket.
  void shutdown();

 private:
  int fd_ = -1;
};

Socket listen_tcp(const proto::Endpoint& ep, int backlog = 128);
Socket connect_tcp(const proto::Endpoint& ep);
std::uint16_t local_port(const Socket& s);
void set_recv_timeout(const Socket& s, double seconds);
void set_nodelay(const Socket& s);

/// Blocks until every byte is written; throws NetError on failure.
void send_all(const Socket& s, std::span<const std::uint8_t> data);
/// Returns the byte count, 0 on orderly close. Throws NetError on error or
/// receive timeout.
std::size_t recv_some(const Socket& s, std::uint8_t* buf, std::size_t cap);

}  // namespace brsa::net
