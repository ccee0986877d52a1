#include "socket.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>
#include <string>

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

namespace brsa::net {

namespace {

std::string errno_text(const std::string& what) { return what + ": " + std::strerror(errno); }

struct AddrInfo {
  addrinfo* head = nullptr;
  ~AddrInfo() {
    if (head) ::freeaddrinfo(head);
  }
};

void resolve(const proto::Endpoint& ep, bool passive, AddrInfo& out) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  const std::string port = std::to_string(ep.port);
  const char* host = ep.host.empty() ? nullptr : ep.host.c_str();
  if (const int rc = ::getaddrinfo(host, port.c_str(), &hints, &out.head); rc != 0)
    throw NetError("resolve " + proto::to_string(ep) + ": " + ::gai_strerror(rc));
}

}  // namespace

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.release();
  }
  return *this;
}

int Socket::release() {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Socket listen_tcp(const proto::Endpoint& ep, int backlog) {
  AddrInfo ai;
  resolve(ep, true, ai);
  std::string last = "no address";
  for (addrinfo* p = ai.head; p; p = p->ai_next) {
    Socket s(::socket(p->ai_family, p->ai_socktype | SOCK_CLOEXEC, p->ai_protocol));
    if (!s.valid()) {
      last = errno_text("socket");
      continue;
    }
    const int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(s.fd(), p->ai_addr, p->ai_addrlen) != 0) {
      last = errno_text("bind");
      continue;
    }
    if (::listen(s.fd(), backlog) != 0) {
      last = errno_text("listen");
      continue;
    }
    return s;
  }
  throw NetError("listen on " + proto::to_string(ep) + " failed (" + last + ")");
}

Socket connect_tcp(const proto::Endpoint& ep) {
  AddrInfo ai;
  resolve(ep, false, ai);
  std::string last = "no address";
  for (addrinfo* p = ai.head; p; p = p->ai_next) {
    Socket s(::socket(p->ai_family, p->ai_socktype | SOCK_CLOEXEC, p->ai_protocol));
    if (!s.valid()) {
      last = errno_text("socket");
      continue;
    }
    if (::connect(s.fd(), p->ai_addr, p->ai_addrlen) != 0) {
      last = errno_text("connect");
      continue;
    }
    set_nodelay(s);
    return s;
  }
  throw NetError("connect to " + proto::to_string(ep) + " failed (" + last + ")");
}

std::uint16_t local_port(const Socket& s) {
  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) throw NetError(errno_text("getsockname"));
  if (addr.ss_family == AF_INET) return ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  if (addr.ss_family == AF_INET6) return ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
  throw NetError("getsockname: unexpected address family");
}

void set_recv_timeout(const Socket& s, double seconds) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(seconds);
  tv.tv_usec = static_cast<suseconds_t>((seconds - std::floor(seconds)) * 1e6);
  ::setsockopt(s.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
}

void set_nodelay(const Socket& s) {
  const int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

void send_all(const Socket& s, std::span<const std::uint8_t> data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(s.fd(), data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetError(errno_text("send"));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::size_t recv_some(const Socket& s, std::uint8_t* buf, std::size_t cap) {
  for (;;) {
    const ssize_t n = ::recv(s.fd(), buf, cap, 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK) throw NetError("recv: timed out");
    throw NetError(errno_text("recv"));
  }
}

}  // namespace brsa::net
