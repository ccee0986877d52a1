#include "brsa/protocol.hpp"

#include <algorithm>
#include <charconv>

namespace brsa::proto {

namespace {

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u16(std::vector<std::uint8_t>& out, std::size_t v, const char* field) {
  if (v > 0xFFFF) throw ProtocolError(std::string(field) + " exceeds 65535 bytes");
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_bytes(std::vector<std::uint8_t>& out, const std::vector<std::uint8_t>& bytes, const char* field) {
  put_u16(out, bytes.size(), field);
  out.insert(out.end(), bytes.begin(), bytes.end());
}

// Bounds-checked cursor; `ok` goes false once a read runs past the end.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> buf) : buf_(buf) {}

  bool ok() const { return ok_; }
  std::size_t offset() const { return pos_; }

  std::uint8_t u8() {
    if (!need(1)) return 0;
    return buf_[pos_++];
  }
  std::uint16_t u16() {
    if (!need(2)) return 0;
    const auto v = static_cast<std::uint16_t>((buf_[pos_] << 8) | buf_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint64_t u64() {
    if (!need(8)) return 0;
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | buf_[pos_ + i];
    pos_ += 8;
    return v;
  }
  std::vector<std::uint8_t> bytes(std::size_t len) {
    if (!need(len)) return {};
    std::vector<std::uint8_t> out(buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + len));
    pos_ += len;
    return out;
  }

 private:
  bool need(std::size_t n) {
    if (!ok_ || buf_.size() - pos_ < n) ok_ = false;
    return ok_;
  }

  std::span<const std::uint8_t> buf_;
  std::size_t pos_ = 0;
  bool ok_ = true;
};

}  // namespace

HelloFrame HelloFrame::make(std::uint16_t index, const BigInt& n, const BigInt& e) {
  return HelloFrame{index, to_bytes(n), to_bytes(e)};
}

std::vector<std::uint8_t> encode(const HelloFrame& f) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put_u8(out, kVersion);
  put_u16(out, f.exponent_index, "exponent_index");
  put_bytes(out, f.modulus, "modulus");
  put_bytes(out, f.exponent, "exponent");
  return out;
}

std::vector<std::uint8_t> encode(const RequestFrame& f) {
  std::vector<std::uint8_t> out;
  out.reserve(11 + f.ciphertext.size());
  put_u8(out, kRequestType);
  put_u64(out, f.request_id);
  put_bytes(out, f.ciphertext, "ciphertext");
  return out;
}

std::vector<std::uint8_t> encode(const ResponseFrame& f) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + f.plaintext.size());
  put_u8(out, kResponseType);
  put_u64(out, f.request_id);
  put_u8(out, static_cast<std::uint8_t>(f.status));
  put_bytes(out, f.status == Status::Ok ? f.plaintext : std::vector<std::uint8_t>{}, "plaintext");
  return out;
}

std::optional<HelloFrame> decode_hello(std::span<const std::uint8_t> buf, std::size_t& consumed) {
  const std::size_t prefix = std::min(buf.size(), kMagic.size());
  if (!std::equal(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(prefix), kMagic.begin()))
    throw ProtocolError("hello: bad magic");
  Reader r(buf);
  r.bytes(kMagic.size());
  const std::uint8_t version = r.u8();
  if (r.ok() && version != kVersion) throw ProtocolError("hello: unsupported version " + std::to_string(version));
  HelloFrame f;
  f.exponent_index = r.u16();
  f.modulus = r.bytes(r.u16());
  f.exponent = r.bytes(r.u16());
  if (!r.ok()) return std::nullopt;
  consumed = r.offset();
  return f;
}

std::optional<RequestFrame> decode_request(std::span<const std::uint8_t> buf, std::size_t& consumed) {
  if (buf.empty()) return std::nullopt;
  if (buf[0] != kRequestType) throw ProtocolError("request: unknown frame type " + std::to_string(buf[0]));
  Reader r(buf);
  r.u8();
  RequestFrame f;
  f.request_id = r.u64();
  f.ciphertext = r.bytes(r.u16());
  if (!r.ok()) return std::nullopt;
  consumed = r.offset();
  return f;
}

std::optional<ResponseFrame> decode_response(std::span<const std::uint8_t> buf, std::size_t& consumed) {
  if (buf.empty()) return std::nullopt;
  if (buf[0] != kResponseType) throw ProtocolError("response: unknown frame type " + std::to_string(buf[0]));
  Reader r(buf);
  r.u8();
  ResponseFrame f;
  f.request_id = r.u64();
  const std::uint8_t status = r.u8();
  if (r.ok() && status > 2) throw ProtocolError("response: unknown status " + std::to_string(status));
  f.status = static_cast<Status>(status);
  f.plaintext = r.bytes(r.u16());
  if (!r.ok()) return std::nullopt;
  consumed = r.offset();
  return f;
}

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw ConfigError("endpoint '" + text + "' is not host:port");
  Endpoint ep;
  ep.host = text.substr(0, colon);
  if (ep.host.size() >= 2 && ep.host.front() == '[' && ep.host.back() == ']')
    ep.host = ep.host.substr(1, ep.host.size() - 2);
  const std::string port = text.substr(colon + 1);
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (port.empty() || ec != std::errc{} || ptr != port.data() + port.size() || value > 65535)
    throw ConfigError("endpoint '" + text + "' has an invalid port");
  ep.port = static_cast<std::uint16_t>(value);
  return ep;
}

std::string to_string(const Endpoint& ep) {
  const bool v6 = ep.host.find(':') != std::string::npos;
  return (v6 ? "[" + ep.host + "]" : ep.host) + ":" + std::to_string(ep.port);
}

}  // namespace brsa::proto
