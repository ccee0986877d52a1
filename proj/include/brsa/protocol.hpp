// Wire frames between decryption clients and the batch server.
//
// Every integer is big-endian. A connection opens with a server HelloFrame
// naming the client's public exponent; the client then streams RequestFrames
// and the server answers each with a ResponseFrame carrying the same id.
// Plaintexts travel unencrypted: this is a benchmark harness.
#pragma once

#include "brsa/bigint.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace brsa::proto {

inline constexpr std::array<std::uint8_t, 4> kMagic = {0x42, 0x52, 0x53, 0x41};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::uint8_t kRequestType = 0x01;
inline constexpr std::uint8_t kResponseType = 0x02;

enum class Status : std::uint8_t { Ok = 0, Overloaded = 1, Malformed = 2 };

class ProtocolError : public Error {
 public:
  using Error::Error;
};

struct HelloFrame {
  std::uint16_t exponent_index = 0;
  std::vector<std::uint8_t> modulus;
  std::vector<std::uint8_t> exponent;

  static HelloFrame make(std::uint16_t index, const BigInt& n, const BigInt& e);
  BigInt n() const { return from_bytes(modulus.data(), modulus.size()); }
  BigInt e() const { return from_bytes(exponent.data(), exponent.size()); }
};

struct RequestFrame {
  std::uint64_t request_id = 0;
  std::vector<std::uint8_t> ciphertext;
};

struct ResponseFrame {
  std::uint64_t request_id = 0;
  Status status = Status::Ok;
  std::vector<std::uint8_t> plaintext;
};

std::vector<std::uint8_t> encode(const HelloFrame& f);
std::vector<std::uint8_t> encode(const RequestFrame& f);
std::vector<std::uint8_t> encode(const ResponseFrame& f);

/// Incremental decoders. Each returns nullopt while `buf` holds only part of a
/// frame; on success `consumed` is the frame length. A buffer that can never
/// become a valid frame throws ProtocolError.
std::optional<HelloFrame> decode_hello(std::span<const std::uint8_t> buf, std::size_t& consumed);
std::optional<RequestFrame> decode_request(std::span<const std::uint8_t> buf, std::size_t& consumed);
std::optional<ResponseFrame> decode_response(std::span<const std::uint8_t> buf, std::size_t& consumed);

/// `host:port`; the host may be empty (all interfaces) or a bracketed IPv6
/// literal.
struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};
Endpoint parse_endpoint(const std::string& text);
std::string to_string(const Endpoint& ep);

}  // namespace brsa::proto
