#include "brsa/rsa.hpp"

#include "brsa/primes.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace brsa {

KeyPair::KeyPair(const BigInt& p, const BigInt& q) : p_(p), q_(q) {
  if (p == q) throw InvalidArgument("KeyPair: p and q must differ");
  if (!is_probable_prime(p) || !is_probable_prime(q))
    throw InvalidArgument("KeyPair: p and q must be prime");
  n_ = p * q;
  phi_ = (p - 1) * (q - 1);
  q_inv_ = invert(q, p);
}

void KeyPair::add_slot(const BigInt& e, const BigInt& d) {
  if (e < 3 || gcd(e, phi_) != 1)
    throw InvalidArgument("KeyPair: exponent " + e.get_str() + " is not coprime to phi");
  if ((e * d) % phi_ != 1)
    throw InvalidArgument("KeyPair: e*d != 1 (mod phi) for e=" + e.get_str());
  for (const auto& s : slots_) {
    if (gcd(s.e, e) != 1)
      throw InvalidArgument("KeyPair: exponents " + s.e.get_str() + " and " + e.get_str() +
                            " are not pairwise coprime");
  }
  KeySlot slot;
  slot.e = e;
  slot.d = d;
  slot.dp = d % (p_ - 1);
  slot.dq = d % (q_ - 1);
  slots_.push_back(std::move(slot));
}

KeyPair KeyPair::from_factors(const BigInt& p, const BigInt& q, std::span<const BigInt> exponents) {
  KeyPair key(p, q);
  for (const auto& e : exponents) {
    if (gcd(e, key.phi_) != 1)
      throw InvalidArgument("KeyPair: exponent " + e.get_str() + " is not coprime to phi");
    key.add_slot(e, invert(e, key.phi_));
  }
  return key;
}

KeyPair KeyPair::from_pairs(const BigInt& p, const BigInt& q,
                            std::span<const std::pair<BigInt, BigInt>> pairs) {
  KeyPair key(p, q);
  for (const auto& [e, d] : pairs) key.add_slot(e, d);
  return key;
}

const KeySlot& KeyPair::slot(std::size_t index) const {
  if (index >= slots_.size())
    throw InvalidArgument("slot index " + std::to_string(index) + " out of range (" +
                          std::to_string(slots_.size()) + " slots)");
  return slots_[index];
}

std::optional<std::size_t> KeyPair::find_slot(const BigInt& e) const {
  for (std::size_t i = 0; i < slots_.size(); ++i)
    if (slots_[i].e == e) return i;
  return std::nullopt;
}

void KeyPair::set_witnesses(std::optional<StrongWitness> p_w, std::optional<StrongWitness> q_w) {
  p_witness_ = std::move(p_w);
  q_witness_ = std::move(q_w);
}

bool operator==(const KeyPair& a, const KeyPair& b) {
  if (a.n_ != b.n_ || a.p_ != b.p_ || a.q_ != b.q_ || a.slots_.size() != b.slots_.size())
    return false;
  for (std::size_t i = 0; i < a.slots_.size(); ++i) {
    if (a.slots_[i].e != b.slots_[i].e || a.slots_[i].d != b.slots_[i].d) return false;
  }
  return true;
}

void require_pairwise_coprime(std::span<const BigInt> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      if (gcd(values[i], values[j]) != 1)
        throw InvalidArgument("exponents not pairwise coprime: " + values[i].get_str() + " and " +
                              values[j].get_str());
    }
  }
}

KeyPair generate_keypair(std::size_t bits, std::span<const BigInt> exponents, std::uint64_t seed) {
  if (bits < 16) throw InvalidArgument("generate_keypair: bits must be >= 16");
  if (exponents.empty()) throw InvalidArgument("generate_keypair: no exponents given");
  for (const auto& e : exponents) {
    if (e < 3 || mpz_even_p(e.get_mpz_t()))
      throw InvalidArgument("generate_keypair: exponent " + e.get_str() + " must be odd and >= 3");
  }
  require_pairwise_coprime(exponents);

  Rng rng(seed);
  const auto coprime_to_all = [&](const BigInt& cand) {
    const BigInt pm1 = cand - 1;
    for (const auto& e : exponents)
      if (gcd(e, pm1) != 1) return false;
    return true;
  };

  constexpr int kMaxRetries = 64;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    BigInt p = random_prime((bits + 1) / 2, rng, coprime_to_all);
    BigInt q = random_prime(bits / 2, rng, coprime_to_all);
    if (p == q) continue;
    if (p < q) std::swap(p, q);
    return KeyPair::from_factors(p, q, exponents);
  }
  throw GenerationError("generate_keypair: retry budget exhausted; the exponents may share a "
                        "factor with every candidate phi");
}

BigInt encrypt(const KeyPair& key, std::size_t slot, const BigInt& m) {
  if (m < 0 || m >= key.n()) throw RangeError("encrypt: message out of range [0, n)");
  return powm(m, key.slot(slot).e, key.n());
}

BigInt decrypt_conventional(const KeyPair& key, std::size_t slot, const BigInt& c) {
  if (c < 0 || c >= key.n()) throw RangeError("decrypt: ciphertext out of range [0, n)");
  const KeySlot& s = key.slot(slot);
  const BigInt m1 = powm(c % key.p(), s.dp, key.p());
  const BigInt m2 = powm(c % key.q(), s.dq, key.q());
  BigInt h = (key.q_inv() * (m1 - m2)) % key.p();
  if (h < 0) h += key.p();
  return m2 + h * key.q();
}

BigInt decrypt_direct(const KeyPair& key, std::size_t slot, const BigInt& c) {
  if (c < 0 || c >= key.n()) throw RangeError("decrypt: ciphertext out of range [0, n)");
  return powm(c, key.slot(slot).d, key.n());
}

void write_key_file(std::ostream& out, const KeyPair& key) {
  out << "# batch RSA key, " << key.modulus_bits() << " bits, " << key.slot_count() << " slot(s)\n";
  out << "n=" << to_hex(key.n()) << '\n';
  out << "p=" << to_hex(key.p()) << '\n';
  out << "q=" << to_hex(key.q()) << '\n';
  out << "phi=" << to_hex(key.phi()) << '\n';
  for (std::size_t i = 0; i < key.slot_count(); ++i) {
    out << 'e' << i << '=' << to_hex(key.slot(i).e) << '\n';
    out << 'd' << i << '=' << to_hex(key.slot(i).d) << '\n';
  }
  if (key.p_witness()) {
    out << "rp=" << to_hex(key.p_witness()->r) << '\n';
    out << "sp=" << to_hex(key.p_witness()->s) << '\n';
  }
  if (key.q_witness()) {
    out << "rq=" << to_hex(key.q_witness()->r) << '\n';
    out << "sq=" << to_hex(key.q_witness()->s) << '\n';
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyPair read_key_file(std::istream& in) {
  std::map<std::string, BigInt> fields;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("key file line " + std::to_string(line_no) + ": expected name=hex");
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      fields[name] = from_hex(value);
    } catch (const InvalidArgument& ex) {
      throw ConfigError("key file line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  for (const char* required : {"n", "p", "q"}) {
    if (!fields.count(required)) throw ConfigError(std::string("key file: missing field ") + required);
  }
  std::vector<std::pair<BigInt, BigInt>> pairs;
  for (std::size_t i = 0;; ++i) {
    const auto e = fields.find("e" + std::to_string(i));
    const auto d = fields.find("d" + std::to_string(i));
    if (e == fields.end() && d == fields.end()) break;
    if (e == fields.end() || d == fields.end())
      throw ConfigError("key file: slot " + std::to_string(i) + " needs both e and d");
    pairs.emplace_back(e->second, d->second);
  }
  if (pairs.empty()) throw ConfigError("key file: no exponent slots");

  try {
    KeyPair key = KeyPair::from_pairs(fields["p"], fields["q"], pairs);
    if (key.n() != fields["n"]) throw ConfigError("key file: n != p*q");
    if (fields.count("phi") && key.phi() != fields["phi"])
      throw ConfigError("key file: phi != (p-1)(q-1)");
    std::optional<StrongWitness> pw, qw;
    if (fields.count("rp") && fields.count("sp")) pw = StrongWitness{fields["rp"], fields["sp"]};
    if (fields.count("rq") && fields.count("sq")) qw = StrongWitness{fields["rq"], fields["sq"]};
    key.set_witnesses(pw, qw);
    return key;
  } catch (const InvalidArgument& ex) {
    throw ConfigError(std::string("key file: ") + ex.what());
  }
}

KeyPair load_key_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open key file " + path);
  return read_key_file(in);
}

void save_key_file(const std::string& path, const KeyPair& key) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write key file " + path);
  write_key_file(out, key);
}

}  // namespace brsa
