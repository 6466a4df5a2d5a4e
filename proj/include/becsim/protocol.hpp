#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace becsim {

using Bit = std::uint8_t;

enum class Party { A, B };

inline const char* to_string(Party p) { return p == Party::A ? "A" : "B"; }

/// Raised when a caller breaks an operation's precondition (wrong speaker
/// parity, prefix past the end of the protocol, malformed serialization).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Packed bit sequence in transmission order.
class Transcript {
 public:
  Transcript() = default;
  static Transcript from_string(std::string_view bits);

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  Bit operator[](std::size_t i) const {
    return static_cast<Bit>((words_[i >> 6] >> (i & 63)) & 1u);
  }

  void push_back(Bit b);
  /// Copy of the first min(n, size()) bits.
  Transcript truncated(std::size_t n) const;
  bool is_prefix_of(const Transcript& other) const;

  std::string to_string() const;
  const std::vector<std::uint64_t>& words() const { return words_; }

  friend bool operator==(const Transcript& a, const Transcript& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

/// Opaque private input of one party.
class PartyInput {
 public:
  PartyInput() = default;
  explicit PartyInput(std::string bits);

  const std::string& bits() const { return bits_; }
  bool operator==(const PartyInput&) const = default;

 private:
  std::string bits_;
};

/// Deterministic noiseless alternating protocol of length n0. Alice speaks
/// at even prefix lengths, Bob at odd ones.
///
/// Two backings are supported. A table maps (input, prefix) to a bit, with
/// an optional wildcard input and an optional default bit for missing
/// prefixes. A keyed PRF mixes (seed, party, input, prefix) and needs no
/// storage, which is what the randomized tests use.
class ProtocolSpec {
 public:
  enum class Kind { Table, Prf };

  /// Table entry key: input string ("*" matches any input) and prefix.
  using TableKey = std::pair<std::string, std::string>;

  static ProtocolSpec prf(std::size_t n0, std::uint64_t seed);
  static ProtocolSpec table(std::size_t n0, std::map<TableKey, Bit> entries,
                            std::optional<Bit> default_bit = std::nullopt);

  std::size_t n0() const { return n0_; }
  Kind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }

  Bit next_bit(Party party, const PartyInput& input,
               const Transcript& prefix) const;

  nlohmann::json to_json() const;
  static ProtocolSpec from_json(const nlohmann::json& j);

 private:
  ProtocolSpec() = default;
  Bit prf_bit(Party party, const PartyInput& input,
              const Transcript& prefix) const;

  std::size_t n0_ = 0;
  Kind kind_ = Kind::Prf;
  std::uint64_t seed_ = 0;
  std::map<TableKey, Bit> entries_;
  std::optional<Bit> default_bit_;
};

/// The speaker of 1-based round r of an alternating protocol.
inline Party speaker_of_round(std::size_t r) {
  return (r % 2 == 1) ? Party::A : Party::B;
}

inline Bit next_bit(const ProtocolSpec& spec, Party party,
                    const PartyInput& input, const Transcript& prefix) {
  return spec.next_bit(party, input, prefix);
}

/// The noiseless transcript m^{n0}: bit r is produced by Alice for odd r and
/// by Bob for even r, each on the first r-1 bits.
Transcript reference_transcript(const ProtocolSpec& spec, const PartyInput& xA,
                                const PartyInput& xB);

/// PRF-backed spec reproducible from (n0, seed). Throws on n0 == 0.
ProtocolSpec make_random_spec(std::size_t n0, std::uint64_t seed);

}  // namespace becsim
