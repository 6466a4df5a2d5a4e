#include "becsim/protocol.hpp"

#include "becsim/hash.hpp"

namespace becsim {

namespace {

constexpr const char* kWildcardInput = "*";

void check_bits(std::string_view bits, const char* what) {
  for (char c : bits) {
    if (c != '0' && c != '1') {
      throw ContractViolation(std::string(what) + " must be a 0/1 string, got '" +
                              std::string(bits) + "'");
    }
  }
}

}  // namespace

Transcript Transcript::from_string(std::string_view bits) {
  check_bits(bits, "transcript");
  Transcript t;
  for (char c : bits) t.push_back(c == '1' ? 1 : 0);
  return t;
}

void Transcript::push_back(Bit b) {
  if ((size_ & 63) == 0) words_.push_back(0);
  if (b & 1u) words_.back() |= std::uint64_t{1} << (size_ & 63);
  ++size_;
}

Transcript Transcript::truncated(std::size_t n) const {
  if (n >= size_) return *this;
  Transcript t;
  t.size_ = n;
  t.words_.assign(words_.begin(), words_.begin() + static_cast<long>((n + 63) / 64));
  if (n & 63) t.words_.back() &= (std::uint64_t{1} << (n & 63)) - 1;
  return t;
}

bool Transcript::is_prefix_of(const Transcript& other) const {
  if (size_ > other.size_) return false;
  const std::size_t full = size_ / 64;
  for (std::size_t w = 0; w < full; ++w) {
    if (words_[w] != other.words_[w]) return false;
  }
  if (size_ & 63) {
    const std::uint64_t mask = (std::uint64_t{1} << (size_ & 63)) - 1;
    if ((words_[full] ^ other.words_[full]) & mask) return false;
  }
  return true;
}

std::string Transcript::to_string() const {
  std::string s;
  s.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) s.push_back((*this)[i] ? '1' : '0');
  return s;
}

PartyInput::PartyInput(std::string bits) : bits_(std::move(bits)) {
  check_bits(bits_, "party input");
}

ProtocolSpec ProtocolSpec::prf(std::size_t n0, std::uint64_t seed) {
  if (n0 == 0) throw ContractViolation("protocol length n0 must be positive");
  ProtocolSpec s;
  s.n0_ = n0;
  s.kind_ = Kind::Prf;
  s.seed_ = seed;
  return s;
}

ProtocolSpec ProtocolSpec::table(std::size_t n0, std::map<TableKey, Bit> entries,
                                 std::optional<Bit> default_bit) {
  if (n0 == 0) throw ContractViolation("protocol length n0 must be positive");
  for (const auto& [key, bit] : entries) {
    if (key.first != kWildcardInput) check_bits(key.first, "table input");
    check_bits(key.second, "table prefix");
    if (key.second.size() >= n0) {
      throw ContractViolation("table prefix '" + key.second +
                              "' is not shorter than n0");
    }
    if (bit > 1) throw ContractViolation("table bit must be 0 or 1");
  }
  if (default_bit && *default_bit > 1) {
    throw ContractViolation("default bit must be 0 or 1");
  }
  ProtocolSpec s;
  s.n0_ = n0;
  s.kind_ = Kind::Table;
  s.entries_ = std::move(entries);
  s.default_bit_ = default_bit;
  return s;
}

Bit ProtocolSpec::next_bit(Party party, const PartyInput& input,
                           const Transcript& prefix) const {
  if (prefix.size() >= n0_) {
    throw std::out_of_range("next_bit: prefix length " +
                            std::to_string(prefix.size()) +
                            " is past the protocol length " + std::to_string(n0_));
  }
  const bool alice_turn = prefix.size() % 2 == 0;
  if (alice_turn != (party == Party::A)) {
    throw ContractViolation(std::string("next_bit: party ") + to_string(party) +
                            " does not speak after a prefix of length " +
                            std::to_string(prefix.size()));
  }
  if (kind_ == Kind::Prf) return prf_bit(party, input, prefix);

  const std::string key = prefix.to_string();
  if (auto it = entries_.find({input.bits(), key}); it != entries_.end()) {
    return it->second;
  }
  if (auto it = entries_.find({kWildcardInput, key}); it != entries_.end()) {
    return it->second;
  }
  if (default_bit_) return *default_bit_;
  throw ContractViolation("protocol table has no entry for input '" +
                          input.bits() + "' and prefix '" + key + "'");
}

Bit ProtocolSpec::prf_bit(Party party, const PartyInput& input,
                          const Transcript& prefix) const {
  std::uint64_t h = mix64(seed_ ^ 0x5bd1e9955bd1e995ULL);
  h = hash_combine(h, party == Party::A ? 0xA : 0xB);
  h = hash_combine(h, input.bits().size());
  for (char c : input.bits()) h = hash_combine(h, static_cast<std::uint64_t>(c));
  h = hash_combine(h, prefix.size());
  for (std::uint64_t w : prefix.words()) h = hash_combine(h, w);
  return static_cast<Bit>(h >> 63);
}

nlohmann::json ProtocolSpec::to_json() const {
  nlohmann::json j;
  j["n0"] = n0_;
  if (kind_ == Kind::Prf) {
    j["kind"] = "prf";
    j["seed"] = seed_;
    return j;
  }
  j["kind"] = "table";
  auto entries = nlohmann::json::array();
  for (const auto& [key, bit] : entries_) {
    if (key.first == kWildcardInput) {
      entries.push_back({key.second, bit});
    } else {
      entries.push_back({key.first, key.second, bit});
    }
  }
  j["entries"] = std::move(entries);
  if (default_bit_) j["default"] = *default_bit_;
  return j;
}

ProtocolSpec ProtocolSpec::from_json(const nlohmann::json& j) {
  try {
    const auto n0 = j.at("n0").get<std::size_t>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "prf") return prf(n0, j.at("seed").get<std::uint64_t>());
    if (kind != "table") throw ContractViolation("unknown protocol kind '" + kind + "'");

    std::map<TableKey, Bit> entries;
    for (const auto& e : j.at("entries")) {
      if (e.size() == 2) {
        entries[{kWildcardInput, e[0].get<std::string>()}] = e[1].get<Bit>();
      } else if (e.size() == 3) {
        entries[{e[0].get<std::string>(), e[1].get<std::string>()}] = e[2].get<Bit>();
      } else {
        throw ContractViolation("table entry must be [prefix, bit] or [input, prefix, bit]");
      }
    }
    std::optional<Bit> def;
    if (j.contains("default")) def = j.at("default").get<Bit>();
    return table(n0, std::move(entries), def);
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("malformed protocol spec: ") + e.what());
  }
}

Transcript reference_transcript(const ProtocolSpec& spec, const PartyInput& xA,
                                const PartyInput& xB) {
  Transcript m;
  for (std::size_t r = 1; r <= spec.n0(); ++r) {
    const Party who = speaker_of_round(r);
    m.push_back(spec.next_bit(who, who == Party::A ? xA : xB, m));
  }
  return m;
}

ProtocolSpec make_random_spec(std::size_t n0, std::uint64_t seed) {
  return ProtocolSpec::prf(n0, seed);
}

}  // namespace becsim
