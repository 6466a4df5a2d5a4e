#include <gtest/gtest.h>

#include <random>
#include <map>
#include <string>

#include "becsim/protocol.hpp"

namespace becsim {
namespace {

// All prefixes of length < n0, each with the party that speaks after it.
std::vector<std::pair<Party, Transcript>> all_prefixes(std::size_t n0) {
  std::vector<std::pair<Party, Transcript>> out;
  for (std::size_t len = 0; len < n0; ++len) {
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << len); ++v) {
      Transcript t;
      for (std::size_t b = 0; b < len; ++b) t.push_back((v >> b) & 1u);
      out.emplace_back(len % 2 == 0 ? Party::A : Party::B, t);
    }
  }
  return out;
}

ProtocolSpec echo_spec() {
  // Alice sends the first bit of her input, Bob repeats what he received.
  return ProtocolSpec::table(2, {{{"0", ""}, 0}, {{"1", ""}, 1}, {{"*", "0"}, 0}, {{"*", "1"}, 1}});
}

TEST(TranscriptTest, PushIndexAndString) {
  Transcript t = Transcript::from_string("1011001");
  EXPECT_EQ(t.size(), 7u);
  EXPECT_EQ(t[0], 1);
  EXPECT_EQ(t[1], 0);
  EXPECT_EQ(t.to_string(), "1011001");
  EXPECT_THROW(Transcript::from_string("10x"), ContractViolation);
}

TEST(TranscriptTest, PrefixAndTruncationMatchStringSemantics) {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 500; ++iter) {
    std::string a, b;
    const std::size_t la = rng() % 150, lb = rng() % 150;
    for (std::size_t i = 0; i < la; ++i) a.push_back(rng() & 1 ? '1' : '0');
    // Half the time make b an extension of a.
    if (iter % 2 == 0) b = a;
    for (std::size_t i = 0; i < lb; ++i) b.push_back(rng() & 1 ? '1' : '0');
    const Transcript ta = Transcript::from_string(a), tb = Transcript::from_string(b);
    EXPECT_EQ(ta.is_prefix_of(tb), b.compare(0, a.size(), a) == 0 && a.size() <= b.size());
    const std::size_t cut = rng() % 160;
    EXPECT_EQ(tb.truncated(cut).to_string(), b.substr(0, std::min(cut, b.size())));
    EXPECT_EQ(tb.truncated(cut) == Transcript::from_string(b.substr(0, std::min(cut, b.size()))),
              true);
  }
}

TEST(ProtocolSpecTest, NextBitIsDeterministic) {
  const ProtocolSpec spec = make_random_spec(40, 5);
  const PartyInput x("0110");
  for (const auto& [who, prefix] : all_prefixes(10)) {
    EXPECT_EQ(spec.next_bit(who, x, prefix), spec.next_bit(who, x, prefix));
  }
}

TEST(ProtocolSpecTest, TableFirstBitOfInput) {
  const ProtocolSpec spec = echo_spec();
  EXPECT_EQ(next_bit(spec, Party::A, PartyInput("1"), Transcript{}), 1);
  EXPECT_EQ(next_bit(spec, Party::A, PartyInput("0"), Transcript{}), 0);
}

TEST(ProtocolSpecTest, PrfSeedsDisagreeOnAboutHalf) {
  const ProtocolSpec s1 = make_random_spec(64, 1001), s2 = make_random_spec(64, 2002);
  const PartyInput x("10");
  std::mt19937_64 rng(3);
  int differ = 0;
  const int n = 64;
  for (int i = 0; i < n; ++i) {
    Transcript prefix;
    const std::size_t len = rng() % 63;
    for (std::size_t b = 0; b < len; ++b) prefix.push_back(rng() & 1);
    const Party who = len % 2 == 0 ? Party::A : Party::B;
    differ += s1.next_bit(who, x, prefix) != s2.next_bit(who, x, prefix);
  }
  // Binomial(64, 1/2): mean 32, 3 sigma = 12.
  EXPECT_NEAR(differ, 32, 12);
}

TEST(ProtocolSpecTest, WrongSpeakerIsAContractViolation) {
  const ProtocolSpec spec = make_random_spec(8, 1);
  EXPECT_THROW(spec.next_bit(Party::B, PartyInput{}, Transcript{}), ContractViolation);
  EXPECT_THROW(spec.next_bit(Party::A, PartyInput{}, Transcript::from_string("1")),
               ContractViolation);
}

TEST(ProtocolSpecTest, PrefixPastEndIsOutOfRange) {
  const ProtocolSpec spec = make_random_spec(2, 1);
  EXPECT_THROW(spec.next_bit(Party::A, PartyInput{}, Transcript::from_string("10")),
               std::out_of_range);
}

TEST(ProtocolSpecTest, MissingTableEntryThrows) {
  const ProtocolSpec spec = ProtocolSpec::table(3, {{{"*", ""}, 1}});
  EXPECT_THROW(spec.next_bit(Party::B, PartyInput{}, Transcript::from_string("1")),
               ContractViolation);
  const ProtocolSpec with_default = ProtocolSpec::table(3, {{{"*", ""}, 1}}, Bit{0});
  EXPECT_EQ(with_default.next_bit(Party::B, PartyInput{}, Transcript::from_string("1")), 0);
}

TEST(ProtocolSpecTest, ReferenceTranscriptExamples) {
  const ProtocolSpec zero = ProtocolSpec::table(4, {}, Bit{0});
  EXPECT_EQ(reference_transcript(zero, PartyInput{}, PartyInput{}).to_string(), "0000");

  EXPECT_EQ(reference_transcript(echo_spec(), PartyInput("1"), PartyInput{}).to_string(), "11");
  EXPECT_EQ(reference_transcript(echo_spec(), PartyInput("0"), PartyInput{}).to_string(), "00");
}

TEST(ProtocolSpecTest, ReferenceTranscriptAlternatesSpeakers) {
  // Alice's entries exist only under input "11" at even prefix lengths and
  // Bob's only for odd ones, with distinct inputs and no wildcard. Any call
  // with the wrong party or input would hit a missing entry and throw.
  const std::string ref = "10110";
  std::map<ProtocolSpec::TableKey, Bit> entries;
  for (std::size_t r = 0; r < ref.size(); ++r) {
    entries[{r % 2 == 0 ? "11" : "00", ref.substr(0, r)}] = ref[r] == '1';
  }
  const ProtocolSpec spec = ProtocolSpec::table(ref.size(), entries);
  const Transcript m = reference_transcript(spec, PartyInput("11"), PartyInput("00"));
  EXPECT_EQ(m.to_string(), ref);
  EXPECT_THROW(reference_transcript(spec, PartyInput("00"), PartyInput("11")), ContractViolation);
}

TEST(ProtocolSpecTest, ReferenceTranscriptIsAFixedPoint) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ProtocolSpec spec = make_random_spec(1 + seed * 7, seed);
    const PartyInput xA("01"), xB("1");
    const Transcript m = reference_transcript(spec, xA, xB);
    EXPECT_EQ(m.size(), spec.n0());
    EXPECT_EQ(m, reference_transcript(spec, xA, xB));
  }
}

TEST(MakeRandomSpecTest, ReproducibleFromSeed) {
  const ProtocolSpec a = make_random_spec(8, 42), b = make_random_spec(8, 42);
  const PartyInput x("1");
  for (const auto& [who, prefix] : all_prefixes(8)) {
    EXPECT_EQ(a.next_bit(who, x, prefix), b.next_bit(who, x, prefix));
  }
}

TEST(MakeRandomSpecTest, DifferentSeedsDifferSomewhere) {
  const ProtocolSpec a = make_random_spec(8, 42), b = make_random_spec(8, 43);
  const PartyInput x("1");
  int differ = 0;
  for (const auto& [who, prefix] : all_prefixes(8)) {
    differ += a.next_bit(who, x, prefix) != b.next_bit(who, x, prefix);
  }
  EXPECT_GE(differ, 1);
}

TEST(MakeRandomSpecTest, LengthOneHasOneEvaluation) {
  const ProtocolSpec spec = make_random_spec(1, 77);
  EXPECT_NO_THROW(spec.next_bit(Party::A, PartyInput{}, Transcript{}));
  EXPECT_THROW(spec.next_bit(Party::B, PartyInput{}, Transcript::from_string("0")),
               std::out_of_range);
  EXPECT_THROW(spec.next_bit(Party::B, PartyInput{}, Transcript{}), ContractViolation);
}

TEST(MakeRandomSpecTest, ZeroLengthRejected) {
  EXPECT_THROW(make_random_spec(0, 1), ContractViolation);
}

TEST(ProtocolSpecTest, JsonRoundTripPreservesBehaviour) {
  std::mt19937_64 rng(9);
  for (int iter = 0; iter < 20; ++iter) {
    const ProtocolSpec spec = make_random_spec(1 + rng() % 30, rng());
    const ProtocolSpec back = ProtocolSpec::from_json(nlohmann::json::parse(spec.to_json().dump()));
    const PartyInput xA("1101"), xB("0");
    EXPECT_EQ(reference_transcript(spec, xA, xB), reference_transcript(back, xA, xB));
  }
  const ProtocolSpec echo = echo_spec();
  const ProtocolSpec back = ProtocolSpec::from_json(echo.to_json());
  EXPECT_EQ(back.to_json(), echo.to_json());
  EXPECT_EQ(reference_transcript(back, PartyInput("1"), PartyInput{}).to_string(), "11");
}

TEST(ProtocolSpecTest, JsonSchema) {
  const auto j = nlohmann::json::parse(R"({"n0": 2, "kind": "table", "entries": [["", 1], ["1", 0]]})");
  const ProtocolSpec spec = ProtocolSpec::from_json(j);
  EXPECT_EQ(spec.kind(), ProtocolSpec::Kind::Table);
  EXPECT_EQ(reference_transcript(spec, PartyInput{}, PartyInput{}).to_string(), "10");

  const auto prf = ProtocolSpec::from_json(nlohmann::json::parse(R"({"n0": 5, "kind": "prf", "seed": 3})"));
  EXPECT_EQ(prf.n0(), 5u);
  EXPECT_EQ(prf.seed(), 3u);

  EXPECT_THROW(ProtocolSpec::from_json(nlohmann::json::parse(R"({"n0": 2, "kind": "magic"})")),
               ContractViolation);
  EXPECT_THROW(ProtocolSpec::from_json(nlohmann::json::parse(R"({"kind": "prf", "seed": 1})")),
               ContractViolation);
  EXPECT_THROW(ProtocolSpec::from_json(nlohmann::json::parse(R"({"n0": 1, "kind": "table", "entries": [["0", 1]]})")),
               ContractViolation);
}

}  // namespace
}  // namespace becsim
