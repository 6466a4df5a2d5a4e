#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "becsim/protocol.hpp"

namespace becsim {

/// Per-trial random stream.
using Rng = std::mt19937_64;

/// Seed of trial `index` under `master_seed`. Streams are independent of
/// the order in which trials are executed.
std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t index);

inline Rng make_trial_rng(std::uint64_t master_seed, std::uint64_t index) {
  return Rng(trial_seed(master_seed, index));
}

/// Bernoulli(prob) draw from the top 53 bits of one rng output.
inline bool bernoulli(Rng& rng, double prob) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return u < prob;
}

struct ChannelParams {
  double epsilon = 0.0;

  explicit ChannelParams(double eps);
};

/// A received symbol: the sent bit, or nullopt when erased.
using ReceivedBit = std::optional<Bit>;

struct ReceivedPair {
  ReceivedBit t;
  ReceivedBit p;

  bool has_erasure() const { return !t || !p; }
};

/// One erased/clear flag per simulation round, with its probability.
struct RoundPattern {
  std::vector<bool> erased;
  double weight = 1.0;

  std::size_t erasures() const;
  nlohmann::json to_json() const;
};

/// Sends the pair (t, p) through BEC(epsilon); each bit is erased
/// independently.
ReceivedPair transmit(Bit t, Bit p, const ChannelParams& params, Rng& rng);

/// Probability that at least one bit of a two-bit round is erased.
double round_erasure_prob(double epsilon);

inline constexpr std::size_t kMaxEnumeratedRounds = 24;

/// Calls `visit` once for each of the 2^rounds erasure patterns, weighted by
/// p^e (1-p)^(rounds-e). Pattern bit j of the enumeration index is round j+1.
/// Throws std::length_error when rounds exceeds kMaxEnumeratedRounds.
void enumerate_round_patterns(std::size_t rounds, double p,
                              const std::function<void(const RoundPattern&)>& visit);

}  // namespace becsim
