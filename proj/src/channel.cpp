#include "becsim/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "becsim/hash.hpp"

namespace becsim {

namespace {

void check_probability(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0,1], got " +
                                std::to_string(x));
  }
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t index) {
  return hash_combine(mix64(master_seed), index);
}

ChannelParams::ChannelParams(double eps) : epsilon(eps) {
  check_probability(eps, "erasure probability epsilon");
}

std::size_t RoundPattern::erasures() const {
  std::size_t e = 0;
  for (bool b : erased) e += b;
  return e;
}

nlohmann::json RoundPattern::to_json() const {
  auto flags = nlohmann::json::array();
  for (bool b : erased) flags.push_back(b ? 1 : 0);
  return flags;
}

ReceivedPair transmit(Bit t, Bit p, const ChannelParams& params, Rng& rng) {
  ReceivedPair out;
  if (!bernoulli(rng, params.epsilon)) out.t = t;
  if (!bernoulli(rng, params.epsilon)) out.p = p;
  return out;
}

double round_erasure_prob(double epsilon) {
  check_probability(epsilon, "erasure probability epsilon");
  const double keep = 1.0 - epsilon;
  return 1.0 - keep * keep;
}

void enumerate_round_patterns(std::size_t rounds, double p,
                              const std::function<void(const RoundPattern&)>& visit) {
  if (rounds == 0) throw std::invalid_argument("enumeration needs at least one round");
  if (rounds > kMaxEnumeratedRounds) {
    throw std::length_error("refusing to enumerate 2^" + std::to_string(rounds) +
                            " erasure patterns; the limit is " +
                            std::to_string(kMaxEnumeratedRounds) + " rounds");
  }
  check_probability(p, "round erasure probability p");

  // Weight by erasure count, computed once.
  std::vector<double> weight_by_count(rounds + 1);
  for (std::size_t e = 0; e <= rounds; ++e) {
    weight_by_count[e] = std::pow(p, static_cast<double>(e)) *
                         std::pow(1.0 - p, static_cast<double>(rounds - e));
  }

  RoundPattern pattern;
  pattern.erased.assign(rounds, false);
  const std::uint64_t total = std::uint64_t{1} << rounds;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    std::size_t e = 0;
    for (std::size_t j = 0; j < rounds; ++j) {
      const bool bit = (mask >> j) & 1u;
      pattern.erased[j] = bit;
      e += bit;
    }
    pattern.weight = weight_by_count[e];
    visit(pattern);
  }
}

}  // namespace becsim
