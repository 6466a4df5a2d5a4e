#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "becsim/channel.hpp"

namespace becsim {

/// Aggregated protocol state: s1 = {I, II}, s2 = {IV, V}, s3 = {III, VI}.
enum class ChainState { S1 = 0, S2 = 1, S3 = 2 };

const char* to_string(ChainState s);

/// Round-erasure probability p of the reward chain.
struct ChainParams {
  double p = 0.0;

  explicit ChainParams(double round_erasure);
  static ChainParams from_epsilon(double epsilon) {
    return ChainParams(round_erasure_prob(epsilon));
  }
};

struct ChainStep {
  ChainState next;
  int reward;

  bool operator==(const ChainStep&) const = default;
};

/// One edge of the reward chain:
///   s1 --clear--> s1 (+2)    s1 --erased--> s2 (+1)
///   s2 --any----> s3 (+0)
///   s3 --clear--> s1 (+1)    s3 --erased--> s2 (+0)
ChainStep step(ChainState state, bool erased);

/// Transition probability Pr(next | from) for the given params.
double transition_prob(ChainState from, ChainState next, const ChainParams& params);

struct RewardTrace {
  std::vector<ChainState> states;  // Z_1 .. Z_{n+1}
  std::vector<int> rewards;        // R_1 .. R_n
  long total = 0;
};

/// n rounds of the chain from Z_1 = s1, one Bernoulli(p) erasure per round.
RewardTrace simulate_chain(std::size_t n, const ChainParams& params, Rng& rng);

/// Only the total reward of simulate_chain, without storing the trace.
long simulate_chain_total(std::size_t n, const ChainParams& params, Rng& rng);

/// f(n) by iterating f(m+2) = (1-p) f(m+1) + p f(m) + 2(1-p) from
/// f(0) = 0 and f(1) = 2 - p.
double expected_reward_recurrence(std::size_t n, const ChainParams& params);

/// [2n(1-p^2) + p(3-p)(1-(-p)^n)] / (1+p)^2, for n >= 1.
double expected_reward_closed_form(std::size_t n, const ChainParams& params);

/// E[R_1 + ... + R_n | Z_1 = s1] by backward dynamic programming over the
/// three chain states. This is the exact expectation of the chain and is
/// independent of the recurrence above.
double expected_reward_dp(std::size_t n, const ChainParams& params);

/// State of the transition chain Y_i = (Z_{i+1}, Z_i).
using TransitionState = std::pair<ChainState, ChainState>;

/// The five transition-chain states that the reward chain can produce, in a
/// fixed order: (s1,s1), (s2,s1), (s3,s2), (s1,s3), (s2,s3).
const std::array<TransitionState, 5>& supported_transition_states();

struct HittingTimeReport {
  std::vector<TransitionState> supported_states;
  /// Keyed by (target, start): E[inf{i >= 2 : Y_i = target} | Y_1 = start].
  /// This is one more than the expected number of steps, so a target that
  /// is reached deterministically on the first move has value 2.
  std::map<std::pair<TransitionState, TransitionState>, double> expected_hits;
  double hit_tr = 0.0;
};

/// Expected hitting times of the transition chain by first-step analysis.
/// Requires 0 < p < 1.
HittingTimeReport hitting_times(const ChainParams& params);

/// k > 2/(1-eps)^2 - 1 is the regime where the concentration bound applies.
double min_k(double epsilon);

/// 2 exp(-(2 k n0 / hit_tr^2) ((1-p)/(1+p) - 1/k)^2) with p derived from eps.
/// Throws std::domain_error when k <= min_k(epsilon).
double error_upper_bound(std::size_t n0, double k, double epsilon, double hit_tr);

/// Same bound expressed through the round count k*n0, which need not be an
/// integer multiple of k.
double error_upper_bound_rounds(double rounds, double k, double epsilon,
                                double hit_tr);

}  // namespace becsim
