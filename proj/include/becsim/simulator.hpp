#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "becsim/channel.hpp"
#include "becsim/protocol.hpp"
#include "becsim/reward_chain.hpp"

namespace becsim {

/// Relation between the two estimate lengths at the start of round i,
/// combined with the parity of i.
enum class ProtoState { I = 1, II, III, IV, V, VI };

const char* to_string(ProtoState s);

/// Which runtime check failed.
enum class InvariantKind {
  Gap,              // ||m_A| - |m_B|| <= 1
  OddEvenSplit,     // unequal lengths => |m_A| odd, |m_B| even
  EqualLengthRound, // equal even lengths => i odd; equal odd => i even
  ParityTable,      // parity bit determined by |m_P| mod 4
  Prefix,           // estimates are prefixes of the reference transcript
  Transition,       // (state, erased) -> (next state, reward) table
  ChainEdge,        // aggregated move is an edge of the reward chain
  Success,          // success <=> T >= 2 n0 <=> outputs correct
};

const char* to_string(InvariantKind k);

/// A monitored property failed. This signals a simulator bug, never a
/// channel-induced protocol failure.
class InvariantViolation : public std::logic_error {
 public:
  InvariantViolation(InvariantKind kind, std::size_t round, const std::string& what);

  InvariantKind kind() const { return kind_; }
  std::size_t round() const { return round_; }

 private:
  InvariantKind kind_;
  std::size_t round_;
};

struct PartyState {
  Transcript estimate;
  Bit parity = 0;
  std::pair<Bit, Bit> stored_msg{0, 0};
  PartyInput input;
};

struct SampledNoise {
  std::uint64_t seed = 0;
};

/// Round-level erasure flags; an erased round loses the whole pair.
struct FixedNoise {
  std::vector<bool> erased;
};

struct SimConfig {
  ProtocolSpec spec;
  PartyInput xA;
  PartyInput xB;
  std::size_t rounds = 0;  // k * n0
  double epsilon = 0.0;
  std::variant<SampledNoise, FixedNoise> noise = SampledNoise{};
};

struct RunOptions {
  bool monitors = true;
  bool keep_trace = true;
};

struct RoundRecord {
  std::size_t i = 0;
  Party sender = Party::A;
  bool fresh = false;
  bool erased = false;
  std::size_t lenA_before = 0, lenA_after = 0;
  std::size_t lenB_before = 0, lenB_after = 0;
  Bit parity_sent = 0;
  ProtoState proto_state = ProtoState::II;
  ChainState chain_state = ChainState::S1;
  int reward = 0;
};

struct SimResult {
  Transcript outA;
  Transcript outB;
  bool success = false;
  long totalReward = 0;
  std::vector<RoundRecord> trace;
};

/// Runs the two-party erasure simulation for config.rounds rounds.
///
/// Odd rounds are sent by Alice and even rounds by Bob. The sender makes a
/// fresh move when its own estimate has the length at which it speaks in the
/// original protocol (Alice: even, Bob: odd): it computes the next bit (0
/// once the estimate reaches n0), flips its parity bit, extends its estimate
/// and stores the pair. Otherwise it resends the stored pair. A receiver
/// acts only on an unerased pair: Alice appends the bit when the parity is
/// the complement of hers, Bob when it equals his.
///
/// With monitors on, every round is checked against the progress invariants
/// and an InvariantViolation is thrown on the first breach. `reference`
/// avoids recomputing the noiseless transcript across trials.
SimResult run(const SimConfig& config, const RunOptions& options = {},
              const Transcript* reference = nullptr);

/// Throws InvariantViolation when the lengths differ by more than one.
ProtoState classify_state(std::size_t lenA, std::size_t lenB, std::size_t round);

ChainState chain_state(ProtoState s);

/// Expected (next protocol state, reward) for a round that starts in `s`.
std::pair<ProtoState, int> expected_transition(ProtoState s, bool erased);

/// Sum of pattern weights over all 2^rounds round-erasure patterns on which
/// the simulation fails.
double exact_error_prob(const ProtocolSpec& spec, const PartyInput& xA,
                        const PartyInput& xB, std::size_t rounds, double epsilon);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double ci_halfwidth = 0.0;  // 3 binomial standard errors
  std::uint64_t errors = 0;
  std::uint64_t trials = 0;
};

/// Failure fraction over `trials` independent runs. Trial t draws its noise
/// from trial_seed(master, t) where master is the config's sampled seed.
/// Workers are capped by SIM_THREADS; the result does not depend on it.
MonteCarloEstimate monte_carlo_error(const SimConfig& config, std::uint64_t trials,
                                     const RunOptions& options = {false, false});

/// Number of worker threads: SIM_THREADS if set and positive, otherwise the
/// hardware concurrency.
unsigned worker_count();

/// One JSON object per line with keys i, sender, fresh, erased, lenA, lenB,
/// state, chain, reward. Lengths and states are taken at the start of the
/// round; reward is the growth during it.
void write_trace_jsonl(const std::vector<RoundRecord>& trace, std::ostream& out);

}  // namespace becsim
