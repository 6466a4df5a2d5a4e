#include "becsim/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

namespace becsim {

const char* to_string(ProtoState s) {
  switch (s) {
    case ProtoState::I: return "I";
    case ProtoState::II: return "II";
    case ProtoState::III: return "III";
    case ProtoState::IV: return "IV";
    case ProtoState::V: return "V";
    case ProtoState::VI: return "VI";
  }
  return "?";
}

const char* to_string(InvariantKind k) {
  switch (k) {
    case InvariantKind::Gap: return "gap";
    case InvariantKind::OddEvenSplit: return "odd_even_split";
    case InvariantKind::EqualLengthRound: return "equal_length_round";
    case InvariantKind::ParityTable: return "parity_table";
    case InvariantKind::Prefix: return "prefix";
    case InvariantKind::Transition: return "transition";
    case InvariantKind::ChainEdge: return "chain_edge";
    case InvariantKind::Success: return "success";
  }
  return "?";
}

InvariantViolation::InvariantViolation(InvariantKind kind, std::size_t round,
                                       const std::string& what)
    : std::logic_error(std::string("invariant '") + to_string(kind) + "' violated at round " +
                       std::to_string(round) + ": " + what),
      kind_(kind),
      round_(round) {}

ProtoState classify_state(std::size_t lenA, std::size_t lenB, std::size_t round) {
  const bool odd = round % 2 == 1;
  if (lenA == lenB) return odd ? ProtoState::II : ProtoState::I;
  if (lenA == lenB + 1) return odd ? ProtoState::III : ProtoState::IV;
  if (lenB == lenA + 1) return odd ? ProtoState::V : ProtoState::VI;
  throw InvariantViolation(InvariantKind::Gap, round,
                           "estimate lengths " + std::to_string(lenA) + " and " +
                               std::to_string(lenB) + " differ by more than one");
}

ChainState chain_state(ProtoState s) {
  switch (s) {
    case ProtoState::I:
    case ProtoState::II: return ChainState::S1;
    case ProtoState::IV:
    case ProtoState::V: return ChainState::S2;
    case ProtoState::III:
    case ProtoState::VI: return ChainState::S3;
  }
  throw std::logic_error("invalid protocol state");
}

std::pair<ProtoState, int> expected_transition(ProtoState s, bool erased) {
  using enum ProtoState;
  switch (s) {
    // Equal lengths: both grow when clear, only the sender grows otherwise.
    case I: return erased ? std::pair{V, 1} : std::pair{II, 2};
    case II: return erased ? std::pair{IV, 1} : std::pair{I, 2};
    // The lagging party catches up when the leader resends cleanly.
    case III: return erased ? std::pair{IV, 0} : std::pair{I, 1};
    case VI: return erased ? std::pair{V, 0} : std::pair{II, 1};
    // The lagging party speaks and cannot move either transcript.
    case IV: return {III, 0};
    case V: return {VI, 0};
  }
  throw std::logic_error("invalid protocol state");
}

namespace {

class Monitor {
 public:
  Monitor(const Transcript& reference, std::size_t n0)
      : reference_(reference), n0_(n0) {}

  void check_boundary(std::size_t i, const PartyState& a, const PartyState& b) const {
    const std::size_t la = a.estimate.size();
    const std::size_t lb = b.estimate.size();
    classify_state(la, lb, i);  // gap
    if (la != lb && !(la % 2 == 1 && lb % 2 == 0)) {
      fail(InvariantKind::OddEvenSplit, i, la, lb, "unequal lengths without odd/even split");
    }
    if (la == lb && (la % 2 == 0) != (i % 2 == 1)) {
      fail(InvariantKind::EqualLengthRound, i, la, lb, "equal lengths with wrong round parity");
    }
    // p_A = 1 iff |m_A| mod 4 in {1,2}; p_B = 1 iff |m_B| mod 4 in {0,1}.
    const bool alice_one = la % 4 == 1 || la % 4 == 2;
    const bool bob_one = lb % 4 == 0 || lb % 4 == 1;
    if ((a.parity == 1) != alice_one || (b.parity == 1) != bob_one) {
      fail(InvariantKind::ParityTable, i, la, lb,
           "parities (" + std::to_string(a.parity) + "," + std::to_string(b.parity) +
               ") do not match the length table");
    }
  }

  // Bit at position pos of the reference extended by zero padding.
  Bit expected_bit(std::size_t pos) const { return pos < n0_ ? reference_[pos] : 0; }

  void check_appended(std::size_t i, const Transcript& est, Party who) const {
    const std::size_t pos = est.size() - 1;
    if (est[pos] != expected_bit(pos)) {
      throw InvariantViolation(InvariantKind::Prefix, i,
                               std::string("party ") + to_string(who) +
                                   " appended a wrong bit at position " +
                                   std::to_string(pos));
    }
  }

  void check_round(std::size_t i, ProtoState before, bool erased, std::size_t la,
                   std::size_t lb, int reward) const {
    const ProtoState after = classify_state(la, lb, i + 1);
    const auto [want_state, want_reward] = expected_transition(before, erased);
    if (after != want_state || reward != want_reward) {
      throw InvariantViolation(
          InvariantKind::Transition, i,
          std::string(to_string(before)) + (erased ? "+erased" : "+clear") + " went to " +
              to_string(after) + " with reward " + std::to_string(reward) + ", expected " +
              to_string(want_state) + " with reward " + std::to_string(want_reward));
    }
    const ChainStep edge = step(chain_state(before), erased);
    if (edge != ChainStep{chain_state(after), reward}) {
      throw InvariantViolation(InvariantKind::ChainEdge, i,
                               std::string(to_string(chain_state(before))) + " -> " +
                                   to_string(chain_state(after)) + " is not a chain edge");
    }
  }

 private:
  [[noreturn]] static void fail(InvariantKind kind, std::size_t i, std::size_t la,
                                std::size_t lb, const std::string& what) {
    throw InvariantViolation(kind, i,
                             what + " (|m_A|=" + std::to_string(la) +
                                 ", |m_B|=" + std::to_string(lb) + ")");
  }

  const Transcript& reference_;
  std::size_t n0_;
};

}  // namespace

SimResult run(const SimConfig& config, const RunOptions& options,
              const Transcript* reference) {
  if (config.rounds == 0) throw std::invalid_argument("simulation needs at least one round");
  const ChannelParams channel(config.epsilon);
  const auto* fixed = std::get_if<FixedNoise>(&config.noise);
  if (fixed && fixed->erased.size() != config.rounds) {
    throw std::invalid_argument("fixed erasure pattern has " +
                                std::to_string(fixed->erased.size()) +
                                " rounds, expected " + std::to_string(config.rounds));
  }
  std::optional<Rng> rng;
  if (!fixed) rng.emplace(std::get<SampledNoise>(config.noise).seed);

  const ProtocolSpec& spec = config.spec;
  const std::size_t n0 = spec.n0();
  Transcript own_reference;
  if (!reference) {
    own_reference = reference_transcript(spec, config.xA, config.xB);
    reference = &own_reference;
  }
  const Monitor monitor(*reference, n0);

  PartyState alice{.estimate = {}, .parity = 0, .stored_msg = {0, 0}, .input = config.xA};
  // Bob's stored pair carries his current parity, so a resend before his
  // first fresh move is rejected by Alice.
  PartyState bob{.estimate = {}, .parity = 1, .stored_msg = {0, 1}, .input = config.xB};

  SimResult result;
  if (options.keep_trace) result.trace.reserve(config.rounds);

  for (std::size_t i = 1; i <= config.rounds; ++i) {
    const std::size_t la0 = alice.estimate.size();
    const std::size_t lb0 = bob.estimate.size();
    const bool track = options.monitors || options.keep_trace;
    ProtoState state = ProtoState::II;
    if (options.monitors) monitor.check_boundary(i, alice, bob);
    if (track) state = classify_state(la0, lb0, i);

    const Party sender_id = speaker_of_round(i);
    PartyState& sender = sender_id == Party::A ? alice : bob;
    PartyState& receiver = sender_id == Party::A ? bob : alice;

    const std::size_t slen = sender.estimate.size();
    const bool fresh = sender_id == Party::A ? slen % 2 == 0 : slen % 2 == 1;
    if (fresh) {
      const Bit t = slen < n0 ? spec.next_bit(sender_id, sender.input, sender.estimate) : 0;
      sender.parity ^= 1u;
      sender.estimate.push_back(t);
      sender.stored_msg = {t, sender.parity};
      if (options.monitors) monitor.check_appended(i, sender.estimate, sender_id);
    }
    const auto [t_sent, p_sent] = sender.stored_msg;

    ReceivedPair rx;
    if (fixed) {
      if (!fixed->erased[i - 1]) rx = {t_sent, p_sent};
    } else {
      rx = transmit(t_sent, p_sent, channel, *rng);
    }
    const bool erased = rx.has_erasure();

    if (!erased) {
      const bool accept = sender_id == Party::A ? *rx.p == receiver.parity
                                                : *rx.p == (receiver.parity ^ 1u);
      if (accept) {
        receiver.estimate.push_back(*rx.t);
        if (options.monitors) {
          monitor.check_appended(i, receiver.estimate, sender_id == Party::A ? Party::B : Party::A);
        }
      }
    }

    const std::size_t la1 = alice.estimate.size();
    const std::size_t lb1 = bob.estimate.size();
    const int reward = static_cast<int>((la1 + lb1) - (la0 + lb0));
    if (options.monitors) monitor.check_round(i, state, erased, la1, lb1, reward);
    if (options.keep_trace) {
      result.trace.push_back({.i = i,
                              .sender = sender_id,
                              .fresh = fresh,
                              .erased = erased,
                              .lenA_before = la0,
                              .lenA_after = la1,
                              .lenB_before = lb0,
                              .lenB_after = lb1,
                              .parity_sent = p_sent,
                              .proto_state = state,
                              .chain_state = chain_state(state),
                              .reward = reward});
    }
  }

  const std::size_t la = alice.estimate.size();
  const std::size_t lb = bob.estimate.size();
  if (options.monitors) monitor.check_boundary(config.rounds + 1, alice, bob);

  result.outA = alice.estimate.truncated(n0);
  result.outB = bob.estimate.truncated(n0);
  result.totalReward = static_cast<long>(la + lb);
  result.success = result.outA == *reference && result.outB == *reference;

  if (options.monitors) {
    const bool by_reward = result.totalReward >= 2 * static_cast<long>(n0);
    const bool by_length = la >= n0 && lb >= n0;
    if (by_reward != result.success || by_length != result.success) {
      throw InvariantViolation(InvariantKind::Success, config.rounds,
                               "success=" + std::to_string(result.success) +
                                   " but T=" + std::to_string(result.totalReward) +
                                   " with n0=" + std::to_string(n0));
    }
  }
  return result;
}

double exact_error_prob(const ProtocolSpec& spec, const PartyInput& xA,
                        const PartyInput& xB, std::size_t rounds, double epsilon) {
  const double p = round_erasure_prob(epsilon);
  const Transcript reference = reference_transcript(spec, xA, xB);
  SimConfig config{.spec = spec, .xA = xA, .xB = xB, .rounds = rounds,
                   .epsilon = epsilon, .noise = FixedNoise{}};
  auto& flags = std::get<FixedNoise>(config.noise).erased;
  long double failure = 0.0L;
  enumerate_round_patterns(rounds, p, [&](const RoundPattern& pattern) {
    if (pattern.weight == 0.0) return;
    flags = pattern.erased;
    if (!run(config, {.monitors = false, .keep_trace = false}, &reference).success) {
      failure += pattern.weight;
    }
  });
  return static_cast<double>(failure);
}

unsigned worker_count() {
  if (const char* env = std::getenv("SIM_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

MonteCarloEstimate monte_carlo_error(const SimConfig& config, std::uint64_t trials,
                                     const RunOptions& options) {
  if (trials == 0) throw std::invalid_argument("trials must be positive");
  const auto* sampled = std::get_if<SampledNoise>(&config.noise);
  if (!sampled) throw std::invalid_argument("Monte-Carlo estimation needs sampled noise");
  const std::uint64_t master = sampled->seed;
  const Transcript reference = reference_transcript(config.spec, config.xA, config.xB);

  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(worker_count(), trials));
  std::atomic<std::uint64_t> errors{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto work = [&](unsigned w) {
    try {
      SimConfig local = config;
      std::uint64_t local_errors = 0;
      for (std::uint64_t t = w; t < trials; t += workers) {
        local.noise = SampledNoise{trial_seed(master, t)};
        if (!run(local, options, &reference).success) ++local_errors;
      }
      errors += local_errors;
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  if (failure) std::rethrow_exception(failure);

  MonteCarloEstimate est;
  est.trials = trials;
  est.errors = errors.load();
  est.estimate = static_cast<double>(est.errors) / static_cast<double>(trials);
  est.ci_halfwidth =
      3.0 * std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(trials));
  return est;
}

void write_trace_jsonl(const std::vector<RoundRecord>& trace, std::ostream& out) {
  for (const RoundRecord& r : trace) {
    nlohmann::ordered_json j;
    j["i"] = r.i;
    j["sender"] = to_string(r.sender);
    j["fresh"] = r.fresh;
    j["erased"] = r.erased;
    j["lenA"] = r.lenA_before;
    j["lenB"] = r.lenB_before;
    j["state"] = to_string(r.proto_state);
    j["chain"] = to_string(r.chain_state);
    j["reward"] = r.reward;
    out << j.dump() << '\n';
  }
}

}  // namespace becsim
