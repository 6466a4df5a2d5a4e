#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <sstream>

#include "becsim/simulator.hpp"
#include "oracles.hpp"

namespace becsim {
namespace {

SimConfig fixed_config(const ProtocolSpec& spec, std::vector<bool> erased,
                       PartyInput xA = PartyInput("1"), PartyInput xB = PartyInput("0")) {
  const std::size_t rounds = erased.size();
  return SimConfig{.spec = spec,
                   .xA = std::move(xA),
                   .xB = std::move(xB),
                   .rounds = rounds,
                   .epsilon = 0.5,
                   .noise = FixedNoise{std::move(erased)}};
}

SimConfig sampled_config(const ProtocolSpec& spec, std::size_t rounds, double eps,
                         std::uint64_t seed) {
  return SimConfig{.spec = spec,
                   .xA = PartyInput("01"),
                   .xB = PartyInput("10"),
                   .rounds = rounds,
                   .epsilon = eps,
                   .noise = SampledNoise{seed}};
}

TEST(ClassifyStateTest, Examples) {
  EXPECT_EQ(classify_state(0, 0, 1), ProtoState::II);
  EXPECT_EQ(classify_state(0, 0, 2), ProtoState::I);
  EXPECT_EQ(classify_state(1, 0, 2), ProtoState::IV);
  EXPECT_EQ(classify_state(1, 0, 3), ProtoState::III);
  EXPECT_EQ(classify_state(3, 4, 2), ProtoState::VI);
  EXPECT_EQ(classify_state(3, 4, 5), ProtoState::V);
}

TEST(ClassifyStateTest, GapAboveOneIsAViolation) {
  try {
    classify_state(5, 3, 4);
    FAIL() << "expected a violation";
  } catch (const InvariantViolation& v) {
    EXPECT_EQ(v.kind(), InvariantKind::Gap);
    EXPECT_EQ(v.round(), 4u);
  }
}

TEST(ChainStateTest, Grouping) {
  EXPECT_EQ(chain_state(ProtoState::I), ChainState::S1);
  EXPECT_EQ(chain_state(ProtoState::II), ChainState::S1);
  EXPECT_EQ(chain_state(ProtoState::IV), ChainState::S2);
  EXPECT_EQ(chain_state(ProtoState::V), ChainState::S2);
  EXPECT_EQ(chain_state(ProtoState::III), ChainState::S3);
  EXPECT_EQ(chain_state(ProtoState::VI), ChainState::S3);
}

TEST(ExpectedTransitionTest, AgreesWithChainEdges) {
  for (ProtoState s : {ProtoState::I, ProtoState::II, ProtoState::III, ProtoState::IV,
                       ProtoState::V, ProtoState::VI}) {
    for (bool erased : {false, true}) {
      const auto [next, reward] = expected_transition(s, erased);
      EXPECT_EQ(step(chain_state(s), erased), (ChainStep{chain_state(next), reward}));
    }
  }
}

TEST(RunTest, NoiselessRunReachesReference) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ProtocolSpec spec = make_random_spec(4, seed);
    SimConfig cfg = sampled_config(spec, 8, 0.0, seed);
    const SimResult res = run(cfg);
    const Transcript ref = reference_transcript(spec, cfg.xA, cfg.xB);
    EXPECT_TRUE(res.success);
    EXPECT_EQ(res.outA, ref);
    EXPECT_EQ(res.outB, ref);
    EXPECT_EQ(res.totalReward, 16);
    ASSERT_EQ(res.trace.size(), 8u);
    for (const RoundRecord& r : res.trace) EXPECT_EQ(r.reward, 2);
  }
}

TEST(RunTest, AllRoundsErased) {
  for (std::size_t n0 : {1u, 3u, 10u}) {
    const SimResult res = run(fixed_config(make_random_spec(n0, 5), std::vector<bool>(3 * n0, true)));
    EXPECT_EQ(res.totalReward, 1);
    EXPECT_FALSE(res.success);
    // s1 -> s2 -> s3 -> s2 -> ...
    ASSERT_GE(res.trace.size(), 3u);
    EXPECT_EQ(res.trace[0].chain_state, ChainState::S1);
    EXPECT_EQ(res.trace[1].chain_state, ChainState::S2);
    EXPECT_EQ(res.trace[2].chain_state, ChainState::S3);
  }
}

TEST(RunTest, SingleBitProtocolHandTrace) {
  const ProtocolSpec spec = make_random_spec(1, 9);
  EXPECT_FALSE(run(fixed_config(spec, {true, false})).success);
  EXPECT_FALSE(run(fixed_config(spec, {true, true})).success);
  EXPECT_TRUE(run(fixed_config(spec, {false, false})).success);
  EXPECT_TRUE(run(fixed_config(spec, {false, true})).success);

  // Round 1 erased: Bob's resend in round 2 carries his initial parity and
  // must be rejected by Alice.
  const SimResult res = run(fixed_config(spec, {true, false}));
  ASSERT_EQ(res.trace.size(), 2u);
  EXPECT_TRUE(res.trace[0].fresh);
  EXPECT_EQ(res.trace[0].lenA_after, 1u);
  EXPECT_EQ(res.trace[0].lenB_after, 0u);
  EXPECT_FALSE(res.trace[1].fresh);
  EXPECT_EQ(res.trace[1].lenA_after, 1u);
  EXPECT_EQ(res.trace[1].lenB_after, 0u);
  EXPECT_EQ(res.outA.size(), 1u);
  EXPECT_EQ(res.outB.size(), 0u);
}

TEST(RunTest, PaddingExtendsEstimatesButOutputsAreTruncated) {
  const ProtocolSpec spec = make_random_spec(3, 4);
  const SimResult res = run(fixed_config(spec, std::vector<bool>(12, false)));
  EXPECT_TRUE(res.success);
  EXPECT_EQ(res.totalReward, 24);
  EXPECT_EQ(res.outA.size(), 3u);
  EXPECT_EQ(res.outB.size(), 3u);
}

TEST(RunTest, RejectsBadConfigs) {
  const ProtocolSpec spec = make_random_spec(2, 1);
  SimConfig cfg = fixed_config(spec, {false, false, true});
  cfg.rounds = 4;
  EXPECT_THROW(run(cfg), std::invalid_argument);
  cfg = sampled_config(spec, 0, 0.1, 1);
  EXPECT_THROW(run(cfg), std::invalid_argument);
  cfg = sampled_config(spec, 4, 1.2, 1);
  EXPECT_THROW(run(cfg), std::invalid_argument);
}

// Independent string-based transcription of the protocol must agree with the
// simulator round by round on random erasure patterns.
TEST(RunTest, AgreesWithNaiveTranscription) {
  std::mt19937_64 rng(77);
  for (int iter = 0; iter < 400; ++iter) {
    const std::size_t n0 = 1 + rng() % 12;
    const std::size_t rounds = n0 * (2 + rng() % 4);
    const double p = (rng() % 100) / 100.0;
    std::vector<bool> erased(rounds);
    for (std::size_t i = 0; i < rounds; ++i) erased[i] = bernoulli(rng, p);
    const ProtocolSpec spec = make_random_spec(n0, rng());
    const SimConfig cfg = fixed_config(spec, erased, PartyInput("0110"), PartyInput("1"));

    const SimResult res = run(cfg);
    const oracle::NaiveRun naive = oracle::naive_simulation(spec, cfg.xA, cfg.xB, erased);
    ASSERT_EQ(res.trace.size(), rounds);
    for (std::size_t i = 0; i < rounds; ++i) {
      EXPECT_EQ(res.trace[i].lenA_before, naive.lenA[i]);
      EXPECT_EQ(res.trace[i].lenB_before, naive.lenB[i]);
    }
    EXPECT_EQ(res.outA.to_string(), naive.a.substr(0, std::min(n0, naive.a.size())));
    EXPECT_EQ(res.outB.to_string(), naive.b.substr(0, std::min(n0, naive.b.size())));
    EXPECT_EQ(res.totalReward, static_cast<long>(naive.a.size() + naive.b.size()));
  }
}

// Success <=> T >= 2 n0 checked on every pattern of small instances, with
// monitors on (so every per-round invariant is exercised too).
TEST(RunTest, SuccessEquivalenceExhaustive) {
  for (std::size_t n0 = 1; n0 <= 4; ++n0) {
    for (std::size_t rounds : {2 * n0, 3 * n0}) {
      const ProtocolSpec spec = make_random_spec(n0, 100 + n0);
      const PartyInput xA("1"), xB("0");
      const Transcript ref = reference_transcript(spec, xA, xB);
      enumerate_round_patterns(rounds, 0.5, [&](const RoundPattern& pat) {
        const SimResult res = run(fixed_config(spec, pat.erased, xA, xB));
        const bool by_reward = res.totalReward >= 2 * static_cast<long>(n0);
        EXPECT_EQ(res.success, by_reward);
        EXPECT_EQ(res.success, res.outA == ref && res.outB == ref);
      });
    }
  }
}

TEST(RunTest, TraceJsonLines) {
  const SimResult res = run(fixed_config(make_random_spec(2, 3), {false, true, false, false}));
  std::ostringstream out;
  write_trace_jsonl(res.trace, out);
  std::istringstream in(out.str());
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"i", "sender", "fresh", "erased", "lenA", "lenB", "state", "chain", "reward"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
    ++count;
  }
  EXPECT_EQ(count, 4);
  EXPECT_EQ(nlohmann::json::parse(out.str().substr(0, out.str().find('\n')))["state"], "II");
}

TEST(ExactErrorProbTest, SingleBitProtocolFailsIffRoundOneErased) {
  const ProtocolSpec spec = make_random_spec(1, 2);
  for (double eps : {0.0, 0.05, 0.2, 0.5, 0.77, 1.0}) {
    EXPECT_NEAR(exact_error_prob(spec, PartyInput{}, PartyInput{}, 2, eps),
                1.0 - (1.0 - eps) * (1.0 - eps), 1e-12);
  }
}

TEST(ExactErrorProbTest, Extremes) {
  const ProtocolSpec spec = make_random_spec(3, 2);
  EXPECT_EQ(exact_error_prob(spec, PartyInput{}, PartyInput{}, 9, 0.0), 0.0);
  EXPECT_EQ(exact_error_prob(spec, PartyInput{}, PartyInput{}, 9, 1.0), 1.0);
  EXPECT_THROW(exact_error_prob(spec, PartyInput{}, PartyInput{}, 25, 0.3), std::length_error);
}

TEST(MonteCarloErrorTest, NoiselessIsExactlyZero) {
  const MonteCarloEstimate mc = monte_carlo_error(sampled_config(make_random_spec(5, 1), 10, 0.0, 3), 500);
  EXPECT_EQ(mc.estimate, 0.0);
  EXPECT_EQ(mc.ci_halfwidth, 0.0);
  EXPECT_EQ(mc.errors, 0u);
}

TEST(MonteCarloErrorTest, AgreesWithExhaustiveOracle) {
  const ProtocolSpec spec = make_random_spec(2, 8);
  const SimConfig cfg = sampled_config(spec, 6, 0.5, 12345);
  const double exact = exact_error_prob(spec, cfg.xA, cfg.xB, 6, 0.5);
  const MonteCarloEstimate mc = monte_carlo_error(cfg, 100000);
  EXPECT_NEAR(mc.estimate, exact, mc.ci_halfwidth);
}

TEST(MonteCarloErrorTest, DeterministicAndIndependentOfWorkers) {
  const SimConfig cfg = sampled_config(make_random_spec(6, 3), 18, 0.3, 99);
  setenv("SIM_THREADS", "1", 1);
  const MonteCarloEstimate one = monte_carlo_error(cfg, 3000);
  setenv("SIM_THREADS", "4", 1);
  const MonteCarloEstimate four = monte_carlo_error(cfg, 3000);
  const MonteCarloEstimate again = monte_carlo_error(cfg, 3000);
  unsetenv("SIM_THREADS");
  EXPECT_EQ(one.errors, four.errors);
  EXPECT_EQ(four.errors, again.errors);
  EXPECT_EQ(one.estimate, four.estimate);
}

TEST(MonteCarloErrorTest, RejectsFixedNoiseAndZeroTrials) {
  const ProtocolSpec spec = make_random_spec(1, 1);
  EXPECT_THROW(monte_carlo_error(fixed_config(spec, {false, false}), 10), std::invalid_argument);
  EXPECT_THROW(monte_carlo_error(sampled_config(spec, 2, 0.1, 1), 0), std::invalid_argument);
}

TEST(MonteCarloErrorTest, MonitorsRunInsideWorkers) {
  const MonteCarloEstimate mc =
      monte_carlo_error(sampled_config(make_random_spec(20, 4), 80, 0.4, 5), 200, {true, true});
  EXPECT_EQ(mc.trials, 200u);
}

}  // namespace
}  // namespace becsim
