#include "becsim/reward_chain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace becsim {

const char* to_string(ChainState s) {
  switch (s) {
    case ChainState::S1: return "s1";
    case ChainState::S2: return "s2";
    case ChainState::S3: return "s3";
  }
  return "?";
}

ChainParams::ChainParams(double round_erasure) : p(round_erasure) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("round erasure probability p must lie in [0,1], got " +
                                std::to_string(p));
  }
}

ChainStep step(ChainState state, bool erased) {
  switch (state) {
    case ChainState::S1:
      return erased ? ChainStep{ChainState::S2, 1} : ChainStep{ChainState::S1, 2};
    case ChainState::S2:
      return {ChainState::S3, 0};
    case ChainState::S3:
      return erased ? ChainStep{ChainState::S2, 0} : ChainStep{ChainState::S1, 1};
  }
  throw std::logic_error("invalid chain state");
}

double transition_prob(ChainState from, ChainState next, const ChainParams& params) {
  double prob = 0.0;
  for (bool erased : {false, true}) {
    if (step(from, erased).next == next) prob += erased ? params.p : 1.0 - params.p;
  }
  return prob;
}

RewardTrace simulate_chain(std::size_t n, const ChainParams& params, Rng& rng) {
  RewardTrace trace;
  trace.states.reserve(n + 1);
  trace.rewards.reserve(n);
  ChainState z = ChainState::S1;
  trace.states.push_back(z);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [next, reward] = step(z, bernoulli(rng, params.p));
    trace.rewards.push_back(reward);
    trace.total += reward;
    trace.states.push_back(next);
    z = next;
  }
  return trace;
}

long simulate_chain_total(std::size_t n, const ChainParams& params, Rng& rng) {
  long total = 0;
  ChainState z = ChainState::S1;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [next, reward] = step(z, bernoulli(rng, params.p));
    total += reward;
    z = next;
  }
  return total;
}

double expected_reward_recurrence(std::size_t n, const ChainParams& params) {
  const double p = params.p;
  double prev = 0.0;      // f(0)
  double cur = 2.0 - p;   // f(1)
  if (n == 0) return prev;
  for (std::size_t m = 1; m < n; ++m) {
    const double next = (1.0 - p) * cur + p * prev + 2.0 * (1.0 - p);
    prev = cur;
    cur = next;
  }
  return cur;
}

double expected_reward_closed_form(std::size_t n, const ChainParams& params) {
  if (n == 0) throw std::invalid_argument("closed form is stated for n >= 1");
  const double p = params.p;
  const double nd = static_cast<double>(n);
  const double alt = (n % 2 == 0 ? 1.0 : -1.0) * std::pow(p, nd);  // (-p)^n
  // Linear part and transient split; same value as the single fraction but
  // rounds to exactly 2 - p at n = 1 on decimal grids.
  return 2.0 * nd * (1.0 - p) / (1.0 + p) + p * (3.0 - p) * (1.0 - alt) / ((1.0 + p) * (1.0 + p));
}

double expected_reward_dp(std::size_t n, const ChainParams& params) {
  const double p = params.p;
  double g1 = 0.0, g2 = 0.0, g3 = 0.0;  // g(0, s)
  for (std::size_t m = 1; m <= n; ++m) {
    const double n1 = (2.0 - p) + (1.0 - p) * g1 + p * g2;
    const double n2 = g3;
    const double n3 = (1.0 - p) + (1.0 - p) * g1 + p * g2;
    g1 = n1;
    g2 = n2;
    g3 = n3;
  }
  return g1;
}

const std::array<TransitionState, 5>& supported_transition_states() {
  using enum ChainState;
  static const std::array<TransitionState, 5> states = {{
      {S1, S1}, {S2, S1}, {S3, S2}, {S1, S3}, {S2, S3}}};
  return states;
}

HittingTimeReport hitting_times(const ChainParams& params) {
  if (!(params.p > 0.0 && params.p < 1.0)) {
    throw std::domain_error(
        "hitting times need 0 < p < 1; the transition chain is not irreducible otherwise");
  }
  const auto& states = supported_transition_states();
  constexpr int kN = 5;

  // Y = (next, cur) moves to (next', next) with Pr(next -> next').
  Eigen::Matrix<double, kN, kN> P = Eigen::Matrix<double, kN, kN>::Zero();
  for (int a = 0; a < kN; ++a) {
    for (int b = 0; b < kN; ++b) {
      if (states[b].second == states[a].first) {
        P(a, b) = transition_prob(states[a].first, states[b].first, params);
      }
    }
  }

  HittingTimeReport report;
  report.supported_states.assign(states.begin(), states.end());
  for (int target = 0; target < kN; ++target) {
    // Steps to reach the target, at least one: h(x) = 1 + sum_{x' != target} P(x, x') h(x').
    Eigen::Matrix<double, kN, kN> A = Eigen::Matrix<double, kN, kN>::Identity() - P;
    A.col(target) += P.col(target);
    const Eigen::Matrix<double, kN, 1> h =
        A.fullPivLu().solve(Eigen::Matrix<double, kN, 1>::Ones());
    for (int start = 0; start < kN; ++start) {
      if (!std::isfinite(h(start)) || h(start) < 1.0) {
        throw std::runtime_error("hitting-time solve produced an invalid value");
      }
      // H is the index of the hit and Y_1 is the start, so H = 1 + steps.
      const double hit = 1.0 + h(start);
      report.expected_hits[{states[target], states[start]}] = hit;
      report.hit_tr = std::max(report.hit_tr, hit);
    }
  }
  return report;
}

double min_k(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw std::domain_error("min_k needs 0 <= epsilon < 1, got " + std::to_string(epsilon));
  }
  const double keep = 1.0 - epsilon;
  return 2.0 / keep / keep - 1.0;
}

double error_upper_bound_rounds(double rounds, double k, double epsilon,
                                double hit_tr) {
  if (!(rounds > 0.0)) throw std::invalid_argument("round count must be positive");
  if (!(hit_tr > 0.0) || !std::isfinite(hit_tr)) {
    throw std::invalid_argument("hit_tr must be positive and finite");
  }
  if (!(k > min_k(epsilon))) {
    throw std::domain_error("k = " + std::to_string(k) +
                            " is not above the threshold 2/(1-eps)^2 - 1 = " +
                            std::to_string(min_k(epsilon)));
  }
  const double p = round_erasure_prob(epsilon);
  const double margin = (1.0 - p) / (1.0 + p) - 1.0 / k;
  return 2.0 * std::exp(-(2.0 * rounds / (hit_tr * hit_tr)) * margin * margin);
}

double error_upper_bound(std::size_t n0, double k, double epsilon, double hit_tr) {
  if (n0 == 0) throw std::invalid_argument("n0 must be positive");
  return error_upper_bound_rounds(k * static_cast<double>(n0), k, epsilon, hit_tr);
}

}  // namespace becsim
