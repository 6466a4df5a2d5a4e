#pragma once

#include <optional>

namespace becsim {

/// Erasure probability of the reduced channel used for the repetition path.
inline constexpr double kDefaultEpsPrime = 0.073;

/// Fraction of Shannon capacity that the lower bound must reach everywhere.
inline constexpr double kCapacityConstant = 0.104;

struct BoundReport {
  double epsilon = 0.0;
  double shannon = 0.0;
  double direct_lb = 0.0;
  /// direct_lb(eps') / rho, present when eps > eps'.
  std::optional<double> repetition_lb;
  /// (1 - eps) * direct_lb(eps') / (1 - ln eps'), present when eps > eps'.
  std::optional<double> relaxed_lb;
  double best_lb = 0.0;
  double ratio = 0.0;  // best_lb / shannon
  std::optional<int> rho;
  std::optional<double> eps_prime;
};

/// 1 - eps.
double shannon_capacity(double epsilon);

/// (1-eps)^2 / (2 (2 - (1-eps)^2)): the rate of the two-bit simulation.
double direct_lb(double epsilon);

/// Smallest rho with eps^rho <= eps', nominally ceil(ln eps' / ln eps).
/// Requires 0 < eps' < eps < 1.
int repetition_factor(double epsilon, double eps_prime);

/// r / (1 - ln eps'): lower bound on C_I(eps) / C_Sh(eps) for eps in (eps', 1)
/// given an achievable rate r on BEC(eps').
double repetition_lb_ratio(double eps_prime, double r);

/// Assembles all bounds that apply at eps and keeps the best one.
BoundReport best_lb(double epsilon, double eps_prime = kDefaultEpsPrime);

}  // namespace becsim
