#include "becsim/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace becsim {

namespace {

void check_unit(double eps, const char* what) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0,1], got " +
                                std::to_string(eps));
  }
}

}  // namespace

double shannon_capacity(double epsilon) {
  check_unit(epsilon, "epsilon");
  return 1.0 - epsilon;
}

double direct_lb(double epsilon) {
  check_unit(epsilon, "epsilon");
  const double q = (1.0 - epsilon) * (1.0 - epsilon);
  return q / (2.0 * (2.0 - q));
}

int repetition_factor(double epsilon, double eps_prime) {
  if (!(eps_prime > 0.0 && eps_prime < epsilon && epsilon < 1.0)) {
    throw std::invalid_argument("repetition needs 0 < eps' < eps < 1 (eps=" +
                                std::to_string(epsilon) +
                                ", eps'=" + std::to_string(eps_prime) + ")");
  }
  int rho = static_cast<int>(std::ceil(std::log(eps_prime) / std::log(epsilon)));
  rho = std::max(rho, 1);
  // Guard the ceiling against rounding in the log ratio.
  while (std::pow(epsilon, rho) > eps_prime) ++rho;
  while (rho > 1 && std::pow(epsilon, rho - 1) <= eps_prime) --rho;
  return rho;
}

double repetition_lb_ratio(double eps_prime, double r) {
  if (!(eps_prime > 0.0 && eps_prime < 1.0)) {
    throw std::invalid_argument("eps' must lie in (0,1)");
  }
  if (!(r >= 0.0)) throw std::invalid_argument("rate must be non-negative");
  return r / (1.0 - std::log(eps_prime));
}

BoundReport best_lb(double epsilon, double eps_prime) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("best_lb needs 0 < eps < 1, got " + std::to_string(epsilon));
  }
  BoundReport rep;
  rep.epsilon = epsilon;
  rep.shannon = shannon_capacity(epsilon);
  rep.direct_lb = direct_lb(epsilon);
  rep.best_lb = rep.direct_lb;
  if (epsilon > eps_prime) {
    const double base_rate = direct_lb(eps_prime);
    rep.eps_prime = eps_prime;
    rep.rho = repetition_factor(epsilon, eps_prime);
    rep.repetition_lb = base_rate / *rep.rho;
    rep.relaxed_lb = repetition_lb_ratio(eps_prime, base_rate) * rep.shannon;
    rep.best_lb = std::max({rep.best_lb, *rep.repetition_lb, *rep.relaxed_lb});
  }
  rep.ratio = rep.best_lb / rep.shannon;
  return rep;
}

}  // namespace becsim
