#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace becsim {

enum class Mode { Simulate, Sweep, Markov, Bounds, Verify };
enum class Format { Csv, Json };

/// Bad flags or an unusable configuration. Maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// --help was requested; what() carries the help text.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Mode mode = Mode::Simulate;
  std::vector<double> epsilons;      // --epsilon or --grid
  std::optional<double> p;           // markov: round erasure probability
  double k = 3.0;
  bool k_given = false;
  std::vector<std::size_t> n0s;
  std::size_t n = 0;                 // markov: chain length
  std::uint64_t trials = 1000;
  std::uint64_t seed = 0;
  double eps_prime = 0.073;
  std::string out;                   // empty: stdout
  Format format = Format::Csv;
  bool monitors = true;
  bool exact = false;                // force the exhaustive P_e oracle
};

struct ExperimentReport {
  std::string body;     // CSV or JSON document
  std::string summary;  // one human-readable line for stderr, may be empty
  int exit_code = 0;    // 0 ok, 1 acceptance check failed
};

/// Outcome of the randomized invariant suite.
struct VerifySummary {
  std::uint64_t runs = 0;
  std::uint64_t successes = 0;
  /// Violations per check name: the simulator monitors plus "chain_replay",
  /// which re-derives the reward-chain trajectory from the trace.
  std::vector<std::pair<std::string, std::uint64_t>> violations;

  std::uint64_t total_violations() const;
};

/// Runs `runs` simulations with monitors on. Run r draws eps uniformly from
/// (0,1), n0 from 1..max_n0, k from 2..6 and a fresh random protocol, all
/// from trial_seed(seed, r).
VerifySummary verify_invariants(std::uint64_t runs, std::uint64_t seed,
                                std::size_t max_n0 = 64);

/// Parses "lo:hi:step" into an inclusive grid.
std::vector<double> parse_grid(const std::string& spec);

/// Parses command-line arguments, excluding the program name. The mode is
/// either the first positional argument or --mode.
ExperimentConfig parse_args(const std::vector<std::string>& args);

/// Runs the configured experiment. Deterministic given the config.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Entry point shared by the CLI binary: parse, run, write the report.
/// Returns the process exit code.
int cli_main(const std::vector<std::string>& args);

/// Floats in reports: 12 significant digits.
std::string format_real(double x);

}  // namespace becsim
