#include "becsim/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "becsim/capacity.hpp"
#include "becsim/hash.hpp"
#include "becsim/reward_chain.hpp"
#include "becsim/simulator.hpp"

namespace becsim {

using ojson = nlohmann::ordered_json;

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

namespace {

const std::map<std::string, Mode> kModes = {{"simulate", Mode::Simulate},
                                            {"sweep", Mode::Sweep},
                                            {"markov", Mode::Markov},
                                            {"bounds", Mode::Bounds},
                                            {"verify", Mode::Verify}};

std::string mode_name(Mode m) {
  for (const auto& [name, mode] : kModes) {
    if (mode == m) return name;
  }
  return "?";
}

// JSON numbers carry the same 12 significant digits as the CSV.
ojson real(double x) {
  if (!std::isfinite(x)) return nullptr;
  return std::stod(format_real(x));
}

template <class T>
ojson maybe(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_floating_point_v<T>) {
    return real(*v);
  } else {
    return *v;
  }
}

std::string csv_cell(const ojson& v) {
  if (v.is_null()) return "";
  if (v.is_number_float()) return format_real(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

/// Rows of ordered JSON objects rendered as CSV (header from the first row's
/// keys) or as {"config": ..., "results": [...]}.
std::string render(const ExperimentConfig& cfg, const ojson& config_json,
                   const std::vector<std::string>& columns, const std::vector<ojson>& rows) {
  std::ostringstream out;
  if (cfg.format == Format::Json) {
    ojson doc;
    doc["config"] = config_json;
    doc["results"] = rows;
    out << doc.dump(2) << '\n';
    return out.str();
  }
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const ojson& row : rows) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out << (c ? "," : "") << csv_cell(row.at(columns[c]));
    }
    out << '\n';
  }
  return out.str();
}

ojson config_to_json(const ExperimentConfig& cfg) {
  ojson j;
  j["mode"] = mode_name(cfg.mode);
  auto eps = ojson::array();
  for (double e : cfg.epsilons) eps.push_back(real(e));
  j["epsilon"] = eps;
  j["p"] = maybe(cfg.p);
  j["k"] = real(cfg.k);
  j["n0"] = cfg.n0s;
  j["n"] = cfg.n;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["eps_prime"] = real(cfg.eps_prime);
  j["monitors"] = cfg.monitors;
  return j;
}

std::string input_bits(std::uint64_t h, int width) {
  std::string s;
  for (int b = 0; b < width; ++b) s.push_back(((h >> b) & 1u) ? '1' : '0');
  return s;
}

std::size_t integral_rounds(double k, std::size_t n0) {
  const double rounds = k * static_cast<double>(n0);
  const double r = std::round(rounds);
  if (std::abs(rounds - r) > 1e-9 || r < 1.0) {
    throw UsageError("k*n0 = " + format_real(rounds) + " is not a positive integer");
  }
  return static_cast<std::size_t>(r);
}

/// The instance simulated at one grid point; everything derives from the seed.
SimConfig grid_instance(const ExperimentConfig& cfg, double eps, std::size_t n0) {
  const std::uint64_t base = hash_combine(mix64(cfg.seed), n0);
  SimConfig sim{.spec = make_random_spec(n0, hash_combine(base, 1)),
                .xA = PartyInput(input_bits(hash_combine(base, 2), 16)),
                .xB = PartyInput(input_bits(hash_combine(base, 3), 16)),
                .rounds = integral_rounds(cfg.k, n0),
                .epsilon = eps,
                .noise = SampledNoise{hash_combine(base, std::bit_cast<std::uint64_t>(eps))}};
  return sim;
}

ExperimentReport run_simulate(const ExperimentConfig& cfg) {
  const bool sweep = cfg.mode == Mode::Sweep;
  std::vector<std::string> columns = {"epsilon", "k",  "n0", "rounds", "trials", "errors",
                                      "p_hat",   "ci", "seed", "p_exact"};
  if (sweep) {
    columns.push_back("min_k");
    columns.push_back("error_bound");
  }

  std::vector<double> eps = cfg.epsilons;
  std::vector<std::size_t> n0s = cfg.n0s;
  std::sort(eps.begin(), eps.end());
  std::sort(n0s.begin(), n0s.end());
  for (std::size_t n0 : n0s) integral_rounds(cfg.k, n0);
  if (cfg.exact) {
    for (std::size_t n0 : n0s) {
      if (integral_rounds(cfg.k, n0) > kMaxEnumeratedRounds) {
        throw UsageError("exact P_e needs at most " + std::to_string(kMaxEnumeratedRounds) +
                         " rounds, n0=" + std::to_string(n0) + " gives " +
                         std::to_string(integral_rounds(cfg.k, n0)));
      }
    }
  }

  std::vector<ojson> rows;
  for (double e : eps) {
    for (std::size_t n0 : n0s) {
      const SimConfig sim = grid_instance(cfg, e, n0);
      const MonteCarloEstimate mc =
          monte_carlo_error(sim, cfg.trials, {.monitors = cfg.monitors, .keep_trace = false});
      ojson row;
      row["epsilon"] = real(e);
      row["k"] = real(cfg.k);
      row["n0"] = n0;
      row["rounds"] = sim.rounds;
      row["trials"] = mc.trials;
      row["errors"] = mc.errors;
      row["p_hat"] = real(mc.estimate);
      row["ci"] = real(mc.ci_halfwidth);
      row["seed"] = cfg.seed;
      row["p_exact"] = nullptr;
      if (sim.rounds <= kMaxEnumeratedRounds) {
        row["p_exact"] = real(exact_error_prob(sim.spec, sim.xA, sim.xB, sim.rounds, e));
      }
      if (sweep) {
        row["min_k"] = e < 1.0 ? real(min_k(e)) : ojson(nullptr);
        row["error_bound"] = nullptr;
        const double p = round_erasure_prob(e);
        if (p > 0.0 && p < 1.0 && cfg.k > min_k(e)) {
          const double hit = hitting_times(ChainParams(p)).hit_tr;
          row["error_bound"] = real(error_upper_bound(n0, cfg.k, e, hit));
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return {render(cfg, config_to_json(cfg), columns, rows), "", 0};
}

ExperimentReport run_markov(const ExperimentConfig& cfg) {
  std::vector<double> ps;
  if (cfg.p) {
    ps.push_back(*cfg.p);
  } else {
    for (double e : cfg.epsilons) ps.push_back(round_erasure_prob(e));
  }
  std::sort(ps.begin(), ps.end());
  const std::vector<std::string> columns = {"p",    "n",      "f_recurrence", "f_closed_form",
                                            "f_dp", "hit_tr", "error_bound"};
  std::vector<ojson> rows;
  for (double p : ps) {
    const ChainParams params(p);
    ojson row;
    row["p"] = real(p);
    row["n"] = cfg.n;
    row["f_recurrence"] = real(expected_reward_recurrence(cfg.n, params));
    row["f_closed_form"] =
        cfg.n >= 1 ? real(expected_reward_closed_form(cfg.n, params)) : ojson(nullptr);
    row["f_dp"] = real(expected_reward_dp(cfg.n, params));
    row["hit_tr"] = nullptr;
    row["error_bound"] = nullptr;
    if (p > 0.0 && p < 1.0) {
      const double hit = hitting_times(params).hit_tr;
      row["hit_tr"] = real(hit);
      const double eps = 1.0 - std::sqrt(1.0 - p);
      if (cfg.n >= 1 && cfg.k > min_k(eps)) {
        row["error_bound"] =
            real(error_upper_bound_rounds(static_cast<double>(cfg.n), cfg.k, eps, hit));
      }
    }
    rows.push_back(std::move(row));
  }
  return {render(cfg, config_to_json(cfg), columns, rows), "", 0};
}

ExperimentReport run_bounds(const ExperimentConfig& cfg) {
  std::vector<double> eps = cfg.epsilons;
  if (eps.empty()) eps = parse_grid("0.001:0.999:0.001");
  std::sort(eps.begin(), eps.end());
  const std::vector<std::string> columns = {"epsilon", "shannon", "direct_lb", "repetition_lb",
                                            "best_lb", "ratio",   "rho"};
  std::vector<ojson> rows;
  double min_ratio = std::numeric_limits<double>::infinity();
  double argmin = 0.0;
  for (double e : eps) {
    const BoundReport b = best_lb(e, cfg.eps_prime);
    ojson row;
    row["epsilon"] = real(b.epsilon);
    row["shannon"] = real(b.shannon);
    row["direct_lb"] = real(b.direct_lb);
    row["repetition_lb"] = maybe(b.repetition_lb);
    row["best_lb"] = real(b.best_lb);
    row["ratio"] = real(b.ratio);
    row["rho"] = maybe(b.rho);
    rows.push_back(std::move(row));
    if (b.ratio < min_ratio) {
      min_ratio = b.ratio;
      argmin = e;
    }
  }
  const bool ok = min_ratio >= kCapacityConstant;
  ExperimentReport rep;
  ojson config = config_to_json(cfg);
  config["min_ratio"] = real(min_ratio);
  rep.body = render(cfg, config, columns, rows);
  rep.summary = "min_ratio=" + format_real(min_ratio) + " at epsilon=" + format_real(argmin) +
                (ok ? " (>= " : " (< ") + format_real(kCapacityConstant) + ")";
  rep.exit_code = ok ? 0 : 1;
  return rep;
}

ExperimentReport run_verify(const ExperimentConfig& cfg) {
  const std::size_t max_n0 = cfg.n0s.empty() ? 64 : cfg.n0s.front();
  const VerifySummary s = verify_invariants(cfg.trials, cfg.seed, max_n0);
  std::vector<ojson> rows;
  for (const auto& [check, count] : s.violations) {
    ojson row;
    row["check"] = check;
    row["runs"] = s.runs;
    row["violations"] = count;
    rows.push_back(std::move(row));
  }
  ExperimentReport rep;
  rep.body = render(cfg, config_to_json(cfg), {"check", "runs", "violations"}, rows);
  rep.summary = "runs=" + std::to_string(s.runs) + " successes=" + std::to_string(s.successes) +
                " violations=" + std::to_string(s.total_violations());
  rep.exit_code = s.total_violations() == 0 ? 0 : 1;
  return rep;
}

}  // namespace

std::uint64_t VerifySummary::total_violations() const {
  std::uint64_t total = 0;
  for (const auto& v : violations) total += v.second;
  return total;
}

VerifySummary verify_invariants(std::uint64_t runs, std::uint64_t seed, std::size_t max_n0) {
  if (max_n0 == 0) throw std::invalid_argument("max_n0 must be positive");
  const std::vector<InvariantKind> kinds = {
      InvariantKind::Gap,        InvariantKind::OddEvenSplit, InvariantKind::EqualLengthRound,
      InvariantKind::ParityTable, InvariantKind::Prefix,      InvariantKind::Transition,
      InvariantKind::ChainEdge,  InvariantKind::Success};
  const std::size_t kReplay = kinds.size();

  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(worker_count(), std::max<std::uint64_t>(runs, 1)));
  std::vector<std::vector<std::uint64_t>> counts(workers,
                                                 std::vector<std::uint64_t>(kinds.size() + 1));
  std::vector<std::uint64_t> successes(workers, 0);

  auto work = [&](unsigned w) {
    for (std::uint64_t r = w; r < runs; r += workers) {
      Rng rng = make_trial_rng(seed, r);
      double eps = 0.0;
      while (eps <= 0.0) eps = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      const std::size_t n0 = 1 + rng() % max_n0;
      const std::size_t k = 2 + rng() % 5;
      SimConfig sim{.spec = make_random_spec(n0, rng()),
                    .xA = PartyInput(input_bits(rng(), 8)),
                    .xB = PartyInput(input_bits(rng(), 8)),
                    .rounds = k * n0,
                    .epsilon = eps,
                    .noise = SampledNoise{rng()}};
      try {
        const SimResult res = run(sim, {.monitors = true, .keep_trace = true});
        successes[w] += res.success;
        // Replay the trace through the reward chain from s1.
        ChainState z = ChainState::S1;
        long total = 0;
        bool ok = res.trace.empty() || res.trace.front().chain_state == ChainState::S1;
        for (std::size_t i = 0; ok && i < res.trace.size(); ++i) {
          const RoundRecord& rec = res.trace[i];
          ok = rec.chain_state == z;
          const ChainStep edge = step(z, rec.erased);
          ok = ok && edge.reward == rec.reward;
          total += rec.reward;
          z = edge.next;
        }
        if (!ok || total != res.totalReward) ++counts[w][kReplay];
      } catch (const InvariantViolation& v) {
        const auto it = std::find(kinds.begin(), kinds.end(), v.kind());
        ++counts[w][static_cast<std::size_t>(it - kinds.begin())];
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }

  VerifySummary s;
  s.runs = runs;
  for (unsigned w = 0; w < workers; ++w) s.successes += successes[w];
  for (std::size_t c = 0; c <= kinds.size(); ++c) {
    std::uint64_t total = 0;
    for (unsigned w = 0; w < workers; ++w) total += counts[w][c];
    s.violations.emplace_back(c < kinds.size() ? to_string(kinds[c]) : "chain_replay", total);
  }
  return s;
}

std::vector<double> parse_grid(const std::string& spec) {
  double lo = 0, hi = 0, stepv = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(spec);
  if (!(in >> lo >> c1 >> hi >> c2 >> stepv) || c1 != ':' || c2 != ':' || !in.eof()) {
    throw UsageError("grid must look like lo:hi:step, got '" + spec + "'");
  }
  if (!(stepv > 0.0) || hi < lo) throw UsageError("grid needs step > 0 and hi >= lo");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / stepv + 1e-9)) + 1;
  std::vector<double> grid;
  grid.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    // Snap to 12 significant digits so 0.001*j style grids print cleanly.
    grid.push_back(std::stod(format_real(lo + static_cast<double>(j) * stepv)));
  }
  return grid;
}

ExperimentConfig parse_args(const std::vector<std::string>& args) {
  CLI::App app{"Erasure-channel interactive simulation toolkit", "becsim"};
  ExperimentConfig cfg;
  std::string mode_pos, mode_opt, grid, format;
  std::vector<double> eps;
  std::optional<double> p;
  std::vector<std::size_t> n0s;

  app.add_option("command", mode_pos, "simulate|sweep|markov|bounds|verify");
  app.add_option("--mode", mode_opt, "same as the positional mode");
  app.add_option("--epsilon", eps, "erasure probability (comma list allowed)")->delimiter(',');
  app.add_option("--eps-prime", cfg.eps_prime, "reduced-channel erasure probability");
  app.add_option("--p", p, "round erasure probability (markov)");
  auto* kopt = app.add_option("--k", cfg.k, "round overhead; rounds = k*n0");
  app.add_option("--n0", n0s, "protocol length (comma list allowed)")->delimiter(',');
  app.add_option("--n", cfg.n, "chain length (markov)");
  app.add_option("--trials", cfg.trials, "Monte-Carlo trials or verify runs");
  app.add_option("--seed", cfg.seed, "master seed");
  app.add_option("--grid", grid, "epsilon grid lo:hi:step (p grid in markov mode)");
  app.add_option("--out", cfg.out, "report path (default stdout)");
  app.add_option("--format", format, "csv|json");
  app.add_flag("--no-monitors", [&](std::int64_t) { cfg.monitors = false; },
               "disable invariant monitors in simulate/sweep");
  app.add_flag("--exact", cfg.exact, "require the exhaustive P_e oracle");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (!mode_pos.empty() && !mode_opt.empty() && mode_pos != mode_opt) {
    throw UsageError("conflicting modes '" + mode_pos + "' and '" + mode_opt + "'");
  }
  const std::string mode = mode_pos.empty() ? mode_opt : mode_pos;
  const auto it = kModes.find(mode);
  if (it == kModes.end()) throw UsageError("unknown or missing mode '" + mode + "'");
  cfg.mode = it->second;
  cfg.k_given = kopt->count() > 0;

  if (!grid.empty() && !eps.empty()) throw UsageError("use either --epsilon or --grid");
  cfg.epsilons = grid.empty() ? eps : parse_grid(grid);
  cfg.p = p;
  cfg.n0s = n0s;

  if (format.empty()) {
    cfg.format = cfg.mode == Mode::Markov ? Format::Json : Format::Csv;
  } else if (format == "csv") {
    cfg.format = Format::Csv;
  } else if (format == "json") {
    cfg.format = Format::Json;
  } else {
    throw UsageError("--format must be csv or json");
  }
  if (cfg.trials == 0) throw UsageError("--trials must be at least 1");

  auto check_eps = [](double e, double lo_open, const char* what) {
    if (!(e > lo_open && e < 1.0) && !(lo_open < 0 && e == 0.0)) {
      throw UsageError(std::string(what) + " out of range: " + format_real(e));
    }
  };
  switch (cfg.mode) {
    case Mode::Simulate:
    case Mode::Sweep:
      if (cfg.epsilons.empty()) throw UsageError("--epsilon (or --grid) is required");
      if (cfg.n0s.empty()) throw UsageError("--n0 is required");
      if (!cfg.k_given) throw UsageError("--k is required");
      for (double e : cfg.epsilons) {
        if (!(e >= 0.0 && e <= 1.0)) throw UsageError("epsilon must lie in [0,1]");
      }
      for (std::size_t n0 : cfg.n0s) {
        if (n0 == 0) throw UsageError("--n0 must be positive");
        integral_rounds(cfg.k, n0);
      }
      break;
    case Mode::Markov:
      if (cfg.p && !cfg.epsilons.empty()) throw UsageError("use either --p or --epsilon/--grid");
      if (!cfg.p && cfg.epsilons.empty()) throw UsageError("--p (or --epsilon/--grid) is required");
      if (cfg.p && !(*cfg.p >= 0.0 && *cfg.p <= 1.0)) throw UsageError("--p must lie in [0,1]");
      for (double e : cfg.epsilons) {
        if (!(e >= 0.0 && e <= 1.0)) throw UsageError("epsilon must lie in [0,1]");
      }
      break;
    case Mode::Bounds:
      for (double e : cfg.epsilons) check_eps(e, 0.0, "epsilon");
      check_eps(cfg.eps_prime, 0.0, "--eps-prime");
      break;
    case Mode::Verify:
      if (cfg.n0s.size() > 1 || (!cfg.n0s.empty() && cfg.n0s.front() == 0)) {
        throw UsageError("verify takes a single positive --n0 (maximum protocol length)");
      }
      break;
  }
  return cfg;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  switch (config.mode) {
    case Mode::Simulate:
    case Mode::Sweep: return run_simulate(config);
    case Mode::Markov: return run_markov(config);
    case Mode::Bounds: return run_bounds(config);
    case Mode::Verify: return run_verify(config);
  }
  throw std::logic_error("unknown mode");
}

int cli_main(const std::vector<std::string>& args) {
  ExperimentConfig cfg;
  try {
    cfg = parse_args(args);
  } catch (const HelpRequested& h) {
    std::cout << h.what();
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n(run with --help for the flag list)\n";
    return 2;
  }

  ExperimentReport rep;
  try {
    rep = run_experiment(cfg);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::length_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  if (cfg.out.empty()) {
    std::cout << rep.body;
  } else {
    std::ofstream f(cfg.out, std::ios::binary | std::ios::trunc);
    if (!f || !(f << rep.body) || !f.flush()) {
      std::cerr << "error: cannot write report to '" << cfg.out << "'\n";
      return 2;
    }
  }
  if (!rep.summary.empty()) std::cerr << rep.summary << '\n';
  return rep.exit_code;
}

}  // namespace becsim
