#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "blmchain/chain_io.hpp"
#include "blmchain/chain_validation.hpp"
#include "blmchain/continuous.hpp"
#include "blmchain/simulator.hpp"
#include "blmchain/tsp.hpp"
#include "json.hpp"

namespace blmchain::cli {

// Exit codes shared by every subcommand.
inline constexpr int exit_ok = 0;
inline constexpr int exit_invalid = 1;
inline constexpr int exit_usage = 2;

// Desk-scale defaults for TSP simulations (virtual seconds, iterations per second).
inline constexpr double default_tsp_speed = 2.0e6;
inline constexpr std::size_t default_t = 5;

/// Smallest K for which the constrained TSP neighbourhood shrinks as K
/// falls: the neighbourhood is symmetric in K around (N-1)/2, so only the
/// upper half gives a monotone difficulty scale.
inline std::uint16_t tsp_k_min(std::size_t cities) {
  return static_cast<std::uint16_t>(std::max<std::size_t>(1, cities / 2));
}

/// Largest default K for TSP. At K = N-1 every free city is in S, the
/// constraint vanishes and warm starts stop perturbing the route, so the
/// chain settles on one local optimum; one city is always left out.
inline std::uint16_t tsp_k_max(std::size_t cities) {
  return static_cast<std::uint16_t>(std::max<std::size_t>(tsp_k_min(cities), cities >= 3 ? cities - 2 : 1));
}

// ---------------------------------------------------------------------------
// Simulation config

struct Setup {
  sim::SimConfig config;
  ProblemKind kind = ProblemKind::tsp;
  std::optional<tsp::TspProblem> tsp;
  std::optional<continuous::ContinuousProblem> continuous;
};

namespace detail {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_error, std::string(key) + ": " + e.what());
  }
}

inline tsp::TspInstance load_instance(const std::string& path) {
  try {
    return tsp::instance_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, path + ": " + e.what());
  }
}

}  // namespace detail

/// Builds a simulation from config JSON. Relative instance paths resolve
/// against `base_dir`.
inline Setup load_setup(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  using detail::get_or;
  if (!j.is_object()) throw Error(ErrorCode::config_error, "config must be a JSON object");
  Setup s;
  auto& c = s.config;
  c.miners = get_or<std::uint32_t>(j, "miners", 3);
  c.seed = get_or<std::uint64_t>(j, "seed", 1);
  c.block_limit = get_or<std::uint64_t>(j, "blocks", 60);
  c.speeds = get_or<std::vector<double>>(j, "speeds", {});
  c.latency_s = get_or<double>(j, "latency_s", 0.1);
  c.quantum_s = get_or<double>(j, "quantum_s", 0.01);
  c.validation_budget = get_or<std::uint64_t>(j, "validation_budget", 20'000);
  c.max_virtual_s = get_or<double>(j, "max_virtual_s", 1e6);
  c.fraud_heights = get_or<std::vector<std::uint64_t>>(j, "fraud_heights", {});
  const auto mode = get_or<std::string>(j, "mode", "virtual");
  if (mode != "virtual" && mode != "wall_clock") throw Error(ErrorCode::config_error, "mode must be virtual or wall_clock");
  c.mode = mode == "virtual" ? sim::ClockMode::virtual_time : sim::ClockMode::wall_clock;
  const auto tx = j.value("transactions", nlohmann::json::object());
  c.transactions.count = get_or<std::uint32_t>(tx, "count", 4);
  c.transactions.payload_bytes = get_or<std::uint32_t>(tx, "payload_bytes", 32);
  const auto pol = j.value("policy", nlohmann::json::object());
  c.policy.stall_limit = get_or<std::uint64_t>(pol, "stall_limit", 0);
  c.policy.exhaustive_cap = get_or<std::uint64_t>(pol, "exhaustive_cap", c.policy.exhaustive_cap);
  c.policy.certify_samples = get_or<std::uint64_t>(pol, "certify_samples", c.policy.certify_samples);

  if (!j.contains("problem")) throw Error(ErrorCode::config_error, "config needs a problem");
  const auto& p = j.at("problem");
  const auto kind = get_or<std::string>(p, "kind", "");
  std::size_t dims = 0;
  std::uint16_t k_min = 1;
  std::uint16_t k_max = 0;
  double speed = 0.0;
  if (kind == "tsp") {
    s.kind = ProblemKind::tsp;
    tsp::TspInstance inst;
    if (p.contains("instance")) {
      std::filesystem::path path = get_or<std::string>(p, "instance", "");
      if (path.is_relative()) path = base_dir / path;
      inst = detail::load_instance(path.string());
    } else {
      inst = tsp::generate_instance(get_or<std::size_t>(p, "cities", 25), get_or<std::uint64_t>(p, "instance_seed", 7));
    }
    s.tsp.emplace(std::move(inst), get_or<std::size_t>(p, "t", default_t));
    dims = s.tsp->dimension();
    k_min = tsp_k_min(s.tsp->instance().size());
    k_max = tsp_k_max(s.tsp->instance().size());
    speed = default_tsp_speed;
  } else if (kind == "continuous") {
    s.kind = ProblemKind::continuous;
    s.continuous.emplace(continuous::spec_from_json(p));
    dims = s.continuous->dimension();
    k_max = static_cast<std::uint16_t>(dims);
    speed = 2.0e4;
  } else {
    throw Error(ErrorCode::config_error, "problem.kind must be tsp or continuous");
  }
  c.speed = get_or<double>(j, "speed", speed);

  const auto d = j.value("difficulty", nlohmann::json::object());
  c.difficulty.k_min = get_or<std::uint16_t>(d, "k_min", k_min);
  c.difficulty.k_max = get_or<std::uint16_t>(d, "k_max", k_max);
  c.difficulty.window = get_or<std::uint32_t>(d, "window", 10);
  c.difficulty.low_s = get_or<double>(d, "low_s", 0.5);
  c.difficulty.high_s = get_or<double>(d, "high_s", 2.0);
  c.k0 = get_or<std::uint16_t>(d, "k0", c.difficulty.k_min);
  if (c.difficulty.k_max > dims) throw Error(ErrorCode::config_error, "k_max exceeds the problem dimension");
  c.check();
  return s;
}

// ---------------------------------------------------------------------------
// Output formatting

inline std::string results_csv(const std::vector<sim::BlockRecord>& records) {
  std::string out = "height,miner_id,k,block_time_s,pow_value,chain_best\n";
  for (const auto& r : records) {
    out += std::to_string(r.height) + ',' + std::to_string(r.miner) + ',' + std::to_string(r.k) + ',' +
           format_fixed(r.block_time_s, 3) + ',' + format_number(r.pow_value) + ',' +
           format_number(r.chain_best) + '\n';
  }
  return out;
}

inline std::string rejections_csv(const std::vector<sim::Rejection>& rejections) {
  std::string out = "virtual_time,block_id,reason\n";
  for (const auto& r : rejections) {
    out += format_fixed(r.virtual_time_s, 6) + ',' + to_hex(r.block_id) + ',' + r.reason + '\n';
  }
  return out;
}

inline std::string route_text(const tsp::Route& r) {
  std::string out = "0";
  for (auto c : r.cities) out += ' ' + std::to_string(c);
  return out + " 0";
}

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_gen_tsp(std::size_t n, std::uint64_t seed, const std::string& out_path, std::ostream& out,
                       std::ostream& err) {
  if (n < 2) {
    err << "gen-tsp: --n must be at least 2\n";
    return exit_usage;
  }
  auto inst = tsp::generate_instance(n, seed);
  write_file(out_path, tsp::instance_to_json(inst).dump() + "\n");
  out << "wrote " << out_path << ": " << n << " cities, seed " << seed << ", sha256 "
      << to_hex(tsp::instance_digest(inst)) << '\n';
  return exit_ok;
}

inline int cmd_solve_exact(const std::string& instance_path, std::size_t cap, std::ostream& out,
                           std::ostream& err) {
  auto inst = detail::load_instance(instance_path);
  if (inst.size() > cap) {
    err << "solve-exact: " << inst.size() << " cities exceed the exact-solver cap of " << cap << '\n';
    return exit_usage;
  }
  auto tour = tsp::held_karp(inst, cap);
  out << format_fixed(tour.length, 6) << '\n' << route_text(tour.route) << '\n';
  return exit_ok;
}

struct MineOptions {
  std::string instance;
  std::string objective = "demo";
  std::size_t dimension = 1;
  std::size_t t = default_t;
  std::uint16_t k = 1;
  std::uint64_t seed = 1;
  std::uint64_t budget = 100'000'000;
  std::string prev;
};

inline std::string state_text(const tsp::Route& r) { return route_text(r); }

inline std::string state_text(const continuous::ContinuousState& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + format_canonical(s[i]);
  return out;
}

namespace detail {
template <SearchProblem P>
int mine_and_report(const P& problem, const MineOptions& o, std::ostream& out, std::ostream& err) {
  Hash256 prev = Hash256::zero();
  if (!o.prev.empty()) {
    auto h = hash_from_hex(o.prev);
    if (!h) {
      err << "mine: --prev must be 64 lowercase hex digits\n";
      return exit_usage;
    }
    prev = *h;
  }
  if (o.k < 1 || o.k > problem.dimension()) {
    err << "mine: --k must lie in [1, " << problem.dimension() << "]\n";
    return exit_usage;
  }
  const auto txs = sim::block_transactions(o.seed, 1, 0, {});
  const Hash256 seed = seed_hash(prev, merkle_root(txs));
  Rng rng = make_rng(o.seed, "mine");
  auto r = mine(problem, seed, o.k, std::nullopt, o.budget, rng);
  if (r.status != MineStatus::certified) {
    err << "mine: budget of " << o.budget << " iterations exhausted\n";
    return exit_invalid;
  }
  Rng vrng = make_rng(o.seed, "validate");
  auto check = validate_pow(problem, seed, *r.pow, o.k, tsp::default_exhaustive_cap, vrng);
  out << "seed_hash " << to_hex(seed) << '\n';
  out << "index_set";
  for (auto i : r.pow->index_set) out << ' ' << i;
  out << '\n' << "objective " << format_canonical(r.pow->objective_value) << '\n';
  out << "theta " << state_text(problem.decode(r.pow->theta_star)) << '\n';
  out << "iterations " << r.iterations << "\nrestarts " << r.restarts << '\n';
  out << "validation " << to_string(check.verdict) << (check.exhaustive ? " (exhaustive)" : " (sampled)") << '\n';
  return check.accepted() ? exit_ok : exit_invalid;
}
}  // namespace detail

inline int cmd_mine(const MineOptions& o, std::ostream& out, std::ostream& err) {
  if (!o.instance.empty()) {
    tsp::TspProblem problem(detail::load_instance(o.instance), o.t);
    return detail::mine_and_report(problem, o, out, err);
  }
  continuous::ContinuousSpec spec;
  if (o.objective == "sphere") {
    spec.objective = continuous::Objective::sphere;
    spec.lower = -5.0;
    spec.upper = 5.0;
  } else if (o.objective != "demo") {
    err << "mine: unknown objective " << o.objective << '\n';
    return exit_usage;
  }
  spec.dimension = o.dimension;
  continuous::ContinuousProblem problem(spec);
  return detail::mine_and_report(problem, o, out, err);
}

struct SimulateOptions {
  std::string config;
  std::optional<std::uint32_t> miners;
  std::optional<std::uint64_t> blocks;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool exact = false;
  bool wall_clock = false;
};

namespace detail {
template <SearchProblem P>
sim::SimResult simulate_and_write(const P& problem, const sim::SimConfig& config, const std::string& dir,
                                  std::ostream& out) {
  auto result = sim::run_simulation(problem, config);
  std::filesystem::create_directories(dir);
  const auto base = std::filesystem::path(dir);
  write_file((base / "chain.json").string(), chain_to_string(result.chain));
  write_file((base / "results.csv").string(), results_csv(result.records));
  write_file((base / "rejections.csv").string(), rejections_csv(result.rejections));
  out << "blocks " << result.chain.height() << '\n';
  out << "virtual_seconds " << format_fixed(result.elapsed_s, 3) << '\n';
  out << "rejections " << result.rejections.size() << '\n';
  if (!result.records.empty()) out << "chain_best " << format_number(result.records.back().chain_best) << '\n';
  return result;
}
}  // namespace detail

inline int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(o.config));
  } catch (const nlohmann::json::exception& e) {
    err << "simulate: " << o.config << ": " << e.what() << '\n';
    return exit_usage;
  }
  if (o.miners) j["miners"] = *o.miners;
  if (o.blocks) j["blocks"] = *o.blocks;
  if (o.seed) j["seed"] = *o.seed;
  if (o.wall_clock) j["mode"] = "wall_clock";
  Setup s = load_setup(j, std::filesystem::path(o.config).parent_path());
  if (s.kind == ProblemKind::continuous) {
    if (o.exact) {
      err << "simulate: --exact needs a TSP problem\n";
      return exit_usage;
    }
    auto r = detail::simulate_and_write(*s.continuous, s.config, o.out_dir, out);
    return r.completed ? exit_ok : exit_invalid;
  }
  const auto& problem = *s.tsp;
  if (o.exact && problem.instance().size() > tsp::default_held_karp_cap) {
    err << "simulate: --exact limited to " << tsp::default_held_karp_cap << " cities\n";
    return exit_usage;
  }
  auto r = detail::simulate_and_write(problem, s.config, o.out_dir, out);
  if (o.exact && !r.records.empty()) {
    const auto optimum = tsp::held_karp(problem.instance());
    tsp::Route best;
    double best_len = std::numeric_limits<double>::infinity();
    for (std::size_t h = 1; h < r.chain.blocks.size(); ++h) {
      const auto& pow = r.chain.blocks[h].pow;
      if (pow.objective_value < best_len) {
        best_len = pow.objective_value;
        best = problem.decode(pow.theta_star);
      }
    }
    const auto refined = tsp::post_optimize(problem.instance(), best, problem.threshold());
    const double refined_len = problem.objective(refined);
    out << "optimum " << format_fixed(optimum.length, 6) << '\n';
    out << "gap_pct " << format_fixed(100.0 * (best_len / optimum.length - 1.0), 3) << '\n';
    out << "post_optimized " << format_fixed(refined_len, 6) << '\n';
    out << "post_optimized_gap_pct " << format_fixed(100.0 * (refined_len / optimum.length - 1.0), 3) << '\n';
  }
  if (!r.completed) {
    err << "simulate: stopped before reaching the block limit\n";
    return exit_invalid;
  }
  return exit_ok;
}

struct ValidateOptions {
  std::string chain;
  std::string instance;
  std::uint64_t budget = tsp::default_exhaustive_cap;
  std::uint64_t seed = 0;
};

inline int cmd_validate(const ValidateOptions& o, std::ostream& out, std::ostream& err) {
  ParsedChain parsed;
  try {
    parsed = chain_from_string(read_file(o.chain));
  } catch (const Error& e) {
    err << "validate: " << e.what() << '\n';
    return exit_usage;
  }
  const Chain& chain = parsed.chain;
  ValidationReport report;
  if (problem_kind(chain.params.problem) == ProblemKind::tsp) {
    if (o.instance.empty()) {
      err << "validate: TSP chains need --instance\n";
      return exit_usage;
    }
    const auto t = detail::get_or<std::size_t>(chain.params.problem, "t", default_t);
    std::optional<tsp::TspProblem> problem;
    try {
      problem.emplace(detail::load_instance(o.instance), t);
    } catch (const Error& e) {
      err << "validate: " << e.what() << '\n';
      return exit_usage;
    }
    if (problem->describe() != chain.params.problem) {
      err << "validate: instance does not match the chain's problem\n";
      return exit_usage;
    }
    report = validate_chain(chain, *problem, o.budget, o.seed);
  } else {
    std::optional<continuous::ContinuousProblem> problem;
    try {
      problem.emplace(continuous::spec_from_json(chain.params.problem));
    } catch (const Error& e) {
      err << "validate: " << e.what() << '\n';
      return exit_usage;
    }
    report = validate_chain(chain, *problem, o.budget, o.seed);
  }
  if (auto h = parsed.first_id_mismatch(); h && (report.valid || *h < report.height)) {
    report = ValidationReport::fail(*h, "declared block id mismatch");
  }
  if (!report.valid) {
    out << "INVALID at height " << report.height << ": " << report.reason << '\n';
    return exit_invalid;
  }
  out << "VALID (" << chain.height() << " blocks)\n";
  return exit_ok;
}

// ---------------------------------------------------------------------------
// Argument parsing

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"BLM proof-of-work blockchain toolkit", "blmchain"};
  app.require_subcommand(1);

  std::size_t n = 25;
  std::uint64_t gen_seed = 7;
  std::string gen_out = "instance.json";
  auto* gen = app.add_subcommand("gen-tsp", "Generate a seeded Euclidean TSP instance");
  gen->add_option("--n", n, "Number of cities including the depot")->required();
  gen->add_option("--seed", gen_seed, "Instance seed");
  gen->add_option("--out", gen_out, "Output path");

  std::string exact_instance;
  std::size_t cap = tsp::default_held_karp_cap;
  auto* solve = app.add_subcommand("solve-exact", "Exact tour by Held-Karp dynamic programming");
  solve->add_option("instance,--instance", exact_instance, "Instance JSON")->required();
  solve->add_option("--cap", cap, "Largest instance accepted");

  MineOptions mo;
  auto* mine_cmd = app.add_subcommand("mine", "Mine one BLM proof and validate it");
  mine_cmd->add_option("--instance", mo.instance, "TSP instance JSON (omit for a continuous objective)");
  mine_cmd->add_option("--objective", mo.objective, "Continuous objective: demo or sphere");
  mine_cmd->add_option("--dimension", mo.dimension, "Continuous dimension");
  mine_cmd->add_option("--t", mo.t, "TSP substitution threshold T");
  mine_cmd->add_option("--k", mo.k, "Subspace size K")->required();
  mine_cmd->add_option("--seed", mo.seed, "Seed for transactions and search");
  mine_cmd->add_option("--budget", mo.budget, "Iteration budget");
  mine_cmd->add_option("--prev", mo.prev, "Previous block hash (hex)");

  SimulateOptions so;
  std::uint32_t miners = 0;
  std::uint64_t blocks = 0;
  std::uint64_t sim_seed = 0;
  auto* simulate = app.add_subcommand("simulate", "Run a multi-miner simulation");
  simulate->add_option("--config", so.config, "Config JSON")->required();
  auto* miners_opt = simulate->add_option("--miners", miners, "Override miner count");
  auto* blocks_opt = simulate->add_option("--blocks", blocks, "Override block limit");
  auto* seed_opt = simulate->add_option("--seed", sim_seed, "Override master seed");
  simulate->add_option("--out", so.out_dir, "Output directory");
  simulate->add_flag("--exact", so.exact, "Compare against the exact optimum");
  simulate->add_flag("--wall-clock", so.wall_clock, "Real threads instead of the virtual clock");

  ValidateOptions vo;
  auto* validate = app.add_subcommand("validate", "Validate a chain file");
  validate->add_option("chain,--chain", vo.chain, "Chain JSON")->required();
  validate->add_option("--instance", vo.instance, "TSP instance JSON");
  validate->add_option("--budget", vo.budget, "Neighbour checks per block");
  validate->add_option("--seed", vo.seed, "Validator sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return exit_usage;
  }

  try {
    if (*gen) return cmd_gen_tsp(n, gen_seed, gen_out, out, err);
    if (*solve) return cmd_solve_exact(exact_instance, cap, out, err);
    if (*mine_cmd) return cmd_mine(mo, out, err);
    if (*simulate) {
      if (*miners_opt) so.miners = miners;
      if (*blocks_opt) so.blocks = blocks;
      if (*seed_opt) so.seed = sim_seed;
      return cmd_simulate(so, out, err);
    }
    if (*validate) return cmd_validate(vo, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  }
  return exit_usage;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"blmchain"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace blmchain::cli
