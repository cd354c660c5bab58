#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <set>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "blmchain/chain.hpp"
#include "blmchain/chain_validation.hpp"
#include "blmchain/error.hpp"
#include "blmchain/random.hpp"
#include "blmchain/search.hpp"
#include "blmchain/validation.hpp"

namespace blmchain::sim {

struct TransactionRule {
  std::uint32_t count = 4;          // 0 is padded to 1
  std::uint32_t payload_bytes = 32;

  bool operator==(const TransactionRule&) const = default;
};

inline std::vector<Transaction> synthesize_transactions(Rng& rng, const TransactionRule& rule) {
  const std::uint32_t count = std::max<std::uint32_t>(rule.count, 1);
  const std::uint32_t size = std::max<std::uint32_t>(rule.payload_bytes, 1);
  std::vector<Transaction> out(count);
  for (auto& tx : out) {
    tx.payload.resize(size);
    for (auto& b : tx.payload) b = static_cast<std::uint8_t>(rng() >> 56);
  }
  return out;
}

/// Payloads for the block a miner proposes at `height`; fixed by (seed, height, miner).
inline std::vector<Transaction> block_transactions(std::uint64_t seed, std::uint64_t height,
                                                   std::uint32_t miner, const TransactionRule& rule) {
  Rng rng = make_rng(seed, "transactions", height, miner);
  return synthesize_transactions(rng, rule);
}

enum class ClockMode { virtual_time, wall_clock };

struct SimConfig {
  std::uint32_t miners = 3;
  std::vector<double> speeds;  // iterations per second, one per miner; empty means `speed` for all
  double speed = 1e6;
  std::uint64_t seed = 1;
  std::uint16_t k0 = 1;
  DifficultyParams difficulty{1, 1, 10, 0.5, 2.0};
  std::uint64_t block_limit = 60;
  TransactionRule transactions;
  std::vector<std::uint64_t> fraud_heights;
  double latency_s = 0.1;
  double quantum_s = 0.01;
  std::uint64_t validation_budget = 20'000;
  SearchPolicy policy;
  double max_virtual_s = 1e6;
  ClockMode mode = ClockMode::virtual_time;

  double speed_of(std::uint32_t miner) const { return speeds.empty() ? speed : speeds.at(miner); }

  void check() const {
    if (miners < 1) throw Error(ErrorCode::config_error, "need at least one miner");
    if (block_limit < 1) throw Error(ErrorCode::config_error, "block_limit must be >= 1");
    if (!speeds.empty() && speeds.size() != miners) {
      throw Error(ErrorCode::config_error, "one speed per miner required");
    }
    for (std::uint32_t m = 0; m < miners; ++m) {
      if (!(speed_of(m) > 0.0)) throw Error(ErrorCode::config_error, "speed factors must be positive");
    }
    if (!(latency_s >= 0.0)) throw Error(ErrorCode::config_error, "latency must be >= 0");
    if (!(quantum_s > 0.0)) throw Error(ErrorCode::config_error, "quantum must be positive");
    if (validation_budget < 1) throw Error(ErrorCode::config_error, "validation budget must be >= 1");
    difficulty.check();
    if (k0 < difficulty.k_min || k0 > difficulty.k_max) {
      throw Error(ErrorCode::config_error, "k0 outside [k_min, k_max]");
    }
    for (auto h : fraud_heights) {
      if (h < 1) throw Error(ErrorCode::config_error, "fraud height must be >= 1");
    }
  }
};

struct BlockRecord {
  std::uint64_t height = 0;
  std::uint32_t miner = 0;
  std::uint16_t k = 0;
  double block_time_s = 0.0;
  double pow_value = 0.0;
  double chain_best = 0.0;

  bool operator==(const BlockRecord&) const = default;
};

struct Rejection {
  double virtual_time_s = 0.0;
  Hash256 block_id;
  std::string reason;
  std::uint32_t miner = 0;  // who rejected it
  Bytes counterexample;     // encoded θ' when the reason is a found or gossiped counterexample

  bool operator==(const Rejection&) const = default;
};

struct SimResult {
  Chain chain;                    // the longest final chain (lowest miner id on ties)
  std::vector<Chain> miner_chains;
  std::vector<BlockRecord> records;
  std::vector<Rejection> rejections;
  std::vector<Hash256> injected;  // ids of fraudulent blocks
  std::vector<Block> injected_blocks;
  bool completed = false;
  double elapsed_s = 0.0;
  std::uint64_t events = 0;
};

/// Longer chain wins; at equal length the incumbent stays (first seen).
inline const std::vector<Block>& fork_choice(const std::vector<Block>& current,
                                             const std::vector<Block>& candidate) {
  return candidate.size() > current.size() ? candidate : current;
}

using ChainPtr = std::shared_ptr<const std::vector<Block>>;

/// Per-miner consensus state and the rules every miner applies, independent of
/// how time and concurrency are driven.
template <SearchProblem P>
class Network {
 public:
  using State = typename P::State;

  struct Attempt {
    std::uint64_t epoch = 0;
    std::uint16_t k = 0;
    std::vector<Transaction> transactions;
    Hash256 parent;
    Hash256 merkle;
    IndexSet index_set;
    std::optional<State> warm_start;
    std::uint64_t rng_seed = 0;
  };

  struct Message {
    enum class Kind { block, counterexample } kind = Kind::block;
    std::uint32_t to = 0;
    ChainPtr chain;       // sender's chain for block messages
    Hash256 block;        // disputed block for counterexamples
    Bytes counterexample;
  };

  Network(const P& problem, const SimConfig& config)
      : problem_(&problem), config_(config) {
    config_.check();
    params_.k0 = config_.k0;
    params_.difficulty = config_.difficulty;
    params_.problem = problem.describe();
    genesis_ = make_genesis(params_);
    nodes_.resize(config_.miners);
    for (std::uint32_t m = 0; m < config_.miners; ++m) {
      nodes_[m].chain = {genesis_};
      nodes_[m].valid.insert(block_id(genesis_.header));
      nodes_[m].rng = make_rng(config_.seed, "miner", m);
      nodes_[m].validator_rng = make_rng(config_.seed, "validator", m);
    }
    adversary_rng_ = make_rng(config_.seed, "adversary");
    miner_of_[block_id(genesis_.header)] = 0;
  }

  const ChainParams& params() const noexcept { return params_; }
  std::uint32_t miners() const noexcept { return config_.miners; }
  const Attempt& attempt(std::uint32_t m) const { return nodes_[m].attempt; }
  std::uint64_t epoch(std::uint32_t m) const { return nodes_[m].attempt.epoch; }
  const std::vector<Block>& chain(std::uint32_t m) const { return nodes_[m].chain; }
  bool finished() const noexcept { return finished_; }
  const std::vector<Rejection>& rejections() const noexcept { return rejections_; }
  const std::vector<Hash256>& injected() const noexcept { return injected_; }
  const std::vector<Block>& injected_blocks() const noexcept { return injected_blocks_; }

  /// Sets up a fresh attempt on top of the miner's current tip.
  void start_attempt(std::uint32_t m) {
    Node& n = nodes_[m];
    Attempt a;
    a.epoch = n.attempt.epoch + 1;
    a.k = next_difficulty(n.chain, params_.difficulty);
    const std::uint64_t height = n.chain.size();
    a.transactions = block_transactions(config_.seed, height, m, config_.transactions);
    a.parent = block_id(n.chain.back().header);
    a.merkle = merkle_root(a.transactions);
    a.index_set = index_select(seed_hash(a.parent, a.merkle), static_cast<std::uint32_t>(problem_->dimension()), a.k);
    if (n.chain.size() > 1) a.warm_start = problem_->decode(n.chain.back().pow.theta_star);
    a.rng_seed = n.rng();
    n.attempt = std::move(a);
  }

  /// Miner `m` certified `pow` for its current attempt at time `now_us`.
  /// Returns the gossip to deliver; an outdated epoch is ignored.
  std::vector<Message> on_found(std::uint32_t m, std::uint64_t epoch, const ProofOfWork& pow,
                                std::uint64_t now_us) {
    std::vector<Message> out;
    Node& n = nodes_[m];
    if (finished_ || epoch != n.attempt.epoch) return out;
    Block b;
    b.transactions = n.attempt.transactions;
    b.pow = pow;
    b.header.prev_block_hash = n.attempt.parent;
    b.header.merkle_root = n.attempt.merkle;
    b.header.timestamp_ms = std::max(now_us / 1000, n.chain.back().header.timestamp_ms);
    b.header.difficulty_k = n.attempt.k;
    b.header.pow_commitment = pow_commitment(pow);
    const Hash256 id = block_id(b.header);
    miner_of_[id] = m;
    n.chain.push_back(std::move(b));
    n.valid.insert(id);
    broadcast(m, out);
    if (n.chain.size() - 1 >= config_.block_limit) {
      finished_ = true;
    } else {
      start_attempt(m);
    }
    maybe_inject(n.chain, now_us, out);
    return out;
  }

  /// Applies a gossip message to its recipient.
  std::vector<Message> on_message(const Message& msg, std::uint64_t now_us) {
    std::vector<Message> out;
    if (msg.kind == Message::Kind::block) {
      receive_chain(msg.to, *msg.chain, now_us, out);
    } else {
      receive_counterexample(msg.to, msg.block, msg.counterexample, now_us);
    }
    return out;
  }

  std::uint32_t miner_of(const Hash256& id) const {
    auto it = miner_of_.find(id);
    return it == miner_of_.end() ? 0 : it->second;
  }

  std::uint32_t adversary_id() const noexcept { return config_.miners; }

 private:
  struct Node {
    std::vector<Block> chain;
    std::set<Hash256> valid;
    std::set<Hash256> invalid;
    std::map<Hash256, Block> seen;
    Attempt attempt;
    Rng rng;
    Rng validator_rng;
  };

  void broadcast(std::uint32_t from, std::vector<Message>& out) const {
    auto snapshot = std::make_shared<const std::vector<Block>>(nodes_[from].chain);
    for (std::uint32_t to = 0; to < config_.miners; ++to) {
      if (to != from) out.push_back(Message{Message::Kind::block, to, snapshot, {}, {}});
    }
  }

  void log_rejection(std::uint32_t m, const Hash256& id, std::string reason, std::uint64_t now_us,
                     Bytes counterexample = {}) {
    rejections_.push_back(
        Rejection{static_cast<double>(now_us) / 1e6, id, std::move(reason), m, std::move(counterexample)});
  }

  void receive_chain(std::uint32_t m, const std::vector<Block>& candidate, std::uint64_t now_us,
                     std::vector<Message>& out) {
    Node& n = nodes_[m];
    // Unknown blocks are checked even on a fork that will not be adopted, so
    // a bad block is rejected (and its counterexample shared) wherever it appears.
    if (candidate.front() != genesis_) return;
    std::size_t good = 1;
    for (std::size_t h = 1; h < candidate.size(); ++h) {
      const Hash256 id = block_id(candidate[h].header);
      if (n.valid.count(id)) {
        good = h + 1;
        continue;
      }
      if (n.invalid.count(id)) break;
      std::span<const Block> prefix(candidate.data(), h + 1);
      std::string reason;
      std::optional<State> counterexample;
      if (auto why = check_block_structure(prefix, h, params_)) {
        reason = *why;
      } else {
        const auto& b = candidate[h];
        const Hash256 seed = seed_hash(b.header.prev_block_hash, b.header.merkle_root);
        auto check = validate_pow(*problem_, seed, b.pow, b.header.difficulty_k, config_.validation_budget,
                                  n.validator_rng);
        if (!check.accepted()) {
          reason = std::string(to_string(check.verdict));
          counterexample = std::move(check.counterexample);
        }
      }
      n.seen.emplace(id, candidate[h]);
      if (reason.empty()) {
        n.valid.insert(id);
        good = h + 1;
        continue;
      }
      n.invalid.insert(id);
      const Bytes cx = counterexample ? problem_->encode(*counterexample) : Bytes{};
      log_rejection(m, id, reason, now_us, cx);
      if (counterexample) {
        for (std::uint32_t to = 0; to < config_.miners; ++to) {
          if (to != m) out.push_back(Message{Message::Kind::counterexample, to, nullptr, id, cx});
        }
      }
      break;
    }
    if (good > n.chain.size()) {
      n.chain.assign(candidate.begin(), candidate.begin() + static_cast<std::ptrdiff_t>(good));
      if (!finished_) start_attempt(m);
      if (n.chain.size() - 1 >= config_.block_limit) finished_ = true;
    }
  }

  void receive_counterexample(std::uint32_t m, const Hash256& id, const Bytes& cx, std::uint64_t now_us) {
    Node& n = nodes_[m];
    if (n.invalid.count(id)) return;
    auto it = n.seen.find(id);
    if (it == n.seen.end()) return;  // unknown block: nothing to check against
    State candidate;
    try {
      candidate = problem_->decode(cx);
    } catch (const Error&) {
      return;
    }
    if (!verify_counterexample(*problem_, it->second.pow, candidate)) return;
    n.invalid.insert(id);
    n.valid.erase(id);
    log_rejection(m, id, "gossip_counterexample", now_us, cx);
    for (std::size_t h = 1; h < n.chain.size(); ++h) {
      if (block_id(n.chain[h].header) == id) {
        n.chain.resize(h);
        if (!finished_) start_attempt(m);
        break;
      }
    }
  }

  // An adversary publishes a block whose proof is deliberately not a BLM,
  // built on the first honest chain that reaches the height below it.
  void maybe_inject(const std::vector<Block>& chain, std::uint64_t now_us, std::vector<Message>& out) {
    const std::uint64_t target = chain.size();
    if (std::find(config_.fraud_heights.begin(), config_.fraud_heights.end(), target) ==
            config_.fraud_heights.end() ||
        injected_heights_.count(target)) {
      return;
    }
    injected_heights_.insert(target);
    Block b;
    b.transactions = block_transactions(config_.seed, target, adversary_id(), config_.transactions);
    b.header.prev_block_hash = block_id(chain.back().header);
    b.header.merkle_root = merkle_root(b.transactions);
    b.header.timestamp_ms = std::max(now_us / 1000, chain.back().header.timestamp_ms);
    b.header.difficulty_k = next_difficulty(chain, params_.difficulty);
    const IndexSet set = index_select(seed_hash(b.header.prev_block_hash, b.header.merkle_root),
                                      static_cast<std::uint32_t>(problem_->dimension()), b.header.difficulty_k);
    for (int tries = 0; tries < 1000; ++tries) {
      State s = problem_->constrain(problem_->random_state(adversary_rng_), set);
      const double v = problem_->objective(s);
      bool beaten = false;
      for (int i = 0; i < 10'000 && !beaten; ++i) {
        auto nb = problem_->sample_neighbor(s, set, adversary_rng_);
        beaten = nb && problem_->objective(*nb) <= v;
      }
      if (!beaten) continue;
      b.pow = ProofOfWork{problem_->encode(s), v, set};
      b.header.pow_commitment = pow_commitment(b.pow);
      const Hash256 id = block_id(b.header);
      injected_.push_back(id);
      injected_blocks_.push_back(b);
      miner_of_[id] = adversary_id();
      auto fraud = std::make_shared<std::vector<Block>>(chain);
      fraud->push_back(std::move(b));
      for (std::uint32_t to = 0; to < config_.miners; ++to) {
        out.push_back(Message{Message::Kind::block, to, fraud, {}, {}});
      }
      return;
    }
  }

  const P* problem_;
  SimConfig config_;
  ChainParams params_;
  Block genesis_;
  std::vector<Node> nodes_;
  Rng adversary_rng_;
  std::set<std::uint64_t> injected_heights_;
  std::vector<Hash256> injected_;
  std::vector<Block> injected_blocks_;
  std::map<Hash256, std::uint32_t> miner_of_;
  std::vector<Rejection> rejections_;
  bool finished_ = false;
};

namespace detail {

inline std::vector<BlockRecord> records_for(const std::vector<Block>& chain,
                                            const auto& miner_of) {
  std::vector<BlockRecord> out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t h = 1; h < chain.size(); ++h) {
    const auto& b = chain[h];
    best = std::min(best, b.pow.objective_value);
    const double dt = static_cast<double>(b.header.timestamp_ms - chain[h - 1].header.timestamp_ms) / 1000.0;
    out.push_back(BlockRecord{h, miner_of(block_id(b.header)), b.header.difficulty_k, dt,
                              b.pow.objective_value, best});
  }
  return out;
}

template <SearchProblem P>
SimResult collect(const Network<P>& net) {
  SimResult r;
  std::uint32_t best = 0;
  for (std::uint32_t m = 0; m < net.miners(); ++m) {
    r.miner_chains.push_back(Chain{net.params(), net.chain(m)});
    if (net.chain(m).size() > net.chain(best).size()) best = m;
  }
  r.chain = r.miner_chains[best];
  r.records = records_for(r.chain.blocks, [&](const Hash256& id) { return net.miner_of(id); });
  r.rejections = net.rejections();
  r.injected = net.injected();
  r.injected_blocks = net.injected_blocks();
  r.completed = net.finished();
  return r;
}

}  // namespace detail

/// Deterministic discrete-event run on a virtual clock (integer microseconds).
template <SearchProblem P>
SimResult run_virtual(const P& problem, const SimConfig& config) {
  using Net = Network<P>;
  Net net(problem, config);
  const std::uint32_t miners = config.miners;
  const auto quantum = static_cast<std::uint64_t>(std::llround(config.quantum_s * 1e6));
  const auto latency = static_cast<std::uint64_t>(std::llround(config.latency_s * 1e6));
  const auto horizon = static_cast<std::uint64_t>(config.max_virtual_s * 1e6);

  enum class Kind { step, found, message };
  struct Event {
    std::uint64_t time = 0;
    std::uint64_t seq = 0;
    Kind kind = Kind::step;
    std::uint32_t miner = 0;
    std::uint64_t epoch = 0;
    typename Net::Message message;
  };
  auto later = [](const Event& a, const Event& b) {
    return a.time != b.time ? a.time > b.time : a.seq > b.seq;
  };
  std::priority_queue<Event, std::vector<Event>, decltype(later)> queue(later);
  std::uint64_t seq = 0;
  auto push = [&](Event e) {
    e.seq = seq++;
    queue.push(std::move(e));
  };

  std::vector<std::optional<BlmSearch<P>>> search(miners);
  std::vector<std::uint64_t> running(miners, 0);  // epoch the search belongs to
  std::vector<double> credit(miners, 0.0);

  auto sync = [&](std::uint64_t now) {
    if (net.finished()) return;
    for (std::uint32_t m = 0; m < miners; ++m) {
      if (running[m] == net.epoch(m)) continue;
      const auto& a = net.attempt(m);
      search[m].emplace(problem, a.index_set, a.warm_start, Rng(a.rng_seed), config.policy);
      running[m] = a.epoch;
      credit[m] = 0.0;
      push(Event{now, 0, Kind::step, m, a.epoch, {}});
    }
  };
  auto send = [&](std::vector<typename Net::Message> msgs, std::uint64_t now) {
    for (auto& msg : msgs) push(Event{now + latency, 0, Kind::message, msg.to, 0, std::move(msg)});
  };

  for (std::uint32_t m = 0; m < miners; ++m) net.start_attempt(m);
  sync(0);

  SimResult result;
  std::uint64_t now = 0;
  std::uint64_t events = 0;
  while (!queue.empty()) {
    Event e = queue.top();
    queue.pop();
    now = e.time;
    if (now > horizon) break;
    ++events;
    switch (e.kind) {
      case Kind::step: {
        if (net.finished() || e.epoch != net.epoch(e.miner) || running[e.miner] != e.epoch) break;
        const double speed = config.speed_of(e.miner);
        credit[e.miner] += speed * static_cast<double>(quantum) / 1e6;
        const auto budget = static_cast<std::uint64_t>(credit[e.miner]);
        credit[e.miner] -= static_cast<double>(budget);
        auto step = search[e.miner]->advance(budget);
        if (step.certified) {
          const auto used_us = static_cast<std::uint64_t>(
              std::ceil(static_cast<double>(step.iterations) / speed * 1e6));
          push(Event{now + std::max<std::uint64_t>(used_us, 1), 0, Kind::found, e.miner, e.epoch, {}});
        } else {
          push(Event{now + quantum, 0, Kind::step, e.miner, e.epoch, {}});
        }
        break;
      }
      case Kind::found: {
        if (e.epoch != net.epoch(e.miner) || running[e.miner] != e.epoch) break;
        send(net.on_found(e.miner, e.epoch, search[e.miner]->proof(), now), now);
        sync(now);
        break;
      }
      case Kind::message: {
        send(net.on_message(e.message, now), now);
        sync(now);
        break;
      }
    }
  }
  result = detail::collect(net);
  result.elapsed_s = static_cast<double>(now) / 1e6;
  result.events = events;
  return result;
}

/// Demonstration mode: one thread per miner mining in real time; the
/// coordinator owns all chain state and talks to miners only through
/// messages. Not reproducible.
template <SearchProblem P>
SimResult run_wall_clock(const P& problem, const SimConfig& config) {
  using Net = Network<P>;
  Net net(problem, config);
  const std::uint32_t miners = config.miners;
  const auto start = std::chrono::steady_clock::now();
  auto now_us = [&] {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start).count());
  };

  struct Found {
    std::uint32_t miner;
    std::uint64_t epoch;
    ProofOfWork pow;
  };
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Found> inbox;

  struct Job {
    typename Net::Attempt attempt;
  };
  std::vector<std::stop_source> stops(miners);
  std::vector<std::jthread> workers(miners);

  auto launch = [&](std::uint32_t m) {
    stops[m].request_stop();
    if (workers[m].joinable()) workers[m].join();
    stops[m] = std::stop_source();
    Job job{net.attempt(m)};
    std::stop_token token = stops[m].get_token();
    workers[m] = std::jthread([&, m, job = std::move(job), token] {
      Rng rng(job.attempt.rng_seed);
      BlmSearch<P> search(problem, job.attempt.index_set, job.attempt.warm_start, Rng(rng()), config.policy);
      while (!token.stop_requested()) {
        if (search.advance(4096).certified) {
          std::lock_guard lock(mu);
          inbox.push_back(Found{m, job.attempt.epoch, search.proof()});
          cv.notify_one();
          return;
        }
      }
    });
  };

  std::vector<std::uint64_t> running(miners, 0);
  auto sync = [&] {
    if (net.finished()) return;
    for (std::uint32_t m = 0; m < miners; ++m) {
      if (running[m] != net.epoch(m)) {
        running[m] = net.epoch(m);
        launch(m);
      }
    }
  };
  for (std::uint32_t m = 0; m < miners; ++m) net.start_attempt(m);
  sync();

  const auto deadline = start + std::chrono::duration<double>(config.max_virtual_s);
  std::uint64_t events = 0;
  while (!net.finished() && std::chrono::steady_clock::now() < deadline) {
    Found f;
    {
      std::unique_lock lock(mu);
      if (!cv.wait_until(lock, deadline, [&] { return !inbox.empty(); })) break;
      f = std::move(inbox.front());
      inbox.pop_front();
    }
    ++events;
    std::deque<typename Net::Message> pending;
    for (auto& msg : net.on_found(f.miner, f.epoch, f.pow, now_us())) pending.push_back(std::move(msg));
    while (!pending.empty()) {
      auto msg = std::move(pending.front());
      pending.pop_front();
      ++events;
      for (auto& next : net.on_message(msg, now_us())) pending.push_back(std::move(next));
    }
    sync();
  }
  for (auto& s : stops) s.request_stop();
  for (auto& w : workers) {
    if (w.joinable()) w.join();
  }
  SimResult result = detail::collect(net);
  result.elapsed_s = static_cast<double>(now_us()) / 1e6;
  result.events = events;
  return result;
}

template <SearchProblem P>
SimResult run_simulation(const P& problem, const SimConfig& config) {
  return config.mode == ClockMode::virtual_time ? run_virtual(problem, config)
                                                : run_wall_clock(problem, config);
}

}  // namespace blmchain::sim
