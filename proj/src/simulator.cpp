#include "jurisim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace jurisim {

namespace {

constexpr int kMaxBuildResamples = 32;

// Hop sequence helper: successive records along a node path, one latency
// sample per link and a constant processing delay at every relay.
void emit_path(std::vector<ConnectionRecord>& out, const NodeId* nodes,
               std::size_t count, TimeMicros depart, std::uint32_t size,
               std::uint64_t circuit_id, const LatencyModel& latency,
               Rng& rng) {
  TimeMicros t = depart;
  for (std::size_t i = 0; i + 1 < count; ++i) {
    if (i > 0) {
      t += latency.processing_delay();
    }
    t += sample_latency(latency, rng);
    out.push_back({nodes[i], nodes[i + 1], t, size, circuit_id});
  }
}

NodeId pick_uniform(const std::vector<NodeId>& pool, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
  return pool[d(rng)];
}

bool contains(const NodeId* taken, std::size_t taken_count, NodeId n) {
  for (std::size_t i = 0; i < taken_count; ++i) {
    if (taken[i] == n) {
      return true;
    }
  }
  return false;
}

std::optional<NodeId> pick_distinct_or(const std::vector<NodeId>& pool,
                                       const NodeId* taken,
                                       std::size_t taken_count, Rng& rng) {
  // Rejection sampling first; fall back to an explicit scan when the pool is
  // mostly taken (tiny jurisdictions).
  for (int i = 0; i < 64; ++i) {
    NodeId candidate = pick_uniform(pool, rng);
    if (!contains(taken, taken_count, candidate)) {
      return candidate;
    }
  }
  std::vector<NodeId> eligible;
  for (NodeId n : pool) {
    if (!contains(taken, taken_count, n)) {
      eligible.push_back(n);
    }
  }
  if (eligible.empty()) {
    return std::nullopt;
  }
  return pick_uniform(eligible, rng);
}

}  // namespace

void ActionDistribution::validate() const {
  const double ps[4] = {p_new_circuit, p_add_user, p_remove_user,
                        p_send_traffic};
  double sum = 0.0;
  for (double p : ps) {
    if (p < 0.0) {
      throw ConfigError("action distribution: negative probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("action distribution: probabilities sum to " +
                      std::to_string(sum) + ", expected 1");
  }
}

TimeMicros sample_latency(const LatencyModel& model, Rng& rng) {
  const double median_s = model.link_median_ms / 1e3;
  if (median_s <= 0.0) {
    throw ConfigError("latency model: non-positive link median");
  }
  if (model.link_sigma_log <= 0.0) {
    return seconds_to_micros(median_s);
  }
  std::lognormal_distribution<double> d(std::log(median_s),
                                        model.link_sigma_log);
  TimeMicros t = seconds_to_micros(d(rng));
  return t > 0 ? t : 1;
}

std::uint32_t SizeModel::sample_payload_size(Rng& rng) const {
  if (mode == SizeMode::Fixed) {
    return fixed_cell_bytes;
  }
  std::uniform_int_distribution<std::uint32_t> d(variable_min_bytes,
                                                 variable_max_bytes);
  return d(rng);
}

const char* path_strategy_name(PathStrategy s) {
  switch (s) {
    case PathStrategy::Uniform:
      return "uniform";
    case PathStrategy::RelationshipSafe:
      return "relationship-safe";
    case PathStrategy::SenderSafe:
      return "sender-safe";
  }
  return "unknown";
}

const char* size_mode_name(SizeMode m) {
  return m == SizeMode::Fixed ? "fixed" : "variable";
}

void SimConfig::validate() const {
  actions.validate();
  if (duration < 0) {
    throw ConfigError("sim config: negative duration");
  }
  if (reply_min < 1 || reply_max < reply_min) {
    throw ConfigError("sim config: invalid server reply range");
  }
  if (mean_action_gap <= 0) {
    throw ConfigError("sim config: action gap must be positive");
  }
  if (size_model.mode == SizeMode::Variable &&
      (size_model.variable_min_bytes == 0 ||
       size_model.variable_max_bytes < size_model.variable_min_bytes)) {
    throw ConfigError("sim config: invalid variable size range");
  }
  if (size_model.fixed_cell_bytes == 0) {
    throw ConfigError("sim config: zero cell size");
  }
}

ActionKind sample_action(const ActionDistribution& dist,
                         std::size_t active_users, Rng& rng) {
  if (active_users == 0) {
    return ActionKind::AddUser;
  }
  std::uniform_real_distribution<double> d(0.0, 1.0);
  const double x = d(rng);
  if (x < dist.p_new_circuit) {
    return ActionKind::NewCircuit;
  }
  if (x < dist.p_new_circuit + dist.p_add_user) {
    return ActionKind::AddUser;
  }
  if (x < dist.p_new_circuit + dist.p_add_user + dist.p_remove_user) {
    return ActionKind::RemoveUser;
  }
  return ActionKind::SendTraffic;
}

BuildResult build_circuit(NodeId user, PathStrategy strategy,
                          const Universe& universe, TimeMicros now,
                          const LatencyModel& latency,
                          const SizeModel& size_model,
                          std::uint64_t circuit_id, Rng& rng,
                          std::uint64_t* failed_attempts) {
  const auto& all_ors = universe.onion_routers();
  const auto& all_servers = universe.servers();
  if (all_ors.size() < 3 || all_servers.empty()) {
    throw ConfigError("circuit build: need at least 3 onion routers and 1 server");
  }

  NodeId or1 = 0, or2 = 0, or3 = 0, server = 0;
  bool selected = false;
  for (int attempt = 0; attempt < kMaxBuildResamples && !selected; ++attempt) {
    server = pick_uniform(all_servers, rng);
    if (strategy == PathStrategy::Uniform) {
      or1 = pick_uniform(all_ors, rng);
      NodeId taken1[1] = {or1};
      or2 = *pick_distinct_or(all_ors, taken1, 1, rng);
      NodeId taken2[2] = {or1, or2};
      or3 = *pick_distinct_or(all_ors, taken2, 2, rng);
      selected = true;
      break;
    }

    const auto& entry_pool = universe.onion_routers_in(universe.jurisdiction(user));
    const auto& exit_pool =
        strategy == PathStrategy::RelationshipSafe
            ? universe.onion_routers_in(universe.jurisdiction(server))
            : all_ors;
    if (entry_pool.empty() || exit_pool.empty()) {
      if (failed_attempts != nullptr) {
        ++*failed_attempts;
      }
      continue;
    }
    or1 = pick_uniform(entry_pool, rng);
    NodeId taken1[1] = {or1};
    auto exit_pick = pick_distinct_or(exit_pool, taken1, 1, rng);
    if (!exit_pick) {
      if (failed_attempts != nullptr) {
        ++*failed_attempts;
      }
      continue;
    }
    or3 = *exit_pick;
    NodeId taken2[2] = {or1, or3};
    auto mid_pick = pick_distinct_or(all_ors, taken2, 2, rng);
    if (!mid_pick) {
      if (failed_attempts != nullptr) {
        ++*failed_attempts;
      }
      continue;
    }
    or2 = *mid_pick;
    selected = true;
  }
  if (!selected) {
    throw ConfigError(std::string("circuit build: strategy ") +
                      path_strategy_name(strategy) +
                      " unsatisfiable after resampling");
  }

  BuildResult result;
  result.circuit = Circuit{circuit_id, user, or1, or2, or3, server, now, {}};
  auto& records = result.records;
  records.reserve(12);
  const TimeMicros proc = latency.processing_delay();

  // Three extension round trips, each one hop deeper than the last. Every
  // leg is one packet with one sampled size, preserved across its hops.
  TimeMicros t = now;
  const NodeId chain[4] = {user, or1, or2, or3};
  for (std::size_t depth = 1; depth <= 3; ++depth) {
    if (depth > 1) {
      t += proc;  // user turns the previous reply around
    }
    const std::uint32_t out_size = size_model.sample_payload_size(rng);
    for (std::size_t i = 0; i < depth; ++i) {
      if (i > 0) {
        t += proc;
      }
      t += sample_latency(latency, rng);
      records.push_back({chain[i], chain[i + 1], t, out_size, circuit_id});
    }
    const std::uint32_t back_size = size_model.sample_payload_size(rng);
    for (std::size_t i = depth; i > 0; --i) {
      t += proc;
      t += sample_latency(latency, rng);
      records.push_back({chain[i], chain[i - 1], t, back_size, circuit_id});
    }
  }
  return result;
}

std::vector<ConnectionRecord> teardown_circuit(Circuit& circuit,
                                               TimeMicros now,
                                               const LatencyModel& latency,
                                               const SizeModel& size_model,
                                               Rng& rng) {
  if (circuit.destroyed()) {
    throw StateError("teardown: circuit " +
                     std::to_string(circuit.circuit_id) +
                     " already destroyed");
  }
  std::vector<ConnectionRecord> records;
  records.reserve(3);
  const NodeId chain[4] = {circuit.user, circuit.or1, circuit.or2,
                           circuit.or3};
  emit_path(records, chain, 4, now, size_model.sample_payload_size(rng),
            circuit.circuit_id, latency, rng);
  circuit.destroyed_at = now;
  return records;
}

std::vector<ConnectionRecord> send_payload(const Circuit& circuit,
                                           const SizeModel& size_model,
                                           const LatencyModel& latency,
                                           TimeMicros now,
                                           std::uint32_t reply_min,
                                           std::uint32_t reply_max, Rng& rng) {
  if (circuit.destroyed()) {
    throw StateError("send: circuit " + std::to_string(circuit.circuit_id) +
                     " already destroyed");
  }
  std::vector<ConnectionRecord> records;
  const NodeId forward[5] = {circuit.user, circuit.or1, circuit.or2,
                             circuit.or3, circuit.server};
  const NodeId reverse[5] = {circuit.server, circuit.or3, circuit.or2,
                             circuit.or1, circuit.user};

  const std::uint32_t fwd_size = size_model.sample_payload_size(rng);
  emit_path(records, forward, 5, now, fwd_size, circuit.circuit_id, latency,
            rng);
  const TimeMicros arrival_at_server = records.back().timestamp;

  std::uniform_int_distribution<std::uint32_t> reply_count(reply_min,
                                                           reply_max);
  const std::uint32_t replies = reply_count(rng);
  records.reserve(4 * (1 + replies));
  for (std::uint32_t i = 1; i <= replies; ++i) {
    const std::uint32_t size = size_model.sample_payload_size(rng);
    const TimeMicros depart =
        arrival_at_server + static_cast<TimeMicros>(i) *
                                latency.processing_delay();
    emit_path(records, reverse, 5, depart, size, circuit.circuit_id, latency,
              rng);
  }
  return records;
}

namespace {

struct ActiveUser {
  NodeId user;
  std::size_t circuit_index;  // into TraceLog::circuits
};

}  // namespace

TraceLog run_simulation(const SimConfig& config) {
  config.validate();

  TraceLog trace;
  trace.universe = Universe::build(config.universe);

  const bool will_act = config.initial_users > 0 || config.duration > 0;
  if (will_act && (trace.universe.onion_routers().size() < 3 ||
                   trace.universe.servers().empty())) {
    throw ConfigError(
        "simulation: traffic requires at least 3 onion routers and 1 server");
  }

  Rng rng(derive_seed(config.seed, 1));
  std::discrete_distribution<std::size_t> pick_jurisdiction(
      trace.universe.placement_weights().begin(),
      trace.universe.placement_weights().end());
  std::exponential_distribution<double> gap(
      1.0 / micros_to_seconds(config.mean_action_gap));

  std::vector<ActiveUser> active;
  TimeMicros now = 0;
  std::uint64_t executed = 0;

  auto append = [&trace](std::vector<ConnectionRecord>&& recs) {
    trace.records.insert(trace.records.end(),
                         std::make_move_iterator(recs.begin()),
                         std::make_move_iterator(recs.end()));
  };

  auto do_add_user = [&] {
    auto j = static_cast<JurisdictionId>(pick_jurisdiction(rng));
    NodeId user = trace.universe.add_node(NodeKind::User, j);
    auto built = build_circuit(user, config.strategy, trace.universe, now,
                               config.latency, config.size_model,
                               trace.circuits.size(), rng,
                               &trace.failed_build_attempts);
    active.push_back({user, trace.circuits.size()});
    trace.circuits.push_back(built.circuit);
    append(std::move(built.records));
  };

  auto pick_active_index = [&]() -> std::size_t {
    std::uniform_int_distribution<std::size_t> d(0, active.size() - 1);
    return d(rng);
  };

  auto advance = [&] { now += seconds_to_micros(gap(rng)); };

  for (std::uint32_t i = 0; i < config.initial_users; ++i) {
    do_add_user();
    advance();
  }

  while (now < config.duration &&
         (config.max_actions == 0 || executed < config.max_actions)) {
    ActionKind kind = sample_action(config.actions, active.size(), rng);
    if (active.empty()) {
      ++trace.forced_add_user_count;
    } else {
      trace.action_counts[static_cast<std::size_t>(kind)] += 1;
    }
    switch (kind) {
      case ActionKind::AddUser:
        do_add_user();
        break;
      case ActionKind::RemoveUser: {
        std::size_t idx = pick_active_index();
        Circuit& c = trace.circuits[active[idx].circuit_index];
        append(teardown_circuit(c, now, config.latency, config.size_model,
                                rng));
        active[idx] = active.back();
        active.pop_back();
        break;
      }
      case ActionKind::NewCircuit: {
        std::size_t idx = pick_active_index();
        Circuit& old = trace.circuits[active[idx].circuit_index];
        append(teardown_circuit(old, now, config.latency, config.size_model,
                                rng));
        auto built = build_circuit(active[idx].user, config.strategy,
                                   trace.universe, now, config.latency,
                                   config.size_model, trace.circuits.size(),
                                   rng, &trace.failed_build_attempts);
        active[idx].circuit_index = trace.circuits.size();
        trace.circuits.push_back(built.circuit);
        append(std::move(built.records));
        break;
      }
      case ActionKind::SendTraffic: {
        std::size_t idx = pick_active_index();
        const Circuit& c = trace.circuits[active[idx].circuit_index];
        append(send_payload(c, config.size_model, config.latency, now,
                            config.reply_min, config.reply_max, rng));
        break;
      }
    }
    ++executed;
    advance();
  }

  trace.final_time = now;
  std::stable_sort(trace.records.begin(), trace.records.end(),
                   [](const ConnectionRecord& a, const ConnectionRecord& b) {
                     return a.timestamp < b.timestamp;
                   });
  return trace;
}

}  // namespace jurisim
