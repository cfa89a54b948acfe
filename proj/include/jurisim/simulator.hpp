#ifndef JURISIM_SIMULATOR_HPP
#define JURISIM_SIMULATOR_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "jurisim/common.hpp"
#include "jurisim/overlay.hpp"

namespace jurisim {

// The four actions of the traffic generator.
enum class ActionKind : std::uint8_t {
  NewCircuit = 0,
  AddUser = 1,
  RemoveUser = 2,
  SendTraffic = 3,
};

struct ActionDistribution {
  double p_new_circuit = 0.10;
  double p_add_user = 0.10;
  double p_remove_user = 0.10;
  double p_send_traffic = 0.70;

  void validate() const;
};

// Per-link delay is log-normal around a configurable median; every node adds
// a constant processing delay before forwarding.
struct LatencyModel {
  double link_median_ms = 100.0;
  double link_sigma_log = 0.3;
  double node_processing_ms = 5.0;

  TimeMicros processing_delay() const {
    return seconds_to_micros(node_processing_ms / 1e3);
  }
};

TimeMicros sample_latency(const LatencyModel& model, Rng& rng);

enum class SizeMode : std::uint8_t { Fixed = 0, Variable = 1 };

struct SizeModel {
  SizeMode mode = SizeMode::Fixed;
  std::uint32_t fixed_cell_bytes = 512;
  std::uint32_t variable_min_bytes = 256;
  std::uint32_t variable_max_bytes = 4096;

  std::uint32_t sample_payload_size(Rng& rng) const;
};

enum class PathStrategy : std::uint8_t {
  Uniform = 0,
  // Entry router in the user's jurisdiction, exit router in the server's:
  // every border crossing of the circuit is router-to-router.
  RelationshipSafe = 1,
  // Entry router in the user's jurisdiction only.
  SenderSafe = 2,
};

const char* path_strategy_name(PathStrategy s);
const char* size_mode_name(SizeMode m);

struct Circuit {
  std::uint64_t circuit_id = 0;
  NodeId user = 0;
  NodeId or1 = 0;
  NodeId or2 = 0;
  NodeId or3 = 0;
  NodeId server = 0;
  TimeMicros created_at = 0;
  std::optional<TimeMicros> destroyed_at;

  std::array<NodeId, 5> path() const { return {user, or1, or2, or3, server}; }
  bool destroyed() const { return destroyed_at.has_value(); }
};

// One link traversal. The timestamp is the arrival time at the receiver and
// doubles as the border-crossing time when the link crosses one.
struct ConnectionRecord {
  NodeId sender = 0;
  NodeId receiver = 0;
  TimeMicros timestamp = 0;
  std::uint32_t size = 0;
  std::uint64_t truth_circuit_id = 0;

  bool operator==(const ConnectionRecord&) const = default;
};

struct SimConfig {
  UniverseConfig universe;
  ActionDistribution actions;
  TimeMicros duration = seconds_to_micros(1800.0);  // virtual seconds
  std::uint64_t max_actions = 0;                    // 0 = bounded by duration
  std::uint32_t reply_min = 1;
  std::uint32_t reply_max = 5;
  SizeModel size_model;
  LatencyModel latency;
  PathStrategy strategy = PathStrategy::Uniform;
  TimeMicros mean_action_gap = seconds_to_micros(0.050);
  std::uint32_t initial_users = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TraceLog {
  Universe universe;  // final universe, including users added during the run
  std::vector<ConnectionRecord> records;  // sorted by timestamp
  std::vector<Circuit> circuits;          // ground truth, indexed by id
  TimeMicros final_time = 0;
  std::array<std::uint64_t, 4> action_counts{};  // distribution-sampled draws
  std::uint64_t forced_add_user_count = 0;
  std::uint64_t failed_build_attempts = 0;
};

ActionKind sample_action(const ActionDistribution& dist,
                         std::size_t active_users, Rng& rng);

struct BuildResult {
  Circuit circuit;
  std::vector<ConnectionRecord> records;
};

// Incremental circuit construction: three extension round trips of depths
// 1, 2, 3 (12 records). Throws ConfigError when the strategy cannot be
// satisfied after resampling.
BuildResult build_circuit(NodeId user, PathStrategy strategy,
                          const Universe& universe, TimeMicros now,
                          const LatencyModel& latency,
                          const SizeModel& size_model,
                          std::uint64_t circuit_id, Rng& rng,
                          std::uint64_t* failed_attempts = nullptr);

// One-way teardown cascade U -> OR1 -> OR2 -> OR3 (3 records); marks the
// circuit destroyed. Throws StateError when already destroyed.
std::vector<ConnectionRecord> teardown_circuit(Circuit& circuit,
                                               TimeMicros now,
                                               const LatencyModel& latency,
                                               const SizeModel& size_model,
                                               Rng& rng);

// One forward packet and 1..5 reply packets, 4 records per packet.
std::vector<ConnectionRecord> send_payload(const Circuit& circuit,
                                           const SizeModel& size_model,
                                           const LatencyModel& latency,
                                           TimeMicros now,
                                           std::uint32_t reply_min,
                                           std::uint32_t reply_max, Rng& rng);

TraceLog run_simulation(const SimConfig& config);

}  // namespace jurisim

#endif  // JURISIM_SIMULATOR_HPP
