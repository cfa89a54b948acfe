#ifndef JURISIM_RECONSTRUCTOR_HPP
#define JURISIM_RECONSTRUCTOR_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "jurisim/observer.hpp"
#include "jurisim/overlay.hpp"

namespace jurisim {

struct Evidence {
  TimeMicros timestamp = 0;
  std::uint32_t size = 0;

  auto operator<=>(const Evidence&) const = default;
};

// A reconstruction hypothesis: a node sequence with timing/size evidence at
// its two ends and a confidence score. Sequences are stored in canonical
// orientation (not larger than their reverse) because the observers cannot
// tell the two directions of a flow apart.
struct PartialCircuit {
  std::vector<NodeId> nodes;  // 2..5 nodes, no repeats, canonical
  std::vector<Evidence> sender_evidence;    // traffic at nodes.front()'s edge
  std::vector<Evidence> receiver_evidence;  // traffic at nodes.back()'s edge
  double score = 0.0;

  bool is_endpoint() const { return nodes.size() == 2; }
  void canonicalize();
};

struct ScoreParams {
  // Expected incoming->outgoing border-to-border delay for one interior
  // relay (case 4) and two interior relays (case 5).
  double expected_delta_s = 0.105;
  double expected_delta_case5_s = 0.210;
  double window_s = 0.100;  // max |delta - expected| admitted
  std::uint32_t size_tolerance = 0;
  double case4_unit = 1.0;
  double case5_unit = 0.5;
  // Score added per (timestamp, size) evidence entry present in both parents
  // of a merge.
  double overlap_bonus = 0.25;
  // A join is only consistent when at least this many evidence entries are
  // present in both parents at the shared boundary. Partials of unrelated
  // circuits that merely share a router pair carry disjoint evidence and
  // fail this bar.
  std::size_t min_join_evidence = 1;
  // Pruning thresholds ("95% probability to be real"); case 5 is stricter.
  // Values come from the calibrate subcommand run against the benchmark
  // traffic model; for_model() switches them by size mode.
  double case4_prune_threshold = 0.80;
  double case5_prune_threshold = 4.10;
  double accept_threshold = 1.0;
  bool size_mode_aware = false;

  TimeMicros window() const { return seconds_to_micros(window_s); }
  TimeMicros expected_delta(bool case5) const {
    return seconds_to_micros(case5 ? expected_delta_case5_s
                                   : expected_delta_s);
  }

  void validate() const;

  // Derives the expected deltas from the latency model the traffic was
  // generated with (the adversaries know the timing statistics).
  static ScoreParams for_model(const LatencyModel& latency, SizeMode mode);
};

enum class Verdict : std::uint8_t { AssumedImagined = 0, AssumedReal = 1 };

struct CandidateCircuit {
  std::vector<NodeId> nodes;  // canonical, 2..5 nodes
  double score = 0.0;
  Verdict verdict = Verdict::AssumedImagined;
  std::size_t sender_evidence_count = 0;
  std::size_t receiver_evidence_count = 0;
};

struct EndpointExtraction {
  std::vector<PartialCircuit> endpoints;  // one length-2 partial per record
  ObservationLog remainder;
};

// Pulls outgoing Case 1 and incoming Case 2 connections out of the log;
// they are circuit endpoints that cannot be matched further.
EndpointExtraction extract_endpoints(const ObservationLog& log);

// Triangular kernel around the expected delay; empty when the pair cannot
// belong to one flow (wrong order, outside the window, incompatible sizes,
// or a repeated node).
std::optional<double> score_pair(const ObservedConnection& incoming,
                                 const ObservedConnection& outgoing,
                                 const ScoreParams& params);

struct MatchStats {
  std::uint64_t score_pair_evaluations = 0;
  std::uint64_t matched_pairs = 0;
};

// Greedy one-to-one matching of incoming to outgoing connections in
// incoming-timestamp order; each incoming takes the outgoing with the
// highest score (ties: earliest outgoing, then lowest node ids).
std::vector<PartialCircuit> match_connections(const ObservationLog& reduced,
                                              const ScoreParams& params,
                                              MatchStats* stats = nullptr);

// Merges partials with identical node sequences: evidence united, scores
// summed.
std::vector<PartialCircuit> accumulate(std::vector<PartialCircuit> partials);

// Drops interior partials below their shape's threshold (closed threshold;
// two-intermediate shapes are held to the stricter case-5 value). Length-2
// endpoints pass through untouched.
std::vector<PartialCircuit> prune(std::vector<PartialCircuit> partials,
                                  const ScoreParams& params);

// Joins partials that overlap in two consecutive nodes into maximal chains,
// attaches endpoint partials to chain ends, and assigns verdicts.
std::vector<CandidateCircuit> merge_overlapping(
    const std::vector<PartialCircuit>& partials, const Universe& universe,
    const ScoreParams& params);

struct ReconstructionResult {
  std::vector<CandidateCircuit> candidates;
  std::uint64_t score_pair_evaluations = 0;
  std::uint64_t matched_pairs = 0;
  std::uint64_t partials_before_prune = 0;
  std::uint64_t partials_after_prune = 0;
};

ReconstructionResult reconstruct(
    const std::map<JurisdictionId, ObservationLog>& logs,
    const Universe& universe, const ScoreParams& params);

// Intermediate product used by calibration: accumulated, unpruned partials
// of every coalition jurisdiction.
std::vector<PartialCircuit> accumulated_partials(
    const std::map<JurisdictionId, ObservationLog>& logs,
    const ScoreParams& params);

}  // namespace jurisim

#endif  // JURISIM_RECONSTRUCTOR_HPP
