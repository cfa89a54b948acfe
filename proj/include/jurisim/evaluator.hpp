#ifndef JURISIM_EVALUATOR_HPP
#define JURISIM_EVALUATOR_HPP

#include <cstdint>
#include <set>
#include <vector>

#include "jurisim/reconstructor.hpp"
#include "jurisim/simulator.hpp"

namespace jurisim {

struct CandidateLabel {
  bool real = false;
  bool relationship_revealing = false;
  bool shows_user = false;
  bool shows_server = false;
};

// Index over ground-truth circuit paths for contiguous-subsequence lookups.
class TruthIndex {
 public:
  explicit TruthIndex(const std::vector<Circuit>& circuits);

  // Ids of circuits whose path contains `nodes` (or its reverse) as a
  // contiguous subsequence.
  std::vector<std::uint64_t> circuits_containing(
      const std::vector<NodeId>& nodes) const;

  bool is_real(const std::vector<NodeId>& nodes) const {
    return !circuits_containing(nodes).empty();
  }

 private:
  const std::vector<Circuit>& circuits_;
  std::map<std::pair<NodeId, NodeId>, std::vector<std::uint64_t>> by_link_;
};

CandidateLabel label_candidate(const CandidateCircuit& candidate,
                               const TruthIndex& truth,
                               const Universe& universe);

std::vector<CandidateLabel> label_candidates(
    const std::vector<CandidateCircuit>& candidates, const TraceLog& trace);

struct MetricsReport {
  double relationship_revealing_pct = 0.0;
  double reconstruction_pct = 0.0;
  double imagined_pct = 0.0;
  double imagined_discarded_pct = 0.0;
  double real_discarded_pct = 0.0;
  double expected_max_pct = 0.0;

  std::uint64_t total_truth_circuits = 0;
  std::uint64_t total_candidates = 0;
  std::uint64_t revealed_circuits = 0;
  std::uint64_t reconstructed_circuits = 0;
  std::uint64_t imagined_accepted = 0;
  std::uint64_t imagined_discarded = 0;
  std::uint64_t real_discarded = 0;
};

// Percentages over the ground truth; expected_max_pct is filled in
// separately by expected_max_oracle. Throws when the trace holds no
// circuits.
MetricsReport compute_metrics(const std::vector<CandidateCircuit>& candidates,
                              const std::vector<CandidateLabel>& labels,
                              const TraceLog& trace);

// Truth circuits revealed by an accepted relationship-revealing candidate.
std::set<std::uint64_t> revealed_circuit_ids(
    const std::vector<CandidateCircuit>& candidates,
    const std::vector<CandidateLabel>& labels, const TraceLog& trace);

// Truth circuits whose first and last links both cross a border monitored
// by the coalition: the ceiling any reconstruction can reach.
std::set<std::uint64_t> oracle_reconstructible_ids(
    const TraceLog& trace, const Universe& universe,
    const std::set<JurisdictionId>& coalition);

double expected_max_oracle(const TraceLog& trace, const Universe& universe,
                           const std::set<JurisdictionId>& coalition);

struct MetricSummary {
  double median = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Distribution-free median with a binomial order-statistic 95% interval.
MetricSummary summarize(std::vector<double> values);

struct AggregateReport {
  std::size_t iterations = 0;
  MetricSummary relationship_revealing;
  MetricSummary reconstruction;
  MetricSummary imagined;
  MetricSummary imagined_discarded;
  MetricSummary real_discarded;
  MetricSummary expected_max;
};

AggregateReport aggregate_iterations(const std::vector<MetricsReport>& reports);

}  // namespace jurisim

#endif  // JURISIM_EVALUATOR_HPP
