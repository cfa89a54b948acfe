#include "jurisim/evaluator.hpp"

#include <algorithm>
#include <cmath>

namespace jurisim {

namespace {

bool contains_contiguous(const std::array<NodeId, 5>& path,
                         const std::vector<NodeId>& nodes) {
  if (nodes.size() > path.size()) {
    return false;
  }
  for (std::size_t offset = 0; offset + nodes.size() <= path.size();
       ++offset) {
    bool forward = true;
    bool backward = true;
    for (std::size_t i = 0; i < nodes.size() && (forward || backward); ++i) {
      forward = forward && path[offset + i] == nodes[i];
      backward = backward && path[offset + i] == nodes[nodes.size() - 1 - i];
    }
    if (forward || backward) {
      return true;
    }
  }
  return false;
}

}  // namespace

TruthIndex::TruthIndex(const std::vector<Circuit>& circuits)
    : circuits_(circuits) {
  for (std::size_t idx = 0; idx < circuits_.size(); ++idx) {
    const auto path = circuits_[idx].path();
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      const NodeId a = std::min(path[i], path[i + 1]);
      const NodeId b = std::max(path[i], path[i + 1]);
      auto& bucket = by_link_[{a, b}];
      if (bucket.empty() || bucket.back() != idx) {
        bucket.push_back(idx);
      }
    }
  }
}

std::vector<std::uint64_t> TruthIndex::circuits_containing(
    const std::vector<NodeId>& nodes) const {
  std::vector<std::uint64_t> hits;
  if (nodes.size() < 2) {
    return hits;
  }
  const NodeId a = std::min(nodes[0], nodes[1]);
  const NodeId b = std::max(nodes[0], nodes[1]);
  auto it = by_link_.find({a, b});
  if (it == by_link_.end()) {
    return hits;
  }
  for (std::uint64_t idx : it->second) {
    if (contains_contiguous(circuits_[idx].path(), nodes)) {
      hits.push_back(circuits_[idx].circuit_id);
    }
  }
  return hits;
}

CandidateLabel label_candidate(const CandidateCircuit& candidate,
                               const TruthIndex& truth,
                               const Universe& universe) {
  CandidateLabel label;
  label.real = truth.is_real(candidate.nodes);
  for (NodeId n : candidate.nodes) {
    const NodeKind k = universe.kind(n);
    label.shows_user = label.shows_user || k == NodeKind::User;
    label.shows_server = label.shows_server || k == NodeKind::Server;
  }
  label.relationship_revealing =
      label.real && label.shows_user && label.shows_server;
  return label;
}

std::vector<CandidateLabel> label_candidates(
    const std::vector<CandidateCircuit>& candidates, const TraceLog& trace) {
  TruthIndex index(trace.circuits);
  std::vector<CandidateLabel> labels;
  labels.reserve(candidates.size());
  for (const CandidateCircuit& c : candidates) {
    labels.push_back(label_candidate(c, index, trace.universe));
  }
  return labels;
}

MetricsReport compute_metrics(const std::vector<CandidateCircuit>& candidates,
                              const std::vector<CandidateLabel>& labels,
                              const TraceLog& trace) {
  if (trace.circuits.empty()) {
    throw StateError("metrics: trace holds no circuits");
  }
  if (candidates.size() != labels.size()) {
    throw StateError("metrics: label list does not match candidate list");
  }

  TruthIndex index(trace.circuits);
  MetricsReport m;
  m.total_truth_circuits = trace.circuits.size();
  m.total_candidates = candidates.size();

  std::set<std::uint64_t> revealed;
  std::set<std::uint64_t> reconstructed;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const CandidateCircuit& c = candidates[i];
    const CandidateLabel& l = labels[i];
    const bool accepted = c.verdict == Verdict::AssumedReal;
    if (accepted && !l.real) {
      ++m.imagined_accepted;
    }
    if (!accepted && !l.real) {
      ++m.imagined_discarded;
    }
    if (!accepted && l.real) {
      ++m.real_discarded;
    }
    if (accepted && l.real && c.nodes.size() >= 3) {
      for (std::uint64_t id : index.circuits_containing(c.nodes)) {
        reconstructed.insert(id);
        if (l.relationship_revealing) {
          revealed.insert(id);
        }
      }
    }
  }

  m.revealed_circuits = revealed.size();
  m.reconstructed_circuits = reconstructed.size();
  const double total = static_cast<double>(m.total_truth_circuits);
  m.relationship_revealing_pct =
      100.0 * static_cast<double>(revealed.size()) / total;
  m.reconstruction_pct =
      100.0 * static_cast<double>(reconstructed.size()) / total;
  if (m.total_candidates > 0) {
    const double all = static_cast<double>(m.total_candidates);
    m.imagined_pct = 100.0 * static_cast<double>(m.imagined_accepted) / all;
    m.imagined_discarded_pct =
        100.0 * static_cast<double>(m.imagined_discarded) / all;
    m.real_discarded_pct =
        100.0 * static_cast<double>(m.real_discarded) / all;
  }
  return m;
}

std::set<std::uint64_t> revealed_circuit_ids(
    const std::vector<CandidateCircuit>& candidates,
    const std::vector<CandidateLabel>& labels, const TraceLog& trace) {
  TruthIndex index(trace.circuits);
  std::set<std::uint64_t> revealed;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].verdict != Verdict::AssumedReal ||
        !labels[i].relationship_revealing) {
      continue;
    }
    for (std::uint64_t id : index.circuits_containing(candidates[i].nodes)) {
      revealed.insert(id);
    }
  }
  return revealed;
}

std::set<std::uint64_t> oracle_reconstructible_ids(
    const TraceLog& trace, const Universe& universe,
    const std::set<JurisdictionId>& coalition) {
  auto observed_by_coalition = [&](NodeId a, NodeId b) {
    const JurisdictionId ja = universe.jurisdiction(a);
    const JurisdictionId jb = universe.jurisdiction(b);
    if (ja == jb) {
      return false;
    }
    return coalition.count(ja) > 0 || coalition.count(jb) > 0;
  };
  std::set<std::uint64_t> ids;
  for (const Circuit& c : trace.circuits) {
    if (observed_by_coalition(c.user, c.or1) &&
        observed_by_coalition(c.or3, c.server)) {
      ids.insert(c.circuit_id);
    }
  }
  return ids;
}

double expected_max_oracle(const TraceLog& trace, const Universe& universe,
                           const std::set<JurisdictionId>& coalition) {
  if (trace.circuits.empty()) {
    return 0.0;
  }
  const auto ids = oracle_reconstructible_ids(trace, universe, coalition);
  return 100.0 * static_cast<double>(ids.size()) /
         static_cast<double>(trace.circuits.size());
}

namespace {

// P(X <= k) for X ~ Binomial(n, 1/2).
double binomial_half_cdf(std::size_t k, std::size_t n) {
  long double term = std::exp2l(-static_cast<long double>(n));  // C(n,0)/2^n
  long double sum = 0.0L;
  for (std::size_t i = 0; i <= k; ++i) {
    sum += term;
    term = term * static_cast<long double>(n - i) /
           static_cast<long double>(i + 1);
  }
  return static_cast<double>(sum);
}

}  // namespace

MetricSummary summarize(std::vector<double> values) {
  if (values.empty()) {
    throw StateError("summarize: no values");
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  MetricSummary s;
  s.median = n % 2 == 1 ? values[n / 2]
                        : 0.5 * (values[n / 2 - 1] + values[n / 2]);

  // Largest rank l (1-based) with P(X <= l-1) <= 0.025 for X ~ B(n, 1/2);
  // the interval [x(l), x(n+1-l)] then covers the median with >= 95%
  // probability.
  std::size_t l = 1;
  for (std::size_t k = 2; k <= n; ++k) {
    if (binomial_half_cdf(k - 1, n) <= 0.025) {
      l = k;
    } else {
      break;
    }
  }
  s.ci_low = values[l - 1];
  s.ci_high = values[n - l];
  return s;
}

AggregateReport aggregate_iterations(
    const std::vector<MetricsReport>& reports) {
  if (reports.empty()) {
    throw StateError("aggregate: no reports");
  }
  auto collect = [&](auto member) {
    std::vector<double> values;
    values.reserve(reports.size());
    for (const MetricsReport& r : reports) {
      values.push_back(r.*member);
    }
    return summarize(std::move(values));
  };
  AggregateReport agg;
  agg.iterations = reports.size();
  agg.relationship_revealing =
      collect(&MetricsReport::relationship_revealing_pct);
  agg.reconstruction = collect(&MetricsReport::reconstruction_pct);
  agg.imagined = collect(&MetricsReport::imagined_pct);
  agg.imagined_discarded = collect(&MetricsReport::imagined_discarded_pct);
  agg.real_discarded = collect(&MetricsReport::real_discarded_pct);
  agg.expected_max = collect(&MetricsReport::expected_max_pct);
  return agg;
}

}  // namespace jurisim
