#include "jurisim/reconstructor.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <utility>

namespace jurisim {

namespace {

std::vector<Evidence> union_evidence(const std::vector<Evidence>& a,
                                     const std::vector<Evidence>& b) {
  std::vector<Evidence> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// One-to-one greedy count of evidence entries present in both lists.
// Both lists are sorted; entries pair up when their timestamps agree within
// the window and their sizes within the tolerance.
std::size_t count_matching_evidence(const std::vector<Evidence>& a,
                                    const std::vector<Evidence>& b,
                                    TimeMicros window,
                                    std::uint32_t size_tolerance) {
  std::size_t i = 0, j = 0, matched = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].timestamp + window < b[j].timestamp) {
      ++i;
      continue;
    }
    if (b[j].timestamp + window < a[i].timestamp) {
      ++j;
      continue;
    }
    const std::uint32_t lo = std::min(a[i].size, b[j].size);
    const std::uint32_t hi = std::max(a[i].size, b[j].size);
    if (hi - lo <= size_tolerance) {
      ++matched;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return matched;
}

}  // namespace

void PartialCircuit::canonicalize() {
  std::vector<NodeId> rev(nodes.rbegin(), nodes.rend());
  if (rev < nodes) {
    nodes = std::move(rev);
    std::swap(sender_evidence, receiver_evidence);
  }
}

void ScoreParams::validate() const {
  if (window_s <= 0.0) {
    throw ConfigError("score params: window must be positive");
  }
  if (expected_delta_s <= 0.0 || expected_delta_case5_s <= 0.0) {
    throw ConfigError("score params: expected deltas must be positive");
  }
  if (case4_unit <= 0.0 || case5_unit <= 0.0) {
    throw ConfigError("score params: units must be positive");
  }
  if (case5_prune_threshold < case4_prune_threshold) {
    throw ConfigError(
        "score params: case-5 pruning must be at least as strict as case-4");
  }
}

ScoreParams ScoreParams::for_model(const LatencyModel& latency,
                                   SizeMode mode) {
  ScoreParams p;
  const double hop_s =
      (latency.node_processing_ms + latency.link_median_ms) / 1e3;
  p.expected_delta_s = hop_s;
  p.expected_delta_case5_s = 2.0 * hop_s;
  p.size_mode_aware = (mode == SizeMode::Variable);
  if (mode == SizeMode::Variable) {
    // Size matching leaves few wrong pairs; calibrated thresholds sit much
    // lower than in fixed mode.
    p.case4_prune_threshold = 0.18;
    p.case5_prune_threshold = 1.25;
  }
  return p;
}

EndpointExtraction extract_endpoints(const ObservationLog& log) {
  EndpointExtraction out;
  out.remainder.jurisdiction = log.jurisdiction;
  for (const ObservedConnection& c : log.connections) {
    const bool endpoint = (c.direction == Direction::Outgoing &&
                           c.case_label == CaseLabel::Case1) ||
                          (c.direction == Direction::Incoming &&
                           c.case_label == CaseLabel::Case2);
    if (!endpoint) {
      out.remainder.connections.push_back(c);
      continue;
    }
    PartialCircuit p;
    p.nodes = {c.sender, c.receiver};
    p.sender_evidence = {{c.timestamp, c.size}};
    p.receiver_evidence = {{c.timestamp, c.size}};
    p.score = 1.0;  // directly observed
    p.canonicalize();
    out.endpoints.push_back(std::move(p));
  }
  return out;
}

std::optional<double> score_pair(const ObservedConnection& incoming,
                                 const ObservedConnection& outgoing,
                                 const ScoreParams& params) {
  if (incoming.sender == outgoing.receiver) {
    return std::nullopt;  // flow would fold back on itself
  }
  const TimeMicros delta = outgoing.timestamp - incoming.timestamp;
  if (delta <= 0) {
    return std::nullopt;
  }
  const bool case4 = incoming.receiver == outgoing.sender;
  const TimeMicros mu = params.expected_delta(!case4);
  const TimeMicros window = params.window();
  const TimeMicros dev = std::llabs(delta - mu);
  if (dev > window) {
    return std::nullopt;
  }
  if (params.size_mode_aware) {
    const std::uint32_t lo = std::min(incoming.size, outgoing.size);
    const std::uint32_t hi = std::max(incoming.size, outgoing.size);
    if (hi - lo > params.size_tolerance) {
      return std::nullopt;
    }
  }
  const double unit = case4 ? params.case4_unit : params.case5_unit;
  return unit * (1.0 - static_cast<double>(dev) / static_cast<double>(window));
}

std::vector<PartialCircuit> match_connections(const ObservationLog& reduced,
                                              const ScoreParams& params,
                                              MatchStats* stats) {
  std::vector<const ObservedConnection*> incoming;
  std::vector<const ObservedConnection*> outgoing;
  for (const ObservedConnection& c : reduced.connections) {
    (c.direction == Direction::Incoming ? incoming : outgoing).push_back(&c);
  }
  auto order = [](const ObservedConnection* a, const ObservedConnection* b) {
    if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
    if (a->sender != b->sender) return a->sender < b->sender;
    return a->receiver < b->receiver;
  };
  std::sort(incoming.begin(), incoming.end(), order);
  std::sort(outgoing.begin(), outgoing.end(), order);

  const TimeMicros reach = params.expected_delta(true) + params.window();
  std::vector<bool> claimed(outgoing.size(), false);
  std::vector<PartialCircuit> partials;

  for (const ObservedConnection* in : incoming) {
    auto lo = std::upper_bound(outgoing.begin(), outgoing.end(),
                               in->timestamp,
                               [](TimeMicros t, const ObservedConnection* c) {
                                 return t < c->timestamp;
                               });
    auto hi = std::upper_bound(lo, outgoing.end(), in->timestamp + reach,
                               [](TimeMicros t, const ObservedConnection* c) {
                                 return t < c->timestamp;
                               });
    double best_score = 0.0;
    std::ptrdiff_t best_index = -1;
    for (auto it = lo; it != hi; ++it) {
      const auto idx = static_cast<std::size_t>(it - outgoing.begin());
      if (claimed[idx]) {
        continue;
      }
      if (stats != nullptr) {
        ++stats->score_pair_evaluations;
      }
      const auto s = score_pair(*in, **it, params);
      if (s && (best_index < 0 || *s > best_score)) {
        best_score = *s;
        best_index = static_cast<std::ptrdiff_t>(idx);
      }
    }
    if (best_index < 0) {
      continue;
    }
    claimed[static_cast<std::size_t>(best_index)] = true;
    const ObservedConnection* out =
        outgoing[static_cast<std::size_t>(best_index)];
    if (stats != nullptr) {
      ++stats->matched_pairs;
    }

    PartialCircuit p;
    if (in->receiver == out->sender) {
      p.nodes = {in->sender, in->receiver, out->receiver};
    } else {
      p.nodes = {in->sender, in->receiver, out->sender, out->receiver};
    }
    p.sender_evidence = {{in->timestamp, in->size}};
    p.receiver_evidence = {{out->timestamp, out->size}};
    p.score = best_score;
    p.canonicalize();
    partials.push_back(std::move(p));
  }
  return partials;
}

std::vector<PartialCircuit> accumulate(std::vector<PartialCircuit> partials) {
  std::map<std::vector<NodeId>, PartialCircuit> merged;
  for (PartialCircuit& p : partials) {
    p.canonicalize();
    auto it = merged.find(p.nodes);
    if (it == merged.end()) {
      std::vector<NodeId> key = p.nodes;
      merged.emplace(std::move(key), std::move(p));
      continue;
    }
    PartialCircuit& acc = it->second;
    acc.score += p.score;
    acc.sender_evidence = union_evidence(acc.sender_evidence,
                                         p.sender_evidence);
    acc.receiver_evidence = union_evidence(acc.receiver_evidence,
                                           p.receiver_evidence);
  }
  std::vector<PartialCircuit> out;
  out.reserve(merged.size());
  for (auto& [nodes, p] : merged) {
    std::sort(p.sender_evidence.begin(), p.sender_evidence.end());
    std::sort(p.receiver_evidence.begin(), p.receiver_evidence.end());
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PartialCircuit> prune(std::vector<PartialCircuit> partials,
                                  const ScoreParams& params) {
  std::vector<PartialCircuit> kept;
  kept.reserve(partials.size());
  for (PartialCircuit& p : partials) {
    if (p.is_endpoint()) {
      kept.push_back(std::move(p));
      continue;
    }
    const double threshold = p.nodes.size() >= 4
                                 ? params.case5_prune_threshold
                                 : params.case4_prune_threshold;
    if (p.score >= threshold) {
      kept.push_back(std::move(p));
    }
  }
  return kept;
}

namespace {

// Kind-consistency: a candidate sequence must fit inside the
// user/router/router/router/server shape (in either direction).
bool chain_shape_ok(const std::vector<NodeId>& nodes,
                    const Universe& universe) {
  if (nodes.size() > 5) {
    return false;
  }
  std::size_t users = 0, servers = 0, routers = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    switch (universe.kind(nodes[i])) {
      case NodeKind::OnionRouter:
        ++routers;
        break;
      case NodeKind::User:
        ++users;
        break;
      case NodeKind::Server:
        ++servers;
        break;
    }
    if (universe.kind(nodes[i]) != NodeKind::OnionRouter && i != 0 &&
        i + 1 != nodes.size()) {
      return false;  // non-router buried inside a chain
    }
  }
  return routers <= 3 && users <= 1 && servers <= 1;
}

// An interior partial viewed in one of its two directions.
struct Oriented {
  std::uint32_t index = 0;
  bool rev = false;

  bool operator==(const Oriented&) const = default;
};

class ChainAssembler {
 public:
  ChainAssembler(const std::vector<PartialCircuit>& interior,
                 const Universe& universe, const ScoreParams& params)
      : interior_(interior), universe_(universe), params_(params) {
    for (std::uint32_t i = 0; i < interior_.size(); ++i) {
      for (bool rev : {false, true}) {
        Oriented o{i, rev};
        by_prefix_[first2(o)].push_back(o);
        by_suffix_[last2(o)].push_back(o);
      }
    }
  }

  struct Chain {
    std::vector<NodeId> nodes;
    double score = 0.0;
    std::vector<Evidence> left_evidence;
    std::vector<Evidence> right_evidence;
  };

  // Every maximal consistent join, one entry per distinct canonical
  // sequence (highest-scoring assembly wins).
  std::vector<Chain> maximal_chains() {
    for (std::uint32_t i = 0; i < interior_.size(); ++i) {
      for (bool rev : {false, true}) {
        Oriented o{i, rev};
        Chain chain;
        chain.nodes = oriented_nodes(o);
        chain.score = interior_[i].score;
        chain.left_evidence = left_evidence(o);
        chain.right_evidence = right_evidence(o);
        extend(chain, o);
      }
    }
    std::vector<Chain> out;
    out.reserve(best_.size());
    for (auto& [nodes, chain] : best_) {
      out.push_back(std::move(chain));
    }
    return out;
  }

 private:
  using Pair = std::pair<NodeId, NodeId>;

  const PartialCircuit& partial(Oriented o) const {
    return interior_[o.index];
  }

  std::size_t length(Oriented o) const { return partial(o).nodes.size(); }

  NodeId node_at(Oriented o, std::size_t i) const {
    const auto& nodes = partial(o).nodes;
    return o.rev ? nodes[nodes.size() - 1 - i] : nodes[i];
  }

  Pair first2(Oriented o) const { return {node_at(o, 0), node_at(o, 1)}; }

  Pair last2(Oriented o) const {
    const std::size_t n = length(o);
    return {node_at(o, n - 2), node_at(o, n - 1)};
  }

  const std::vector<Evidence>& left_evidence(Oriented o) const {
    return o.rev ? partial(o).receiver_evidence : partial(o).sender_evidence;
  }

  const std::vector<Evidence>& right_evidence(Oriented o) const {
    return o.rev ? partial(o).sender_evidence : partial(o).receiver_evidence;
  }

  std::vector<NodeId> oriented_nodes(Oriented o) const {
    std::vector<NodeId> nodes(length(o));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      nodes[i] = node_at(o, i);
    }
    return nodes;
  }

  bool shape_ok(const std::vector<NodeId>& nodes) const {
    return chain_shape_ok(nodes, universe_);
  }

  // Joined sequence of `chain` extended to the right by `o`, or empty when
  // the join is inconsistent.
  std::vector<NodeId> join_right(const std::vector<NodeId>& nodes,
                                 Oriented o) const {
    std::vector<NodeId> joined = nodes;
    for (std::size_t i = 2; i < length(o); ++i) {
      const NodeId next = node_at(o, i);
      if (std::find(joined.begin(), joined.end(), next) != joined.end()) {
        return {};
      }
      joined.push_back(next);
    }
    if (!shape_ok(joined)) {
      return {};
    }
    return joined;
  }

  bool has_left_extension(const std::vector<NodeId>& nodes,
                          const std::vector<Evidence>& left_ev) const {
    const Pair head{nodes[0], nodes[1]};
    auto it = by_suffix_.find(head);
    if (it == by_suffix_.end()) {
      return false;
    }
    for (Oriented o : it->second) {
      std::vector<NodeId> joined(partial(o).nodes.size() - 2);
      bool clash = false;
      for (std::size_t i = 0; i + 2 < length(o); ++i) {
        const NodeId prev = node_at(o, i);
        if (std::find(nodes.begin(), nodes.end(), prev) != nodes.end()) {
          clash = true;
          break;
        }
        joined[i] = prev;
      }
      if (clash) {
        continue;
      }
      joined.insert(joined.end(), nodes.begin(), nodes.end());
      if (!shape_ok(joined)) {
        continue;
      }
      if (count_matching_evidence(right_evidence(o), left_ev,
                                  params_.window(), params_.size_tolerance) >=
          params_.min_join_evidence) {
        return true;
      }
    }
    return false;
  }

  void extend(const Chain& chain, Oriented last) {
    const Pair tail{chain.nodes[chain.nodes.size() - 2], chain.nodes.back()};
    bool extended = false;
    if (auto it = by_prefix_.find(tail); it != by_prefix_.end()) {
      for (Oriented next : it->second) {
        if (next.index == last.index) {
          continue;
        }
        std::vector<NodeId> joined = join_right(chain.nodes, next);
        if (joined.empty()) {
          continue;
        }
        const std::size_t matched = count_matching_evidence(
            chain.right_evidence, left_evidence(next), params_.window(),
            params_.size_tolerance);
        if (matched < params_.min_join_evidence) {
          continue;  // parents share nodes but not traffic
        }
        extended = true;
        Chain longer;
        longer.nodes = std::move(joined);
        longer.score = chain.score + partial(next).score +
                       params_.overlap_bonus * static_cast<double>(matched);
        longer.left_evidence = chain.left_evidence;
        longer.right_evidence = right_evidence(next);
        extend(longer, next);
      }
    }
    if (!extended && !has_left_extension(chain.nodes, chain.left_evidence)) {
      emit(chain);
    }
  }

  void emit(const Chain& chain) {
    Chain canonical = chain;
    std::vector<NodeId> rev(chain.nodes.rbegin(), chain.nodes.rend());
    if (rev < canonical.nodes) {
      canonical.nodes = std::move(rev);
      std::swap(canonical.left_evidence, canonical.right_evidence);
    }
    auto it = best_.find(canonical.nodes);
    if (it == best_.end()) {
      std::vector<NodeId> key = canonical.nodes;
      best_.emplace(std::move(key), std::move(canonical));
    } else if (canonical.score > it->second.score) {
      it->second = std::move(canonical);
    }
  }

  const std::vector<PartialCircuit>& interior_;
  const Universe& universe_;
  const ScoreParams& params_;
  std::map<Pair, std::vector<Oriented>> by_prefix_;
  std::map<Pair, std::vector<Oriented>> by_suffix_;
  std::map<std::vector<NodeId>, Chain> best_;
};

}  // namespace

std::vector<CandidateCircuit> merge_overlapping(
    const std::vector<PartialCircuit>& partials, const Universe& universe,
    const ScoreParams& params) {
  std::vector<PartialCircuit> interior;
  std::vector<PartialCircuit> endpoints;
  for (const PartialCircuit& p : partials) {
    if (p.is_endpoint()) {
      endpoints.push_back(p);
    } else if (chain_shape_ok(p.nodes, universe)) {
      interior.push_back(p);
    }
    // Shape-violating hypotheses cannot be part of any circuit.
  }

  ChainAssembler assembler(interior, universe, params);
  auto chains = assembler.maximal_chains();

  // Endpoint partials supplement chains that contain their two nodes at
  // either end; unattached ones stand alone.
  std::map<std::pair<NodeId, NodeId>, std::size_t> endpoint_by_pair;
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    endpoint_by_pair[{endpoints[i].nodes[0], endpoints[i].nodes[1]}] = i;
  }
  std::vector<bool> attached(endpoints.size(), false);

  auto attach = [&](std::vector<Evidence>& side_evidence, NodeId a, NodeId b,
                    double& score) {
    const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = endpoint_by_pair.find(key);
    if (it == endpoint_by_pair.end()) {
      return;
    }
    const PartialCircuit& e = endpoints[it->second];
    score += params.overlap_bonus *
             static_cast<double>(count_matching_evidence(
                 e.sender_evidence, side_evidence, params.window(),
                 params.size_tolerance));
    side_evidence = union_evidence(side_evidence, e.sender_evidence);
    attached[it->second] = true;
  };

  std::vector<CandidateCircuit> candidates;
  for (auto& chain : chains) {
    attach(chain.left_evidence, chain.nodes[0], chain.nodes[1], chain.score);
    attach(chain.right_evidence, chain.nodes[chain.nodes.size() - 2],
           chain.nodes.back(), chain.score);
    CandidateCircuit c;
    c.nodes = std::move(chain.nodes);
    c.score = chain.score;
    c.verdict = chain.score >= params.accept_threshold
                    ? Verdict::AssumedReal
                    : Verdict::AssumedImagined;
    c.sender_evidence_count = chain.left_evidence.size();
    c.receiver_evidence_count = chain.right_evidence.size();
    candidates.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    if (attached[i]) {
      continue;
    }
    const PartialCircuit& e = endpoints[i];
    CandidateCircuit c;
    c.nodes = e.nodes;
    c.score = e.score;
    c.verdict = e.score >= params.accept_threshold ? Verdict::AssumedReal
                                                   : Verdict::AssumedImagined;
    c.sender_evidence_count = e.sender_evidence.size();
    c.receiver_evidence_count = e.receiver_evidence.size();
    candidates.push_back(std::move(c));
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const CandidateCircuit& a, const CandidateCircuit& b) {
              return a.nodes < b.nodes;
            });
  return candidates;
}

namespace {

struct JurisdictionPartials {
  std::vector<PartialCircuit> pruned;
  std::vector<PartialCircuit> accumulated;
};

JurisdictionPartials process_log(const ObservationLog& log,
                                 const ScoreParams& params,
                                 MatchStats* stats) {
  auto extraction = extract_endpoints(log);
  auto matched = match_connections(extraction.remainder, params, stats);
  std::vector<PartialCircuit> all = std::move(extraction.endpoints);
  all.insert(all.end(), std::make_move_iterator(matched.begin()),
             std::make_move_iterator(matched.end()));
  JurisdictionPartials out;
  out.accumulated = accumulate(std::move(all));
  out.pruned = prune(out.accumulated, params);
  return out;
}

}  // namespace

ReconstructionResult reconstruct(
    const std::map<JurisdictionId, ObservationLog>& logs,
    const Universe& universe, const ScoreParams& params) {
  params.validate();
  ReconstructionResult result;
  MatchStats stats;
  std::vector<PartialCircuit> pool;
  for (const auto& [jurisdiction, log] : logs) {
    auto processed = process_log(log, params, &stats);
    result.partials_before_prune += processed.accumulated.size();
    result.partials_after_prune += processed.pruned.size();
    pool.insert(pool.end(),
                std::make_move_iterator(processed.pruned.begin()),
                std::make_move_iterator(processed.pruned.end()));
  }
  // Coalition-level dedup: identical sequences reported by two observers
  // collapse before merging.
  pool = accumulate(std::move(pool));
  result.candidates = merge_overlapping(pool, universe, params);
  result.score_pair_evaluations = stats.score_pair_evaluations;
  result.matched_pairs = stats.matched_pairs;
  return result;
}

std::vector<PartialCircuit> accumulated_partials(
    const std::map<JurisdictionId, ObservationLog>& logs,
    const ScoreParams& params) {
  std::vector<PartialCircuit> pool;
  MatchStats stats;
  for (const auto& [jurisdiction, log] : logs) {
    auto processed = process_log(log, params, &stats);
    pool.insert(pool.end(),
                std::make_move_iterator(processed.accumulated.begin()),
                std::make_move_iterator(processed.accumulated.end()));
  }
  return pool;
}

}  // namespace jurisim
