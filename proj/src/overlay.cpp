#include "jurisim/overlay.hpp"

#include <algorithm>
#include <numeric>

namespace jurisim {

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::User:
      return "user";
    case NodeKind::OnionRouter:
      return "onion_router";
    case NodeKind::Server:
      return "server";
  }
  return "unknown";
}

Universe Universe::build(const UniverseConfig& cfg) {
  if (cfg.jurisdiction_weights.empty()) {
    throw ConfigError("universe: no jurisdictions configured");
  }
  double weight_sum = 0.0;
  for (double w : cfg.jurisdiction_weights) {
    if (w < 0.0) {
      throw ConfigError("universe: negative jurisdiction weight");
    }
    weight_sum += w;
  }
  if (weight_sum <= 0.0) {
    throw ConfigError("universe: all jurisdiction weights are zero");
  }
  if (!cfg.jurisdiction_labels.empty() &&
      cfg.jurisdiction_labels.size() != cfg.jurisdiction_weights.size()) {
    throw ConfigError("universe: label count does not match weight count");
  }

  Universe u;
  u.weights_ = cfg.jurisdiction_weights;
  u.labels_ = cfg.jurisdiction_labels;
  if (u.labels_.empty()) {
    u.labels_.resize(u.weights_.size());
    for (std::size_t j = 0; j < u.labels_.size(); ++j) {
      u.labels_[j] = "J" + std::to_string(j);
    }
  }
  u.counts_.assign(u.weights_.size(), {0, 0, 0});
  u.ors_by_jurisdiction_.assign(u.weights_.size(), {});

  Rng rng(cfg.seed);
  std::discrete_distribution<std::size_t> pick(u.weights_.begin(),
                                               u.weights_.end());

  if (cfg.exact_or_allocation) {
    // Weights are integer OR counts; fill jurisdictions in order.
    std::uint64_t total = 0;
    for (double w : u.weights_) {
      double r = std::round(w);
      if (std::abs(w - r) > 1e-9) {
        throw ConfigError("universe: exact allocation requires integer weights");
      }
      total += static_cast<std::uint64_t>(r);
    }
    if (total != cfg.or_count) {
      throw ConfigError("universe: exact OR weights sum to " +
                        std::to_string(total) + ", expected " +
                        std::to_string(cfg.or_count));
    }
    for (std::size_t j = 0; j < u.weights_.size(); ++j) {
      auto n = static_cast<std::uint32_t>(std::llround(u.weights_[j]));
      for (std::uint32_t i = 0; i < n; ++i) {
        u.add_node(NodeKind::OnionRouter, static_cast<JurisdictionId>(j));
      }
    }
  } else {
    for (std::uint32_t i = 0; i < cfg.or_count; ++i) {
      u.add_node(NodeKind::OnionRouter,
                 static_cast<JurisdictionId>(pick(rng)));
    }
  }
  for (std::uint32_t i = 0; i < cfg.server_count; ++i) {
    u.add_node(NodeKind::Server, static_cast<JurisdictionId>(pick(rng)));
  }
  return u;
}

void Universe::check_node(NodeId n) const {
  if (n >= kinds_.size()) {
    throw LookupError("unknown node id " + std::to_string(n));
  }
}

NodeKind Universe::kind(NodeId n) const {
  check_node(n);
  return kinds_[n];
}

JurisdictionId Universe::jurisdiction(NodeId n) const {
  check_node(n);
  return membership_[n];
}

const std::string& Universe::label(JurisdictionId j) const {
  if (j >= labels_.size()) {
    throw LookupError("unknown jurisdiction id " + std::to_string(j));
  }
  return labels_[j];
}

bool Universe::crosses_border(NodeId a, NodeId b) const {
  return jurisdiction(a) != jurisdiction(b);
}

CaseLabel Universe::classify_case(NodeId sender, NodeId receiver) const {
  const bool sender_or = kind(sender) == NodeKind::OnionRouter;
  const bool receiver_or = kind(receiver) == NodeKind::OnionRouter;
  if (sender_or && receiver_or) {
    return CaseLabel::Case3;
  }
  if (sender_or) {
    return CaseLabel::Case2;
  }
  if (receiver_or) {
    return CaseLabel::Case1;
  }
  throw ProtocolError("connection between two non-onion-router nodes");
}

std::uint32_t Universe::count(JurisdictionId j, NodeKind k) const {
  if (j >= counts_.size()) {
    throw LookupError("unknown jurisdiction id " + std::to_string(j));
  }
  return counts_[j][static_cast<std::size_t>(k)];
}

const std::vector<NodeId>& Universe::onion_routers_in(JurisdictionId j) const {
  if (j >= ors_by_jurisdiction_.size()) {
    throw LookupError("unknown jurisdiction id " + std::to_string(j));
  }
  return ors_by_jurisdiction_[j];
}

Universe Universe::restore(
    std::vector<double> weights, std::vector<std::string> labels,
    const std::vector<std::pair<NodeKind, JurisdictionId>>& nodes) {
  if (weights.empty()) {
    throw ConfigError("universe: no jurisdictions to restore");
  }
  if (!labels.empty() && labels.size() != weights.size()) {
    throw ConfigError("universe: label count does not match weight count");
  }
  Universe u;
  u.weights_ = std::move(weights);
  u.labels_ = std::move(labels);
  if (u.labels_.empty()) {
    u.labels_.resize(u.weights_.size());
    for (std::size_t j = 0; j < u.labels_.size(); ++j) {
      u.labels_[j] = "J" + std::to_string(j);
    }
  }
  u.counts_.assign(u.weights_.size(), {0, 0, 0});
  u.ors_by_jurisdiction_.assign(u.weights_.size(), {});
  for (const auto& [kind, jurisdiction] : nodes) {
    u.add_node(kind, jurisdiction);
  }
  return u;
}

NodeId Universe::add_node(NodeKind k, JurisdictionId j) {
  if (j >= weights_.size()) {
    throw LookupError("unknown jurisdiction id " + std::to_string(j));
  }
  auto id = static_cast<NodeId>(kinds_.size());
  kinds_.push_back(k);
  membership_.push_back(j);
  counts_[j][static_cast<std::size_t>(k)] += 1;
  if (k == NodeKind::OnionRouter) {
    onion_routers_.push_back(id);
    ors_by_jurisdiction_[j].push_back(id);
  } else if (k == NodeKind::Server) {
    servers_.push_back(id);
  }
  return id;
}

}  // namespace jurisim
