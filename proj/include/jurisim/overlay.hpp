#ifndef JURISIM_OVERLAY_HPP
#define JURISIM_OVERLAY_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "jurisim/common.hpp"

namespace jurisim {

using NodeId = std::uint32_t;
using JurisdictionId = std::uint32_t;

enum class NodeKind : std::uint8_t { User = 0, OnionRouter = 1, Server = 2 };

// Observable single-connection cases. Case1: non-OR -> OR, Case2: OR -> non-OR,
// Case3: OR -> OR. A non-OR never talks to a non-OR directly.
enum class CaseLabel : std::uint8_t { Case1 = 1, Case2 = 2, Case3 = 3 };

const char* node_kind_name(NodeKind k);

struct UniverseConfig {
  std::uint32_t or_count = 0;
  std::uint32_t server_count = 0;
  // One weight per jurisdiction. Proportional mode samples jurisdiction
  // indices with these weights; exact mode treats them as integer OR counts
  // (they must sum to or_count) while servers and users stay proportional.
  std::vector<double> jurisdiction_weights;
  std::vector<std::string> jurisdiction_labels;  // optional, may be empty
  bool exact_or_allocation = false;
  std::uint64_t seed = 0;
};

// Static node/jurisdiction partition of the overlay network. Onion routers
// and servers are created up front; user nodes are appended by the traffic
// generator on its own copy. The jurisdiction graph is implicitly complete.
class Universe {
 public:
  Universe() = default;

  static Universe build(const UniverseConfig& cfg);

  std::size_t jurisdiction_count() const { return weights_.size(); }
  std::size_t node_count() const { return kinds_.size(); }

  NodeKind kind(NodeId n) const;
  JurisdictionId jurisdiction(NodeId n) const;
  const std::string& label(JurisdictionId j) const;

  bool crosses_border(NodeId a, NodeId b) const;
  CaseLabel classify_case(NodeId sender, NodeId receiver) const;

  // Per-jurisdiction node counts indexed by NodeKind.
  std::uint32_t count(JurisdictionId j, NodeKind k) const;

  const std::vector<NodeId>& onion_routers() const { return onion_routers_; }
  const std::vector<NodeId>& servers() const { return servers_; }
  const std::vector<NodeId>& onion_routers_in(JurisdictionId j) const;

  // Weights used when placing dynamically added users (same distribution the
  // universe was built with).
  const std::vector<double>& placement_weights() const { return weights_; }

  // Appends a node (used by the simulator to add users). Ids are dense and
  // assigned in creation order.
  NodeId add_node(NodeKind k, JurisdictionId j);

  // Rebuilds a universe from serialized parts; nodes are given in id order.
  static Universe restore(
      std::vector<double> weights, std::vector<std::string> labels,
      const std::vector<std::pair<NodeKind, JurisdictionId>>& nodes);

  bool operator==(const Universe& other) const = default;

 private:
  void check_node(NodeId n) const;

  std::vector<double> weights_;
  std::vector<std::string> labels_;
  std::vector<NodeKind> kinds_;            // indexed by NodeId
  std::vector<JurisdictionId> membership_;  // indexed by NodeId
  std::vector<std::array<std::uint32_t, 3>> counts_;  // [jurisdiction][kind]
  std::vector<NodeId> onion_routers_;
  std::vector<NodeId> servers_;
  std::vector<std::vector<NodeId>> ors_by_jurisdiction_;
};

}  // namespace jurisim

#endif  // JURISIM_OVERLAY_HPP
