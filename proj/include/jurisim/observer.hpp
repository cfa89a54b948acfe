#ifndef JURISIM_OBSERVER_HPP
#define JURISIM_OBSERVER_HPP

#include <map>
#include <set>
#include <vector>

#include "jurisim/overlay.hpp"
#include "jurisim/simulator.hpp"

namespace jurisim {

enum class Direction : std::uint8_t { Incoming = 0, Outgoing = 1 };

// A border crossing as seen by one jurisdiction: ground truth stripped,
// direction and case label attached.
struct ObservedConnection {
  NodeId sender = 0;
  NodeId receiver = 0;
  TimeMicros timestamp = 0;
  std::uint32_t size = 0;
  Direction direction = Direction::Incoming;
  CaseLabel case_label = CaseLabel::Case3;

  bool operator==(const ObservedConnection&) const = default;
};

struct ObservationLog {
  JurisdictionId jurisdiction = 0;
  std::vector<ObservedConnection> connections;  // sorted by timestamp
};

// Sorts every border-crossing record to the logs of its two endpoint
// jurisdictions, restricted to the cooperating coalition. Intra-jurisdiction
// records are observed by no one.
std::map<JurisdictionId, ObservationLog> partition_trace(
    const Universe& universe, const TraceLog& trace,
    const std::set<JurisdictionId>& coalition);

}  // namespace jurisim

#endif  // JURISIM_OBSERVER_HPP
