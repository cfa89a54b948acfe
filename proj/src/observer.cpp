#include "jurisim/observer.hpp"

namespace jurisim {

std::map<JurisdictionId, ObservationLog> partition_trace(
    const Universe& universe, const TraceLog& trace,
    const std::set<JurisdictionId>& coalition) {
  for (JurisdictionId j : coalition) {
    if (j >= universe.jurisdiction_count()) {
      throw LookupError("coalition member " + std::to_string(j) +
                        " is not a jurisdiction of this universe");
    }
  }

  std::map<JurisdictionId, ObservationLog> logs;
  for (JurisdictionId j : coalition) {
    logs[j].jurisdiction = j;
  }

  for (const ConnectionRecord& rec : trace.records) {
    const JurisdictionId js = universe.jurisdiction(rec.sender);
    const JurisdictionId jr = universe.jurisdiction(rec.receiver);
    if (js == jr) {
      continue;
    }
    const CaseLabel label = universe.classify_case(rec.sender, rec.receiver);
    if (auto it = logs.find(js); it != logs.end()) {
      it->second.connections.push_back({rec.sender, rec.receiver,
                                        rec.timestamp, rec.size,
                                        Direction::Outgoing, label});
    }
    if (auto it = logs.find(jr); it != logs.end()) {
      it->second.connections.push_back({rec.sender, rec.receiver,
                                        rec.timestamp, rec.size,
                                        Direction::Incoming, label});
    }
  }
  return logs;
}

}  // namespace jurisim
