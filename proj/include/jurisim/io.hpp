#ifndef JURISIM_IO_HPP
#define JURISIM_IO_HPP

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "jurisim/evaluator.hpp"
#include "jurisim/observer.hpp"
#include "jurisim/reconstructor.hpp"
#include "jurisim/simulator.hpp"

namespace jurisim {

using Json = nlohmann::ordered_json;

// Which jurisdictions cooperate. Either the whole universe or a named list.
struct CoalitionSpec {
  bool all = true;
  std::vector<JurisdictionId> members;

  std::set<JurisdictionId> resolve(const Universe& universe) const;
};

// One declarative file drives every stage of the pipeline.
struct RunConfig {
  SimConfig sim;
  ScoreParams score;
  CoalitionSpec coalition;
};

Json universe_to_json(const Universe& u);
Universe universe_from_json(const Json& j);

Json sim_config_to_json(const SimConfig& c);
SimConfig sim_config_from_json(const Json& j);

Json score_params_to_json(const ScoreParams& p);
ScoreParams score_params_from_json(const Json& j);

Json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const Json& j);

Json circuits_to_json(const std::vector<Circuit>& circuits);
std::vector<Circuit> circuits_from_json(const Json& j);

Json candidates_to_json(const std::vector<CandidateCircuit>& candidates);
std::vector<CandidateCircuit> candidates_from_json(const Json& j);

Json metrics_to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const Json& j);

Json aggregate_to_json(const AggregateReport& a);

// Line-delimited trace: "sender receiver timestamp size circuit_id", one
// record per line, timestamps with 6 decimal places (exact round trip).
void write_trace_records(const std::filesystem::path& path,
                         const std::vector<ConnectionRecord>& records);
std::vector<ConnectionRecord> read_trace_records(
    const std::filesystem::path& path);

// Same line format minus the ground-truth circuit id.
void write_observation_log(const std::filesystem::path& path,
                           const ObservationLog& log);

// Re-derives direction and case labels from the universe.
ObservationLog read_observation_log(const std::filesystem::path& path,
                                    JurisdictionId jurisdiction,
                                    const Universe& universe);

// Full trace artifact: records file plus a JSON sidecar with config,
// universe, circuits and run counters.
void write_trace(const std::filesystem::path& dir, const TraceLog& trace,
                 const SimConfig& config);
TraceLog read_trace(const std::filesystem::path& dir);

void write_json_file(const std::filesystem::path& path, const Json& j);
Json read_json_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace jurisim

#endif  // JURISIM_IO_HPP
