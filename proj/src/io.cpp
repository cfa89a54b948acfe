#include "jurisim/io.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace jurisim {

namespace {

NodeKind node_kind_from_name(const std::string& s) {
  if (s == "user") return NodeKind::User;
  if (s == "onion_router") return NodeKind::OnionRouter;
  if (s == "server") return NodeKind::Server;
  throw ConfigError("unknown node kind '" + s + "'");
}

PathStrategy strategy_from_name(const std::string& s) {
  if (s == "uniform") return PathStrategy::Uniform;
  if (s == "relationship-safe") return PathStrategy::RelationshipSafe;
  if (s == "sender-safe") return PathStrategy::SenderSafe;
  throw ConfigError("unknown path strategy '" + s + "'");
}

SizeMode size_mode_from_name(const std::string& s) {
  if (s == "fixed") return SizeMode::Fixed;
  if (s == "variable") return SizeMode::Variable;
  throw ConfigError("unknown size mode '" + s + "'");
}

}  // namespace

std::set<JurisdictionId> CoalitionSpec::resolve(const Universe& universe) const {
  std::set<JurisdictionId> result;
  if (all) {
    for (JurisdictionId j = 0; j < universe.jurisdiction_count(); ++j) {
      result.insert(j);
    }
  } else {
    result.insert(members.begin(), members.end());
  }
  return result;
}

Json universe_to_json(const Universe& u) {
  Json jurisdictions = Json::array();
  for (JurisdictionId j = 0; j < u.jurisdiction_count(); ++j) {
    jurisdictions.push_back({{"id", j},
                             {"label", u.label(j)},
                             {"weight", u.placement_weights()[j]}});
  }
  Json nodes = Json::array();
  for (NodeId n = 0; n < u.node_count(); ++n) {
    nodes.push_back({{"node_id", n},
                     {"kind", node_kind_name(u.kind(n))},
                     {"jurisdiction_id", u.jurisdiction(n)}});
  }
  return Json{{"jurisdictions", jurisdictions}, {"nodes", nodes}};
}

Universe universe_from_json(const Json& j) {
  std::vector<double> weights;
  std::vector<std::string> labels;
  for (const auto& entry : j.at("jurisdictions")) {
    weights.push_back(entry.at("weight").get<double>());
    labels.push_back(entry.at("label").get<std::string>());
  }
  std::vector<std::pair<NodeKind, JurisdictionId>> nodes;
  for (const auto& entry : j.at("nodes")) {
    nodes.emplace_back(
        node_kind_from_name(entry.at("kind").get<std::string>()),
        entry.at("jurisdiction_id").get<JurisdictionId>());
  }
  return Universe::restore(std::move(weights), std::move(labels), nodes);
}

Json sim_config_to_json(const SimConfig& c) {
  return Json{
      {"universe",
       {{"or_count", c.universe.or_count},
        {"server_count", c.universe.server_count},
        {"jurisdiction_weights", c.universe.jurisdiction_weights},
        {"jurisdiction_labels", c.universe.jurisdiction_labels},
        {"exact_or_allocation", c.universe.exact_or_allocation},
        {"seed", c.universe.seed}}},
      {"actions",
       {{"new_circuit", c.actions.p_new_circuit},
        {"add_user", c.actions.p_add_user},
        {"remove_user", c.actions.p_remove_user},
        {"send_traffic", c.actions.p_send_traffic}}},
      {"duration_us", c.duration},
      {"max_actions", c.max_actions},
      {"reply_min", c.reply_min},
      {"reply_max", c.reply_max},
      {"size_model",
       {{"mode", size_mode_name(c.size_model.mode)},
        {"fixed_cell_bytes", c.size_model.fixed_cell_bytes},
        {"variable_min_bytes", c.size_model.variable_min_bytes},
        {"variable_max_bytes", c.size_model.variable_max_bytes}}},
      {"latency",
       {{"link_median_ms", c.latency.link_median_ms},
        {"link_sigma_log", c.latency.link_sigma_log},
        {"node_processing_ms", c.latency.node_processing_ms}}},
      {"strategy", path_strategy_name(c.strategy)},
      {"mean_action_gap_us", c.mean_action_gap},
      {"initial_users", c.initial_users},
      {"seed", c.seed}};
}

SimConfig sim_config_from_json(const Json& j) {
  SimConfig c;
  const auto& u = j.at("universe");
  c.universe.or_count = u.at("or_count").get<std::uint32_t>();
  c.universe.server_count = u.at("server_count").get<std::uint32_t>();
  c.universe.jurisdiction_weights =
      u.at("jurisdiction_weights").get<std::vector<double>>();
  c.universe.jurisdiction_labels =
      u.at("jurisdiction_labels").get<std::vector<std::string>>();
  c.universe.exact_or_allocation = u.at("exact_or_allocation").get<bool>();
  c.universe.seed = u.at("seed").get<std::uint64_t>();
  const auto& a = j.at("actions");
  c.actions.p_new_circuit = a.at("new_circuit").get<double>();
  c.actions.p_add_user = a.at("add_user").get<double>();
  c.actions.p_remove_user = a.at("remove_user").get<double>();
  c.actions.p_send_traffic = a.at("send_traffic").get<double>();
  c.duration = j.at("duration_us").get<TimeMicros>();
  c.max_actions = j.at("max_actions").get<std::uint64_t>();
  c.reply_min = j.at("reply_min").get<std::uint32_t>();
  c.reply_max = j.at("reply_max").get<std::uint32_t>();
  const auto& s = j.at("size_model");
  c.size_model.mode = size_mode_from_name(s.at("mode").get<std::string>());
  c.size_model.fixed_cell_bytes = s.at("fixed_cell_bytes").get<std::uint32_t>();
  c.size_model.variable_min_bytes =
      s.at("variable_min_bytes").get<std::uint32_t>();
  c.size_model.variable_max_bytes =
      s.at("variable_max_bytes").get<std::uint32_t>();
  const auto& l = j.at("latency");
  c.latency.link_median_ms = l.at("link_median_ms").get<double>();
  c.latency.link_sigma_log = l.at("link_sigma_log").get<double>();
  c.latency.node_processing_ms = l.at("node_processing_ms").get<double>();
  c.strategy = strategy_from_name(j.at("strategy").get<std::string>());
  c.mean_action_gap = j.at("mean_action_gap_us").get<TimeMicros>();
  c.initial_users = j.at("initial_users").get<std::uint32_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

Json score_params_to_json(const ScoreParams& p) {
  return Json{{"expected_delta_s", p.expected_delta_s},
              {"expected_delta_case5_s", p.expected_delta_case5_s},
              {"window_s", p.window_s},
              {"size_tolerance", p.size_tolerance},
              {"case4_unit", p.case4_unit},
              {"case5_unit", p.case5_unit},
              {"overlap_bonus", p.overlap_bonus},
              {"min_join_evidence", p.min_join_evidence},
              {"case4_prune_threshold", p.case4_prune_threshold},
              {"case5_prune_threshold", p.case5_prune_threshold},
              {"accept_threshold", p.accept_threshold},
              {"size_mode_aware", p.size_mode_aware}};
}

ScoreParams score_params_from_json(const Json& j) {
  ScoreParams p;
  p.expected_delta_s = j.at("expected_delta_s").get<double>();
  p.expected_delta_case5_s = j.at("expected_delta_case5_s").get<double>();
  p.window_s = j.at("window_s").get<double>();
  p.size_tolerance = j.at("size_tolerance").get<std::uint32_t>();
  p.case4_unit = j.at("case4_unit").get<double>();
  p.case5_unit = j.at("case5_unit").get<double>();
  p.overlap_bonus = j.at("overlap_bonus").get<double>();
  if (j.contains("min_join_evidence")) {
    p.min_join_evidence = j.at("min_join_evidence").get<std::size_t>();
  }
  p.case4_prune_threshold = j.at("case4_prune_threshold").get<double>();
  p.case5_prune_threshold = j.at("case5_prune_threshold").get<double>();
  p.accept_threshold = j.at("accept_threshold").get<double>();
  p.size_mode_aware = j.at("size_mode_aware").get<bool>();
  return p;
}

Json run_config_to_json(const RunConfig& c) {
  Json coalition;
  if (c.coalition.all) {
    coalition = "all";
  } else {
    coalition = c.coalition.members;
  }
  return Json{{"sim", sim_config_to_json(c.sim)},
              {"score", score_params_to_json(c.score)},
              {"coalition", coalition}};
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  c.sim = sim_config_from_json(j.at("sim"));
  c.score = score_params_from_json(j.at("score"));
  const auto& coalition = j.at("coalition");
  if (coalition.is_string() && coalition.get<std::string>() == "all") {
    c.coalition.all = true;
  } else {
    c.coalition.all = false;
    c.coalition.members = coalition.get<std::vector<JurisdictionId>>();
  }
  return c;
}

Json circuits_to_json(const std::vector<Circuit>& circuits) {
  Json out = Json::array();
  for (const Circuit& c : circuits) {
    Json entry{{"id", c.circuit_id},   {"user", c.user},
               {"or1", c.or1},         {"or2", c.or2},
               {"or3", c.or3},         {"server", c.server},
               {"created_at_us", c.created_at}};
    if (c.destroyed_at) {
      entry["destroyed_at_us"] = *c.destroyed_at;
    } else {
      entry["destroyed_at_us"] = nullptr;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<Circuit> circuits_from_json(const Json& j) {
  std::vector<Circuit> out;
  out.reserve(j.size());
  for (const auto& entry : j) {
    Circuit c;
    c.circuit_id = entry.at("id").get<std::uint64_t>();
    c.user = entry.at("user").get<NodeId>();
    c.or1 = entry.at("or1").get<NodeId>();
    c.or2 = entry.at("or2").get<NodeId>();
    c.or3 = entry.at("or3").get<NodeId>();
    c.server = entry.at("server").get<NodeId>();
    c.created_at = entry.at("created_at_us").get<TimeMicros>();
    if (!entry.at("destroyed_at_us").is_null()) {
      c.destroyed_at = entry.at("destroyed_at_us").get<TimeMicros>();
    }
    out.push_back(c);
  }
  return out;
}

Json candidates_to_json(const std::vector<CandidateCircuit>& candidates) {
  Json out = Json::array();
  for (const CandidateCircuit& c : candidates) {
    out.push_back({{"nodes", c.nodes},
                   {"score", c.score},
                   {"verdict", c.verdict == Verdict::AssumedReal
                                   ? "assumed_real"
                                   : "assumed_imagined"},
                   {"sender_evidence", c.sender_evidence_count},
                   {"receiver_evidence", c.receiver_evidence_count}});
  }
  return out;
}

std::vector<CandidateCircuit> candidates_from_json(const Json& j) {
  std::vector<CandidateCircuit> out;
  out.reserve(j.size());
  for (const auto& entry : j) {
    CandidateCircuit c;
    c.nodes = entry.at("nodes").get<std::vector<NodeId>>();
    c.score = entry.at("score").get<double>();
    c.verdict = entry.at("verdict").get<std::string>() == "assumed_real"
                    ? Verdict::AssumedReal
                    : Verdict::AssumedImagined;
    c.sender_evidence_count = entry.at("sender_evidence").get<std::size_t>();
    c.receiver_evidence_count =
        entry.at("receiver_evidence").get<std::size_t>();
    out.push_back(std::move(c));
  }
  return out;
}

Json metrics_to_json(const MetricsReport& m) {
  return Json{{"relationship_revealing_pct", m.relationship_revealing_pct},
              {"reconstruction_pct", m.reconstruction_pct},
              {"imagined_pct", m.imagined_pct},
              {"imagined_discarded_pct", m.imagined_discarded_pct},
              {"real_discarded_pct", m.real_discarded_pct},
              {"expected_max_pct", m.expected_max_pct},
              {"counts",
               {{"total_truth_circuits", m.total_truth_circuits},
                {"total_candidates", m.total_candidates},
                {"revealed_circuits", m.revealed_circuits},
                {"reconstructed_circuits", m.reconstructed_circuits},
                {"imagined_accepted", m.imagined_accepted},
                {"imagined_discarded", m.imagined_discarded},
                {"real_discarded", m.real_discarded}}}};
}

MetricsReport metrics_from_json(const Json& j) {
  MetricsReport m;
  m.relationship_revealing_pct =
      j.at("relationship_revealing_pct").get<double>();
  m.reconstruction_pct = j.at("reconstruction_pct").get<double>();
  m.imagined_pct = j.at("imagined_pct").get<double>();
  m.imagined_discarded_pct = j.at("imagined_discarded_pct").get<double>();
  m.real_discarded_pct = j.at("real_discarded_pct").get<double>();
  m.expected_max_pct = j.at("expected_max_pct").get<double>();
  const auto& c = j.at("counts");
  m.total_truth_circuits = c.at("total_truth_circuits").get<std::uint64_t>();
  m.total_candidates = c.at("total_candidates").get<std::uint64_t>();
  m.revealed_circuits = c.at("revealed_circuits").get<std::uint64_t>();
  m.reconstructed_circuits =
      c.at("reconstructed_circuits").get<std::uint64_t>();
  m.imagined_accepted = c.at("imagined_accepted").get<std::uint64_t>();
  m.imagined_discarded = c.at("imagined_discarded").get<std::uint64_t>();
  m.real_discarded = c.at("real_discarded").get<std::uint64_t>();
  return m;
}

Json aggregate_to_json(const AggregateReport& a) {
  auto summary = [](const MetricSummary& s) {
    return Json{{"median", s.median}, {"ci_low", s.ci_low},
                {"ci_high", s.ci_high}};
  };
  return Json{{"iterations", a.iterations},
              {"relationship_revealing_pct", summary(a.relationship_revealing)},
              {"reconstruction_pct", summary(a.reconstruction)},
              {"imagined_pct", summary(a.imagined)},
              {"imagined_discarded_pct", summary(a.imagined_discarded)},
              {"real_discarded_pct", summary(a.real_discarded)},
              {"expected_max_pct", summary(a.expected_max)}};
}

namespace {

void append_timestamp(std::string& out, TimeMicros t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld.%06lld",
                static_cast<long long>(t / 1000000),
                static_cast<long long>(t % 1000000));
  out += buf;
}

TimeMicros parse_timestamp(const char*& p, const char* end) {
  TimeMicros seconds = 0;
  auto [next, ec] = std::from_chars(p, end, seconds);
  if (ec != std::errc{} || next == end || *next != '.') {
    throw ConfigError("trace record: bad timestamp");
  }
  p = next + 1;
  TimeMicros micros = 0;
  int digits = 0;
  while (p != end && *p >= '0' && *p <= '9') {
    micros = micros * 10 + (*p - '0');
    ++p;
    ++digits;
  }
  if (digits != 6) {
    throw ConfigError("trace record: expected 6 fractional digits");
  }
  return seconds * 1000000 + micros;
}

template <typename T>
T parse_unsigned(const char*& p, const char* end) {
  T value{};
  auto [next, ec] = std::from_chars(p, end, value);
  if (ec != std::errc{}) {
    throw ConfigError("trace record: bad integer field");
  }
  p = next;
  return value;
}

void skip_space(const char*& p, const char* end) {
  while (p != end && *p == ' ') {
    ++p;
  }
}

}  // namespace

void write_trace_records(const std::filesystem::path& path,
                         const std::vector<ConnectionRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot open " + path.string() + " for writing");
  }
  std::string buffer;
  buffer.reserve(1 << 20);
  for (const ConnectionRecord& r : records) {
    buffer += std::to_string(r.sender);
    buffer += ' ';
    buffer += std::to_string(r.receiver);
    buffer += ' ';
    append_timestamp(buffer, r.timestamp);
    buffer += ' ';
    buffer += std::to_string(r.size);
    buffer += ' ';
    buffer += std::to_string(r.truth_circuit_id);
    buffer += '\n';
    if (buffer.size() > (1 << 20) - 128) {
      out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
      buffer.clear();
    }
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
}

std::vector<ConnectionRecord> read_trace_records(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open " + path.string());
  }
  std::vector<ConnectionRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const char* p = line.data();
    const char* end = line.data() + line.size();
    ConnectionRecord r;
    r.sender = parse_unsigned<NodeId>(p, end);
    skip_space(p, end);
    r.receiver = parse_unsigned<NodeId>(p, end);
    skip_space(p, end);
    r.timestamp = parse_timestamp(p, end);
    skip_space(p, end);
    r.size = parse_unsigned<std::uint32_t>(p, end);
    skip_space(p, end);
    r.truth_circuit_id = parse_unsigned<std::uint64_t>(p, end);
    records.push_back(r);
  }
  return records;
}

void write_observation_log(const std::filesystem::path& path,
                           const ObservationLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot open " + path.string() + " for writing");
  }
  std::string buffer;
  buffer.reserve(1 << 20);
  for (const ObservedConnection& c : log.connections) {
    buffer += std::to_string(c.sender);
    buffer += ' ';
    buffer += std::to_string(c.receiver);
    buffer += ' ';
    append_timestamp(buffer, c.timestamp);
    buffer += ' ';
    buffer += std::to_string(c.size);
    buffer += '\n';
    if (buffer.size() > (1 << 20) - 128) {
      out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
      buffer.clear();
    }
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
}

ObservationLog read_observation_log(const std::filesystem::path& path,
                                    JurisdictionId jurisdiction,
                                    const Universe& universe) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open " + path.string());
  }
  ObservationLog log;
  log.jurisdiction = jurisdiction;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const char* p = line.data();
    const char* end = line.data() + line.size();
    ObservedConnection c;
    c.sender = parse_unsigned<NodeId>(p, end);
    skip_space(p, end);
    c.receiver = parse_unsigned<NodeId>(p, end);
    skip_space(p, end);
    c.timestamp = parse_timestamp(p, end);
    skip_space(p, end);
    c.size = parse_unsigned<std::uint32_t>(p, end);
    c.direction = universe.jurisdiction(c.sender) == jurisdiction
                      ? Direction::Outgoing
                      : Direction::Incoming;
    c.case_label = universe.classify_case(c.sender, c.receiver);
    log.connections.push_back(c);
  }
  return log;
}

void write_trace(const std::filesystem::path& dir, const TraceLog& trace,
                 const SimConfig& config) {
  std::filesystem::create_directories(dir);
  write_trace_records(dir / "trace.log", trace.records);
  Json meta{{"config", sim_config_to_json(config)},
            {"universe", universe_to_json(trace.universe)},
            {"circuits", circuits_to_json(trace.circuits)},
            {"final_time_us", trace.final_time},
            {"action_counts", trace.action_counts},
            {"forced_add_user_count", trace.forced_add_user_count},
            {"failed_build_attempts", trace.failed_build_attempts}};
  write_json_file(dir / "trace_meta.json", meta);
}

TraceLog read_trace(const std::filesystem::path& dir) {
  TraceLog trace;
  const Json meta = read_json_file(dir / "trace_meta.json");
  trace.universe = universe_from_json(meta.at("universe"));
  trace.circuits = circuits_from_json(meta.at("circuits"));
  trace.final_time = meta.at("final_time_us").get<TimeMicros>();
  trace.action_counts =
      meta.at("action_counts").get<std::array<std::uint64_t, 4>>();
  trace.forced_add_user_count =
      meta.at("forced_add_user_count").get<std::uint64_t>();
  trace.failed_build_attempts =
      meta.at("failed_build_attempts").get<std::uint64_t>();
  trace.records = read_trace_records(dir / "trace.log");
  return trace;
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot open " + path.string() + " for writing");
  }
  out << j.dump(2) << '\n';
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open " + path.string());
  }
  return Json::parse(in);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace jurisim
