#include "jurisim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace jurisim {

namespace {

std::uint32_t scaled(std::uint32_t n, double scale) {
  return static_cast<std::uint32_t>(std::llround(n * scale));
}

UniverseConfig uniform_universe(std::uint32_t jurisdictions,
                                std::uint32_t or_count,
                                std::uint32_t server_count) {
  UniverseConfig u;
  u.or_count = or_count;
  u.server_count = server_count;
  u.jurisdiction_weights.assign(jurisdictions, 1.0);
  return u;
}

ActionDistribution pattern(double new_circuit, double add_user,
                           double remove_user, double send_traffic) {
  ActionDistribution d;
  d.p_new_circuit = new_circuit;
  d.p_add_user = add_user;
  d.p_remove_user = remove_user;
  d.p_send_traffic = send_traffic;
  return d;
}

}  // namespace

const std::vector<CountryRouters>& realworld_router_table() {
  static const std::vector<CountryRouters> table = {
      {"Australia", 50},  {"Canada", 262},      {"New Zealand", 14},
      {"UK", 258},        {"USA", 1092},        {"Denmark", 48},
      {"France", 910},    {"Netherlands", 508}, {"Norway", 52},
      {"Belgium", 24},    {"Germany", 1331},    {"Italy", 66},
      {"Spain", 54},      {"Sweden", 190},
  };
  return table;
}

namespace {

constexpr std::uint32_t kRealworldTotalRouters = 6613;
constexpr std::uint32_t kRealworldServers = 20000;

}  // namespace

UniverseConfig realworld_universe(std::size_t coalition_size, double scale,
                                  std::optional<std::uint32_t> rest_ors) {
  const auto& table = realworld_router_table();
  if (coalition_size == 0 || coalition_size > table.size()) {
    throw ConfigError("realworld universe: coalition size out of range");
  }
  UniverseConfig u;
  u.exact_or_allocation = true;
  std::uint32_t named_total = 0;
  for (std::size_t i = 0; i < coalition_size; ++i) {
    const std::uint32_t n = scaled(table[i].routers, scale);
    u.jurisdiction_weights.push_back(static_cast<double>(n));
    u.jurisdiction_labels.push_back(table[i].name);
    named_total += n;
  }
  const std::uint32_t total = scaled(kRealworldTotalRouters, scale);
  const std::uint32_t rest =
      rest_ors ? *rest_ors : (total > named_total ? total - named_total : 0);
  u.jurisdiction_weights.push_back(static_cast<double>(rest));
  u.jurisdiction_labels.push_back("Rest of world");
  u.or_count = named_total + rest;
  u.server_count = scaled(kRealworldServers, scale);
  return u;
}

std::vector<JurisdictionId> realworld_coalition(std::size_t coalition_size) {
  std::vector<JurisdictionId> members(coalition_size);
  for (std::size_t i = 0; i < coalition_size; ++i) {
    members[i] = static_cast<JurisdictionId>(i);
  }
  return members;
}

std::vector<std::string> preset_names() {
  return {"benchmark", "sweep-jurisdictions", "sweep-churn", "realworld"};
}

ExperimentPreset make_preset(const std::string& name, double scale) {
  const std::uint32_t ors = scaled(6000, scale);
  const std::uint32_t servers = scaled(20000, scale);
  const bool desk = scale < 1.0;

  ExperimentPreset preset;
  preset.name = name;
  preset.base.sim.actions = pattern(0.10, 0.10, 0.10, 0.70);
  preset.base.sim.universe = uniform_universe(6, ors, servers);
  preset.base.score =
      ScoreParams::for_model(preset.base.sim.latency, SizeMode::Fixed);

  if (name == "benchmark") {
    preset.iterations = desk ? 10 : 50;
    for (std::uint32_t jurisdictions : {6u, 10u, 15u}) {
      for (SizeMode mode : {SizeMode::Fixed, SizeMode::Variable}) {
        SweepPoint p;
        p.label = std::to_string(jurisdictions) + "/" + size_mode_name(mode);
        p.value = jurisdictions;
        p.jurisdiction_count = jurisdictions;
        p.size_mode = mode;
        preset.points.push_back(std::move(p));
      }
    }
    return preset;
  }

  if (name == "sweep-jurisdictions") {
    // Jurisdiction size starts at five and grows by five every fifth
    // iteration: 10 points at 5 iterations each.
    preset.iterations = 5;
    for (std::uint32_t jurisdictions = 5; jurisdictions <= 50;
         jurisdictions += 5) {
      SweepPoint p;
      p.label = std::to_string(jurisdictions);
      p.value = jurisdictions;
      p.jurisdiction_count = jurisdictions;
      preset.points.push_back(std::move(p));
    }
    return preset;
  }

  if (name == "sweep-churn") {
    // New-circuit share climbs by 10 points while send-traffic drops, on a
    // 20-jurisdiction network.
    preset.iterations = 5;
    preset.base.sim.universe = uniform_universe(20, ors, servers);
    for (int step = 0; step <= 8; ++step) {
      SweepPoint p;
      const double new_circuit = 0.10 * step;
      p.label = "new-circuit-" + std::to_string(10 * step) + "pct";
      p.value = new_circuit * 100.0;
      p.actions = pattern(new_circuit, 0.10, 0.10, 0.80 - new_circuit);
      preset.points.push_back(std::move(p));
    }
    return preset;
  }

  if (name == "realworld") {
    // Five/Nine/Fourteen-Eyes coalitions, churn pattern stepped by 20
    // points, non-uniform router counts from the published table.
    preset.iterations = 5;
    for (std::size_t coalition_size : {std::size_t{5}, std::size_t{9},
                                       std::size_t{14}}) {
      for (int step = 0; step <= 4; ++step) {
        SweepPoint p;
        const double new_circuit = 0.20 * step;
        p.label = "eyes-" + std::to_string(coalition_size) + "/new-circuit-" +
                  std::to_string(20 * step) + "pct";
        p.value = static_cast<double>(coalition_size * 100 + 20 * step);
        p.universe = realworld_universe(coalition_size, scale);
        p.actions = pattern(new_circuit, 0.10, 0.10, 0.80 - new_circuit);
        CoalitionSpec coalition;
        coalition.all = false;
        coalition.members = realworld_coalition(coalition_size);
        p.coalition = coalition;
        preset.points.push_back(std::move(p));
      }
    }
    return preset;
  }

  throw ConfigError("unknown preset '" + name + "'");
}

RunConfig apply_point(const RunConfig& base, const SweepPoint& point) {
  RunConfig config = base;
  if (point.universe) {
    config.sim.universe = *point.universe;
  } else if (point.jurisdiction_count) {
    config.sim.universe.jurisdiction_weights.assign(*point.jurisdiction_count,
                                                    1.0);
    config.sim.universe.jurisdiction_labels.clear();
  }
  if (point.actions) {
    config.sim.actions = *point.actions;
  }
  if (point.size_mode) {
    const SizeMode mode = *point.size_mode;
    config.sim.size_model.mode = mode;
    config.score = ScoreParams::for_model(config.sim.latency, mode);
  }
  if (point.coalition) {
    config.coalition = *point.coalition;
  }
  return config;
}

std::uint64_t iteration_seed(std::uint64_t base_seed, std::size_t point_index,
                             std::size_t iteration) {
  return derive_seed(derive_seed(base_seed, point_index + 1), iteration + 1);
}

PipelineRun run_pipeline(const RunConfig& config) {
  PipelineRun run;
  run.trace = run_simulation(config.sim);
  run.coalition = config.coalition.resolve(run.trace.universe);
  auto logs = partition_trace(run.trace.universe, run.trace, run.coalition);
  run.reconstruction =
      reconstruct(logs, run.trace.universe, config.score);
  run.labels = label_candidates(run.reconstruction.candidates, run.trace);
  run.metrics =
      compute_metrics(run.reconstruction.candidates, run.labels, run.trace);
  run.metrics.expected_max_pct =
      expected_max_oracle(run.trace, run.trace.universe, run.coalition);
  return run;
}

MetricsReport run_pipeline_metrics(const RunConfig& config) {
  return run_pipeline(config).metrics;
}

ResultTable run_preset(const ExperimentPreset& preset,
                       std::uint64_t base_seed) {
  ResultTable table;
  table.preset = preset.name;
  table.base_seed = base_seed;
  for (std::size_t pi = 0; pi < preset.points.size(); ++pi) {
    const SweepPoint& point = preset.points[pi];
    PointResult result;
    result.point = point;
    RunConfig config = apply_point(preset.base, point);
    for (std::size_t it = 0; it < preset.iterations; ++it) {
      const std::uint64_t seed = iteration_seed(base_seed, pi, it);
      config.sim.seed = seed;
      config.sim.universe.seed = derive_seed(seed, 0);
      if (it == 0) {
        result.config = config;
      }
      result.seeds.push_back(seed);
      result.reports.push_back(run_pipeline_metrics(config));
    }
    result.aggregate = aggregate_iterations(result.reports);
    table.points.push_back(std::move(result));
  }

  for (const PointResult& point : table.points) {
    auto add_row = [&](const std::string& metric, const MetricSummary& s) {
      table.rows.push_back({point.point.label, point.point.value, metric,
                            s.median, s.ci_low, s.ci_high});
    };
    add_row("relationship_revealing_pct",
            point.aggregate.relationship_revealing);
    add_row("reconstruction_pct", point.aggregate.reconstruction);
    add_row("imagined_pct", point.aggregate.imagined);
    add_row("imagined_discarded_pct", point.aggregate.imagined_discarded);
    add_row("real_discarded_pct", point.aggregate.real_discarded);
    add_row("expected_max_pct", point.aggregate.expected_max);
  }
  return table;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string result_table_csv(const ResultTable& table) {
  std::ostringstream out;
  out << "sweep_value,metric,median,ci_low,ci_high\n";
  for (const ResultRow& row : table.rows) {
    out << row.sweep_value << ',' << row.metric << ','
        << format_double(row.median) << ',' << format_double(row.ci_low)
        << ',' << format_double(row.ci_high) << '\n';
  }
  return out.str();
}

std::string iterations_csv(const ResultTable& table) {
  std::ostringstream out;
  out << "sweep_value,iteration,seed,relationship_revealing_pct,"
         "reconstruction_pct,imagined_pct,imagined_discarded_pct,"
         "real_discarded_pct,expected_max_pct\n";
  for (const PointResult& point : table.points) {
    for (std::size_t i = 0; i < point.reports.size(); ++i) {
      const MetricsReport& m = point.reports[i];
      out << point.point.label << ',' << i << ',' << point.seeds[i] << ','
          << format_double(m.relationship_revealing_pct) << ','
          << format_double(m.reconstruction_pct) << ','
          << format_double(m.imagined_pct) << ','
          << format_double(m.imagined_discarded_pct) << ','
          << format_double(m.real_discarded_pct) << ','
          << format_double(m.expected_max_pct) << '\n';
    }
  }
  return out.str();
}

void write_result_table(const std::filesystem::path& dir,
                        const ResultTable& table) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "results.csv", std::ios::binary);
    out << result_table_csv(table);
  }
  {
    std::ofstream out(dir / "iterations.csv", std::ios::binary);
    out << iterations_csv(table);
  }
  Json meta{{"preset", table.preset},
            {"base_seed", table.base_seed},
            {"points", Json::array()}};
  for (const PointResult& point : table.points) {
    meta["points"].push_back({{"label", point.point.label},
                              {"value", point.point.value},
                              {"seeds", point.seeds},
                              {"aggregate", aggregate_to_json(point.aggregate)}});
  }
  write_json_file(dir / "metadata.json", meta);

  for (std::size_t pi = 0; pi < table.points.size(); ++pi) {
    const PointResult& point = table.points[pi];
    for (std::size_t it = 0; it < point.reports.size(); ++it) {
      const std::string stem =
          "point_" + std::to_string(pi) + "_iter_" + std::to_string(it);
      RunConfig config = point.config;
      config.sim.seed = point.seeds[it];
      config.sim.universe.seed = derive_seed(point.seeds[it], 0);
      write_json_file(dir / (stem + "_config.json"),
                      run_config_to_json(config));
      write_json_file(dir / (stem + "_metrics.json"),
                      metrics_to_json(point.reports[it]));
    }
  }
}

namespace {

struct ShapeSamples {
  std::vector<std::pair<double, bool>> scored;  // (score, real)

  double pick_threshold(double target_precision, double fallback) const {
    if (scored.empty()) {
      return fallback;
    }
    std::vector<std::pair<double, bool>> sorted = scored;
    std::sort(sorted.begin(), sorted.end());
    // Suffix real counts: precision of keeping everything with score >= t.
    std::vector<std::size_t> real_suffix(sorted.size() + 1, 0);
    for (std::size_t i = sorted.size(); i > 0; --i) {
      real_suffix[i - 1] = real_suffix[i] + (sorted[i - 1].second ? 1 : 0);
    }
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (i > 0 && sorted[i].first == sorted[i - 1].first) {
        continue;
      }
      const double precision =
          static_cast<double>(real_suffix[i]) /
          static_cast<double>(sorted.size() - i);
      if (precision >= target_precision) {
        return sorted[i].first;
      }
    }
    return sorted.back().first + 1.0;  // nothing qualifies
  }
};

}  // namespace

CalibrationReport calibrate_thresholds(const RunConfig& base,
                                       std::uint32_t seeds,
                                       std::uint64_t base_seed,
                                       double target_precision) {
  ShapeSamples case4;
  ShapeSamples case5;
  for (std::uint32_t s = 0; s < seeds; ++s) {
    RunConfig config = base;
    config.sim.seed = derive_seed(base_seed, 2000 + s);
    config.sim.universe.seed = derive_seed(config.sim.seed, 0);
    TraceLog trace = run_simulation(config.sim);
    const auto coalition = config.coalition.resolve(trace.universe);
    auto logs = partition_trace(trace.universe, trace, coalition);
    auto partials = accumulated_partials(logs, config.score);
    TruthIndex truth(trace.circuits);
    for (const PartialCircuit& p : partials) {
      if (p.is_endpoint()) {
        continue;
      }
      const bool real = truth.is_real(p.nodes);
      (p.nodes.size() >= 4 ? case5 : case4)
          .scored.emplace_back(p.score, real);
    }
  }

  CalibrationReport report;
  report.case4_samples = case4.scored.size();
  report.case5_samples = case5.scored.size();
  report.case4_threshold =
      case4.pick_threshold(target_precision, base.score.case4_prune_threshold);
  report.case5_threshold =
      case5.pick_threshold(target_precision, base.score.case5_prune_threshold);
  if (report.case5_threshold < report.case4_threshold) {
    report.case5_threshold = report.case4_threshold;
  }

  auto precision_at = [](const ShapeSamples& samples, double threshold) {
    std::size_t kept = 0, real = 0;
    for (const auto& [score, is_real] : samples.scored) {
      if (score >= threshold) {
        ++kept;
        real += is_real ? 1 : 0;
      }
    }
    return kept == 0 ? 1.0
                     : static_cast<double>(real) / static_cast<double>(kept);
  };
  report.case4_precision = precision_at(case4, report.case4_threshold);
  report.case5_precision = precision_at(case5, report.case5_threshold);
  return report;
}

PrunePrecision measure_prune_precision(const RunConfig& config) {
  TraceLog trace = run_simulation(config.sim);
  const auto coalition = config.coalition.resolve(trace.universe);
  auto logs = partition_trace(trace.universe, trace, coalition);
  auto partials = accumulated_partials(logs, config.score);
  auto kept = prune(std::move(partials), config.score);
  TruthIndex truth(trace.circuits);
  PrunePrecision result;
  for (const PartialCircuit& p : kept) {
    if (p.is_endpoint()) {
      continue;
    }
    const bool real = truth.is_real(p.nodes);
    if (p.nodes.size() >= 4) {
      ++result.case5_kept;
      result.case5_real += real ? 1 : 0;
    } else {
      ++result.case4_kept;
      result.case4_real += real ? 1 : 0;
    }
  }
  return result;
}

}  // namespace jurisim
