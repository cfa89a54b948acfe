#ifndef JURISIM_HARNESS_HPP
#define JURISIM_HARNESS_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jurisim/evaluator.hpp"
#include "jurisim/io.hpp"

namespace jurisim {

// One sweep setting; fields present here override the preset's base config.
struct SweepPoint {
  std::string label;
  double value = 0.0;
  std::optional<std::uint32_t> jurisdiction_count;
  std::optional<ActionDistribution> actions;
  std::optional<SizeMode> size_mode;
  std::optional<UniverseConfig> universe;
  std::optional<CoalitionSpec> coalition;
};

struct ExperimentPreset {
  std::string name;
  RunConfig base;
  std::uint32_t iterations = 1;
  std::vector<SweepPoint> points;
};

// Real-world jurisdiction table (router counts by country).
struct CountryRouters {
  const char* name;
  std::uint32_t routers;
};
const std::vector<CountryRouters>& realworld_router_table();

// Universe for a Five/Nine/Fourteen-Eyes experiment: the first
// `coalition_size` countries of the table plus a rest-of-world jurisdiction.
// The rest of the world holds the routers needed to reach the table total
// unless overridden. Users and servers follow the router distribution.
UniverseConfig realworld_universe(std::size_t coalition_size, double scale,
                                  std::optional<std::uint32_t> rest_ors = {});

std::vector<JurisdictionId> realworld_coalition(std::size_t coalition_size);

// Built-in presets: benchmark, sweep-jurisdictions, sweep-churn, realworld.
// Node counts scale with `scale`; sweep presets keep the published
// per-point iteration count, the benchmark uses fewer iterations per cell
// at desk scale.
ExperimentPreset make_preset(const std::string& name, double scale);
std::vector<std::string> preset_names();

struct PipelineRun {
  TraceLog trace;
  std::set<JurisdictionId> coalition;
  ReconstructionResult reconstruction;
  std::vector<CandidateLabel> labels;
  MetricsReport metrics;
};

// simulate -> observe -> reconstruct -> evaluate, in memory.
PipelineRun run_pipeline(const RunConfig& config);
MetricsReport run_pipeline_metrics(const RunConfig& config);

struct ResultRow {
  std::string sweep_value;
  double value = 0.0;
  std::string metric;
  double median = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct PointResult {
  SweepPoint point;
  RunConfig config;  // base + point overrides, seed of iteration 0
  std::vector<std::uint64_t> seeds;
  std::vector<MetricsReport> reports;
  AggregateReport aggregate;
};

struct ResultTable {
  std::string preset;
  std::uint64_t base_seed = 0;
  std::vector<ResultRow> rows;
  std::vector<PointResult> points;
};

RunConfig apply_point(const RunConfig& base, const SweepPoint& point);
std::uint64_t iteration_seed(std::uint64_t base_seed, std::size_t point_index,
                             std::size_t iteration);

ResultTable run_preset(const ExperimentPreset& preset,
                       std::uint64_t base_seed);

// CSV emission. results.csv: sweep_value,metric,median,ci_low,ci_high.
// iterations.csv: one row per iteration with every metric column.
std::string result_table_csv(const ResultTable& table);
std::string iterations_csv(const ResultTable& table);

void write_result_table(const std::filesystem::path& dir,
                        const ResultTable& table);

struct CalibrationReport {
  double case4_threshold = 0.0;
  double case5_threshold = 0.0;
  std::size_t case4_samples = 0;
  std::size_t case5_samples = 0;
  double case4_precision = 0.0;  // at the chosen threshold, calibration data
  double case5_precision = 0.0;
};

// Runs labeled simulations and picks the smallest per-shape score threshold
// whose kept partials are at least `target_precision` real.
CalibrationReport calibrate_thresholds(const RunConfig& base,
                                       std::uint32_t seeds,
                                       std::uint64_t base_seed,
                                       double target_precision);

// Fraction of kept partials that are real on a fresh labeled run, by shape.
struct PrunePrecision {
  std::size_t case4_kept = 0;
  std::size_t case4_real = 0;
  std::size_t case5_kept = 0;
  std::size_t case5_real = 0;
};
PrunePrecision measure_prune_precision(const RunConfig& config);

}  // namespace jurisim

#endif  // JURISIM_HARNESS_HPP
