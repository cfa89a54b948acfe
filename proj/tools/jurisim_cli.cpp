// Command-line front end: simulate / observe / reconstruct / evaluate /
// calibrate / experiment.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "jurisim/harness.hpp"
#include "jurisim/io.hpp"

namespace fs = std::filesystem;
using namespace jurisim;

namespace {

RunConfig default_run_config() {
  RunConfig config;
  config.sim.universe.or_count = 600;
  config.sim.universe.server_count = 2000;
  config.sim.universe.jurisdiction_weights.assign(6, 1.0);
  config.score =
      ScoreParams::for_model(config.sim.latency, config.sim.size_model.mode);
  return config;
}

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::string> size_mode;
  std::optional<std::string> strategy;
  double scale = 0.1;
};

RunConfig load_config(const GlobalFlags& flags) {
  RunConfig config = flags.config_path.empty()
                         ? default_run_config()
                         : run_config_from_json(
                               read_json_file(flags.config_path));
  if (flags.seed) {
    config.sim.seed = *flags.seed;
    config.sim.universe.seed = derive_seed(*flags.seed, 0);
  }
  if (flags.size_mode) {
    const SizeMode mode =
        *flags.size_mode == "variable" ? SizeMode::Variable : SizeMode::Fixed;
    config.sim.size_model.mode = mode;
    config.score = ScoreParams::for_model(config.sim.latency, mode);
  }
  if (flags.strategy) {
    if (*flags.strategy == "uniform") {
      config.sim.strategy = PathStrategy::Uniform;
    } else if (*flags.strategy == "relationship-safe") {
      config.sim.strategy = PathStrategy::RelationshipSafe;
    } else {
      config.sim.strategy = PathStrategy::SenderSafe;
    }
  }
  return config;
}

std::map<JurisdictionId, ObservationLog> read_observation_dir(
    const fs::path& dir, const Universe& universe) {
  const Json manifest = read_json_file(dir / "observe_meta.json");
  std::map<JurisdictionId, ObservationLog> logs;
  for (const auto& j : manifest.at("coalition")) {
    const auto id = j.get<JurisdictionId>();
    const fs::path path = dir / ("obs_" + std::to_string(id) + ".log");
    logs[id] = read_observation_log(path, id, universe);
  }
  return logs;
}

int cmd_simulate(const GlobalFlags& flags) {
  RunConfig config = load_config(flags);
  TraceLog trace = run_simulation(config.sim);
  write_trace(flags.out_dir, trace, config.sim);
  write_json_file(fs::path(flags.out_dir) / "run_config.json",
                  run_config_to_json(config));
  std::printf("wrote %zu records, %zu circuits to %s\n", trace.records.size(),
              trace.circuits.size(), flags.out_dir.c_str());
  return 0;
}

int cmd_observe(const GlobalFlags& flags, const std::string& trace_dir) {
  RunConfig config = flags.config_path.empty()
                         ? run_config_from_json(read_json_file(
                               fs::path(trace_dir) / "run_config.json"))
                         : run_config_from_json(
                               read_json_file(flags.config_path));
  TraceLog trace = read_trace(trace_dir);
  const auto coalition = config.coalition.resolve(trace.universe);
  auto logs = partition_trace(trace.universe, trace, coalition);
  fs::create_directories(flags.out_dir);
  Json manifest{{"coalition", Json::array()}};
  for (const auto& [id, log] : logs) {
    manifest["coalition"].push_back(id);
    write_observation_log(
        fs::path(flags.out_dir) / ("obs_" + std::to_string(id) + ".log"),
        log);
  }
  write_json_file(fs::path(flags.out_dir) / "observe_meta.json", manifest);
  write_json_file(fs::path(flags.out_dir) / "universe.json",
                  universe_to_json(trace.universe));
  std::printf("wrote %zu observation logs to %s\n", logs.size(),
              flags.out_dir.c_str());
  return 0;
}

int cmd_reconstruct(const GlobalFlags& flags, const std::string& obs_dir) {
  RunConfig config = flags.config_path.empty()
                         ? default_run_config()
                         : run_config_from_json(
                               read_json_file(flags.config_path));
  Universe universe =
      universe_from_json(read_json_file(fs::path(obs_dir) / "universe.json"));
  auto logs = read_observation_dir(obs_dir, universe);
  auto result = reconstruct(logs, universe, config.score);
  fs::create_directories(flags.out_dir);
  write_json_file(fs::path(flags.out_dir) / "candidates.json",
                  candidates_to_json(result.candidates));
  std::printf("reconstructed %zu candidates (%llu score evaluations)\n",
              result.candidates.size(),
              static_cast<unsigned long long>(result.score_pair_evaluations));
  return 0;
}

int cmd_evaluate(const GlobalFlags& flags, const std::string& candidates_path,
                 const std::string& trace_dir) {
  RunConfig config = flags.config_path.empty()
                         ? run_config_from_json(read_json_file(
                               fs::path(trace_dir) / "run_config.json"))
                         : run_config_from_json(
                               read_json_file(flags.config_path));
  TraceLog trace = read_trace(trace_dir);
  auto candidates = candidates_from_json(read_json_file(candidates_path));
  auto labels = label_candidates(candidates, trace);
  MetricsReport metrics = compute_metrics(candidates, labels, trace);
  const auto coalition = config.coalition.resolve(trace.universe);
  metrics.expected_max_pct =
      expected_max_oracle(trace, trace.universe, coalition);
  fs::create_directories(flags.out_dir);
  write_json_file(fs::path(flags.out_dir) / "metrics.json",
                  metrics_to_json(metrics));
  std::printf("relationship revealing %.2f%%, reconstruction %.2f%%\n",
              metrics.relationship_revealing_pct, metrics.reconstruction_pct);
  return 0;
}

int cmd_calibrate(const GlobalFlags& flags, std::uint32_t seeds,
                  double target, double margin,
                  const std::string& params_out) {
  RunConfig config = load_config(flags);
  const auto report = calibrate_thresholds(
      config, seeds, flags.seed.value_or(1), target + margin);
  config.score.case4_prune_threshold = report.case4_threshold;
  config.score.case5_prune_threshold = report.case5_threshold;
  write_json_file(params_out, score_params_to_json(config.score));
  std::printf("case4 threshold %.4f (%zu samples, precision %.4f)\n",
              report.case4_threshold, report.case4_samples,
              report.case4_precision);
  std::printf("case5 threshold %.4f (%zu samples, precision %.4f)\n",
              report.case5_threshold, report.case5_samples,
              report.case5_precision);
  std::printf("wrote %s\n", params_out.c_str());
  return 0;
}

int cmd_experiment(const GlobalFlags& flags, const std::string& preset_name,
                   std::optional<std::uint32_t> iterations,
                   std::optional<std::uint32_t> jurisdictions) {
  ExperimentPreset preset = make_preset(preset_name, flags.scale);
  if (iterations) {
    preset.iterations = *iterations;
  }
  if (flags.strategy) {
    if (*flags.strategy == "uniform") {
      preset.base.sim.strategy = PathStrategy::Uniform;
    } else if (*flags.strategy == "relationship-safe") {
      preset.base.sim.strategy = PathStrategy::RelationshipSafe;
    } else {
      preset.base.sim.strategy = PathStrategy::SenderSafe;
    }
  }
  if (jurisdictions) {
    std::erase_if(preset.points, [&](const SweepPoint& p) {
      return !p.jurisdiction_count || *p.jurisdiction_count != *jurisdictions;
    });
  }
  if (flags.size_mode) {
    const SizeMode mode =
        *flags.size_mode == "variable" ? SizeMode::Variable : SizeMode::Fixed;
    bool any_mode_point = false;
    for (const SweepPoint& p : preset.points) {
      any_mode_point = any_mode_point || p.size_mode.has_value();
    }
    if (any_mode_point) {
      std::erase_if(preset.points, [&](const SweepPoint& p) {
        return !p.size_mode || *p.size_mode != mode;
      });
    } else {
      preset.base.sim.size_model.mode = mode;
      preset.base.score = ScoreParams::for_model(preset.base.sim.latency, mode);
    }
  }
  if (preset.points.empty()) {
    throw ConfigError("experiment: no sweep points left after filtering");
  }

  ResultTable table = run_preset(preset, flags.seed.value_or(1));
  write_result_table(flags.out_dir, table);
  for (const ResultRow& row : table.rows) {
    if (row.metric == "relationship_revealing_pct") {
      std::printf("%-32s %s median %.2f [%.2f, %.2f]\n",
                  row.sweep_value.c_str(), row.metric.c_str(), row.median,
                  row.ci_low, row.ci_high);
    }
  }
  std::printf("wrote results to %s\n", flags.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jurisdictional border traffic simulation and circuit "
               "reconstruction"};
  app.require_subcommand(1);

  GlobalFlags flags;
  std::uint64_t seed_value = 0;
  auto* seed_opt =
      app.add_option("--seed", seed_value, "Base RNG seed")->group("Global");
  app.add_option("--config", flags.config_path, "Run config JSON")
      ->group("Global");
  app.add_option("--out", flags.out_dir, "Output directory")->group("Global");
  auto* size_mode_opt =
      app.add_option("--size-mode", "Packet size mode")
          ->check(CLI::IsMember({"fixed", "variable"}))
          ->group("Global");
  auto* strategy_opt =
      app.add_option("--strategy", "Path selection strategy")
          ->check(CLI::IsMember({"uniform", "relationship-safe",
                                 "sender-safe"}))
          ->group("Global");
  app.add_option("--scale", flags.scale, "Node count scale factor")
      ->group("Global");

  auto* simulate = app.add_subcommand("simulate", "Generate a traffic trace");

  std::string trace_dir = ".";
  auto* observe =
      app.add_subcommand("observe", "Split a trace into border logs");
  observe->add_option("--trace", trace_dir, "Trace directory")->required();

  std::string obs_dir;
  auto* reconstruct_cmd =
      app.add_subcommand("reconstruct", "Rebuild circuits from border logs");
  reconstruct_cmd->add_option("--obs", obs_dir, "Observation directory")
      ->required();

  std::string candidates_path;
  std::string eval_trace_dir;
  auto* evaluate =
      app.add_subcommand("evaluate", "Compare candidates with ground truth");
  evaluate->add_option("--candidates", candidates_path, "candidates.json")
      ->required();
  evaluate->add_option("--trace", eval_trace_dir, "Trace directory")
      ->required();

  std::uint32_t calib_seeds = 8;
  double calib_target = 0.95;
  double calib_margin = 0.02;
  std::string params_out = "score_params.json";
  auto* calibrate =
      app.add_subcommand("calibrate", "Fit pruning thresholds on labeled runs");
  calibrate->add_option("--seeds", calib_seeds, "Number of labeled runs");
  calibrate->add_option("--target", calib_target, "Precision target");
  calibrate->add_option("--margin", calib_margin,
                        "Safety margin over the target for fresh data");
  calibrate->add_option("--params-out", params_out, "Output params file");

  std::string preset_name;
  std::optional<std::uint32_t> iterations;
  std::optional<std::uint32_t> jurisdictions;
  std::uint32_t iterations_value = 0;
  std::uint32_t jurisdictions_value = 0;
  auto* experiment =
      app.add_subcommand("experiment", "Run a built-in experiment preset");
  experiment->add_option("preset", preset_name, "Preset name")
      ->required()
      ->check(CLI::IsMember(preset_names()));
  auto* iter_opt = experiment->add_option("--iterations", iterations_value,
                                          "Iterations per sweep point");
  auto* jur_opt = experiment->add_option("--jurisdictions", jurisdictions_value,
                                         "Only points with this many "
                                         "jurisdictions");

  for (CLI::App* sub : app.get_subcommands({})) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (seed_opt->count() > 0) {
    flags.seed = seed_value;
  }
  if (size_mode_opt->count() > 0) {
    flags.size_mode = size_mode_opt->as<std::string>();
  }
  if (strategy_opt->count() > 0) {
    flags.strategy = strategy_opt->as<std::string>();
  }
  if (iter_opt->count() > 0) {
    iterations = iterations_value;
  }
  if (jur_opt->count() > 0) {
    jurisdictions = jurisdictions_value;
  }

  try {
    if (simulate->parsed()) {
      return cmd_simulate(flags);
    }
    if (observe->parsed()) {
      return cmd_observe(flags, trace_dir);
    }
    if (reconstruct_cmd->parsed()) {
      return cmd_reconstruct(flags, obs_dir);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(flags, candidates_path, eval_trace_dir);
    }
    if (calibrate->parsed()) {
      return cmd_calibrate(flags, calib_seeds, calib_target, calib_margin,
                           params_out);
    }
    if (experiment->parsed()) {
      return cmd_experiment(flags, preset_name, iterations, jurisdictions);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
