#include "lksim/config.hpp"
#include "lksim/harness.hpp"
#include "lksim/learning.hpp"
#include "lksim/policy_file.hpp"
#include "lksim/render.hpp"
#include "lksim/trace.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lksim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMissingArtifact = 3;

struct MissingArtifact : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Config file (optional) + repeatable `--set key=value` overrides.
RunConfig build_config(const std::string& config_path,
                       const std::vector<std::string>& sets) {
  RunConfig cfg;
  if (!config_path.empty()) {
    if (!fs::exists(config_path)) {
      throw MissingArtifact("config file not found: " + config_path);
    }
    cfg = load_config_file(config_path);
  }
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got: " + kv);
    }
    cfg.apply(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void write_config_echo(const RunConfig& cfg, const std::string& path,
                       const json& extra) {
  json j;
  for (const auto& [k, v] : cfg.to_map()) j["config"][k] = v;
  j["run"] = extra;
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

ControllerKind parse_controller(const std::string& name) {
  for (auto k : {ControllerKind::Level0, ControllerKind::Level1,
                 ControllerKind::Level2, ControllerKind::Stackelberg,
                 ControllerKind::DecisionTree, ControllerKind::RandomMasked}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown controller: " + name);
}

TabularPolicy load_policy_artifact(const std::string& path,
                                   const std::string& what) {
  if (path.empty() || !fs::exists(path)) {
    throw MissingArtifact("missing " + what + " policy file" +
                          (path.empty() ? "" : ": " + path));
  }
  try {
    return load_policy(path);
  } catch (const PolicyFileError& e) {
    throw MissingArtifact("unusable " + what + " policy file " + path + ": " +
                          e.what());
  }
}

/// Loads whichever tabular policies this run references: the ego level
/// and every traffic-mix level with positive weight.
struct LoadedPolicies {
  std::optional<TabularPolicy> l1, l2;
  PolicySet set() const {
    return {l1 ? &*l1 : nullptr, l2 ? &*l2 : nullptr};
  }
};

LoadedPolicies load_needed_policies(const RunConfig& cfg, ControllerKind ego,
                                    const std::string& l1_path,
                                    const std::string& l2_path) {
  LoadedPolicies p;
  const bool need_l1 = ego == ControllerKind::Level1 ||
                       cfg.episode.traffic_mix[1] > 0.0;
  const bool need_l2 = ego == ControllerKind::Level2 ||
                       cfg.episode.traffic_mix[2] > 0.0;
  if (need_l1) p.l1 = load_policy_artifact(l1_path, "level-1");
  if (need_l2) p.l2 = load_policy_artifact(l2_path, "level-2");
  return p;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.output_dir);
  return (fs::path(cfg.output_dir) / name).string();
}

// ------------------------------------------------------------------ train

int cmd_train(RunConfig cfg, int level, std::uint64_t seed,
              const std::string& lower_path, std::string out,
              bool export_json) {
  cfg.training.level = level;
  cfg.training.seed = seed;
  cfg.validate();

  std::optional<TabularPolicy> lower;
  if (level >= 2) {
    lower = load_policy_artifact(lower_path,
                                 "level-" + std::to_string(level - 1));
  }

  TrainingSummary summary;
  TabularPolicy policy = train_level_k(cfg.training, cfg.params,
                                       lower ? &*lower : nullptr, &summary);
  policy.config_hash = cfg.environment_hash();

  if (out.empty()) out = "level" + std::to_string(level) + ".policy";
  const std::string policy_path = out_path(cfg, out);
  save_policy(policy, policy_path);
  if (export_json) export_policy_json(policy, policy_path + ".json");

  const std::string log_path = out_path(cfg, "training_log.csv");
  {
    std::ofstream log(log_path);
    log << "cycle,n_c,steps,mean_reward,rbar,violated\n";
    for (const auto& e : summary.log) {
      log << e.cycle << ',' << e.n_c << ',' << e.steps << ','
          << e.mean_reward << ',' << e.rbar << ',' << (e.violated ? 1 : 0)
          << "\n";
    }
  }

  json run;
  run["command"] = "train";
  run["level"] = level;
  run["seed"] = seed;
  run["cycles_run"] = summary.cycles_run;
  run["total_steps"] = summary.total_steps;
  run["converged"] = summary.converged;
  run["fallback_rows"] = summary.fallback_rows;
  run["policy_file"] = policy_path;
  run["training_log"] = log_path;
  write_config_echo(cfg, out_path(cfg, "train_summary.json"), run);

  std::printf("trained level-%d: %llu steps over %ld cycles, %llu fallback rows -> %s\n",
              level, (unsigned long long)summary.total_steps,
              summary.cycles_run, (unsigned long long)summary.fallback_rows,
              policy_path.c_str());
  return 0;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(RunConfig cfg, const std::string& controller,
                 std::uint64_t seed, int episodes, const std::string& l1_path,
                 const std::string& l2_path, int threads, bool timing) {
  cfg.validate();
  const ControllerKind ego = parse_controller(controller);
  cfg.episode.ego_controller = ego;
  const auto policies = load_needed_policies(cfg, ego, l1_path, l2_path);

  const auto agg = run_batch(cfg.episode, cfg.params, policies.set(), episodes,
                             seed, threads);

  const std::string csv_path = out_path(cfg, "report.csv");
  {
    std::ofstream csv(csv_path);
    csv << "n_c,controller,episodes,violation_rate,ci_low,ci_high,mean_speed,"
           "mean_wall_time\n";
    char line[256];
    // wall time is opt-in so that fixed-seed reports stay byte-identical
    std::snprintf(line, sizeof(line), "%d,%s,%d,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  cfg.episode.n_c, to_string(ego), agg.episodes,
                  agg.violation_rate, agg.ci_low, agg.ci_high,
                  agg.mean_of_mean_speeds, timing ? agg.mean_wall_time : 0.0);
    csv << line;
  }

  json run;
  run["command"] = "evaluate";
  run["seed"] = seed;
  run["episodes"] = episodes;
  run["controller"] = to_string(ego);
  run["violation_rate"] = agg.violation_rate;
  run["ci"] = {agg.ci_low, agg.ci_high};
  run["mean_speed"] = agg.mean_of_mean_speeds;
  run["report_csv"] = csv_path;
  write_config_echo(cfg, out_path(cfg, "report.json"), run);

  std::printf("%s n_c=%d: violation_rate=%.4f [%.4f, %.4f], mean_speed=%.3f m/s -> %s\n",
              to_string(ego), cfg.episode.n_c, agg.violation_rate, agg.ci_low,
              agg.ci_high, agg.mean_of_mean_speeds, csv_path.c_str());
  return 0;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(RunConfig cfg, const std::string& controller,
                 std::uint64_t seed, const std::string& l1_path,
                 const std::string& l2_path, std::string trace_name) {
  cfg.validate();
  const ControllerKind ego = parse_controller(controller);
  cfg.episode.ego_controller = ego;
  cfg.episode.seed = seed;
  const auto policies = load_needed_policies(cfg, ego, l1_path, l2_path);

  Rng rng(mix_seed(seed, 0));
  const World init = initialize_episode(cfg.episode, cfg.params, rng);

  std::vector<TraceRecord> records;
  records.push_back(make_record(0, init, false));
  const auto result = run_episode(
      init, cfg.episode, cfg.params, policies.set(), nullptr,
      [&](int step, const World& w, bool violation) {
        records.push_back(make_record(step, w, violation));
      });

  if (trace_name.empty()) trace_name = "trace.jsonl";
  const std::string trace_path = out_path(cfg, trace_name);
  write_trace(records, trace_path);

  json run;
  run["command"] = "simulate";
  run["seed"] = seed;
  run["controller"] = to_string(ego);
  run["steps_run"] = result.steps_run;
  run["violated"] = result.violated;
  run["mean_speed"] = result.mean_speed;
  run["trace"] = trace_path;
  write_config_echo(cfg, out_path(cfg, "simulate.json"), run);

  std::printf("%d steps, %s, mean_speed=%.3f m/s -> %s\n", result.steps_run,
              result.violated ? "violated" : "clean", result.mean_speed,
              trace_path.c_str());
  return 0;
}

// ------------------------------------------------------------------ sweep

int cmd_sweep(RunConfig cfg, std::uint64_t seed, int episodes,
              const std::vector<double>& w_ratios,
              const std::vector<double>& x_bs, double p1, double p2,
              const std::string& l1_path, const std::string& l2_path,
              int threads) {
  cfg.validate();
  cfg.episode.ego_controller = ControllerKind::DecisionTree;
  const auto policies = load_needed_policies(
      cfg, ControllerKind::DecisionTree, l1_path, l2_path);

  std::vector<SweepPoint> grid;
  for (double w : w_ratios) {
    for (double xb : x_bs) grid.push_back({w, xb});
  }
  const auto rows = calibration_sweep(grid, cfg.episode, cfg.params,
                                      policies.set(), episodes, seed, p1, p2,
                                      threads);

  const std::string csv_path = out_path(cfg, "sweep.csv");
  {
    std::ofstream csv(csv_path);
    csv << "w_ratio,x_B,violation_rate,mean_speed,r_obj,is_argmax\n";
    char line[256];
    for (const auto& r : rows) {
      std::snprintf(line, sizeof(line), "%.6f,%.6f,%.6f,%.6f,%.6f,%d\n",
                    r.point.w_ratio, r.point.x_B, r.violation_rate,
                    r.mean_speed, r.r_obj, r.is_argmax ? 1 : 0);
      csv << line;
    }
  }

  json run;
  run["command"] = "sweep";
  run["seed"] = seed;
  run["episodes"] = episodes;
  run["p1"] = p1;
  run["p2"] = p2;
  run["sweep_csv"] = csv_path;
  for (const auto& r : rows) {
    if (r.is_argmax) {
      run["argmax"] = {{"w_ratio", r.point.w_ratio},
                       {"x_B", r.point.x_B},
                       {"r_obj", r.r_obj}};
    }
  }
  write_config_echo(cfg, out_path(cfg, "sweep.json"), run);

  for (const auto& r : rows) {
    std::printf("w_ratio=%.2f x_B=%.1f: rate=%.4f speed=%.3f R_obj=%.4f%s\n",
                r.point.w_ratio, r.point.x_B, r.violation_rate, r.mean_speed,
                r.r_obj, r.is_argmax ? "  <- argmax" : "");
  }
  return 0;
}

// ------------------------------------------------------------------ render

int cmd_render(RunConfig cfg, const std::string& trace_path) {
  cfg.validate();
  if (!fs::exists(trace_path)) {
    throw MissingArtifact("trace file not found: " + trace_path);
  }
  const auto records = read_trace(trace_path);
  fs::create_directories(cfg.output_dir);
  render_trace(records, cfg.params.road, cfg.output_dir, kEgoId);
  std::printf("%zu frames -> %s\n", records.size(), cfg.output_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"level-k highway traffic simulator"};
  app.require_subcommand(1);
  app.fallthrough();  // --config/--set/--out-dir may follow the subcommand

  std::string config_path;
  std::vector<std::string> sets;
  std::string output_dir;
  app.add_option("--config", config_path, "config file (key = value lines)");
  app.add_option("--set", sets, "override a config key (key=value)");
  app.add_option("--out-dir", output_dir, "output directory");

  std::uint64_t seed = 0;
  int threads = 0;
  std::string l1_path, l2_path;

  auto* train = app.add_subcommand("train", "train a level-k policy");
  int level = 1;
  long cycles = -1, min_steps = -1;
  std::string lower_path, policy_out;
  train->add_option("--level", level, "level to train (k >= 1)");
  train->add_option("--cycles", cycles, "training episodes");
  train->add_option("--min-steps", min_steps, "minimum total training steps");
  train->add_option("--seed", seed, "training seed")->required();
  train->add_option("--lower", lower_path, "level-(k-1) policy file");
  train->add_option("--out", policy_out, "policy file name");
  bool export_json = false;
  train->add_flag("--export-json", export_json,
                  "also write a JSON inspection dump of the policy");

  auto* evaluate = app.add_subcommand("evaluate", "Monte Carlo evaluation");
  std::string controller = "decision-tree";
  int cars = -1, episodes = 1000;
  bool timing = false;
  evaluate->add_option("--controller", controller,
                       "level0|level1|level2|stackelberg|decision-tree|random");
  evaluate->add_option("--cars", cars, "traffic car count");
  evaluate->add_option("--episodes", episodes, "episode count");
  evaluate->add_option("--seed", seed, "batch base seed")->required();
  evaluate->add_option("--policy-l1", l1_path, "level-1 policy file");
  evaluate->add_option("--policy-l2", l2_path, "level-2 policy file");
  evaluate->add_option("--threads", threads, "worker threads (0 = auto)");
  evaluate->add_flag("--timing", timing,
                     "record wall time in the report (non-deterministic)");

  auto* simulate = app.add_subcommand("simulate", "one episode with a trace");
  std::string trace_out;
  simulate->add_option("--controller", controller, "ego controller");
  simulate->add_option("--cars", cars, "traffic car count");
  simulate->add_option("--seed", seed, "episode seed");
  simulate->add_option("--policy-l1", l1_path, "level-1 policy file");
  simulate->add_option("--policy-l2", l2_path, "level-2 policy file");
  simulate->add_option("--trace", trace_out, "trace file name");

  auto* sweep = app.add_subcommand("sweep", "decision-tree calibration sweep");
  std::vector<double> w_ratios{2.0, 2.5};
  std::vector<double> x_bs{21.0, 23.0};
  double p1 = 1.0, p2 = 0.0;
  sweep->add_option("--w-ratio", w_ratios, "w_l1/w_l2 grid values");
  sweep->add_option("--x-b", x_bs, "x_B grid values");
  sweep->add_option("--p1", p1, "violation-rate weight");
  sweep->add_option("--p2", p2, "mean-speed weight");
  sweep->add_option("--cars", cars, "traffic car count");
  sweep->add_option("--episodes", episodes, "episodes per grid point");
  sweep->add_option("--seed", seed, "common-random-number base seed")
      ->required();
  sweep->add_option("--policy-l1", l1_path, "level-1 policy file");
  sweep->add_option("--policy-l2", l2_path, "level-2 policy file");
  sweep->add_option("--threads", threads, "worker threads (0 = auto)");

  auto* render = app.add_subcommand("render", "render a trace to SVG frames");
  std::string trace_in;
  render->add_option("--trace", trace_in, "trace file (JSON lines)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    RunConfig cfg = build_config(config_path, sets);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (cars >= 0) cfg.episode.n_c = cars;
    if (cycles >= 0) cfg.training.training_cycles = cycles;
    if (min_steps >= 0) cfg.training.min_total_steps = min_steps;

    if (app.got_subcommand(train)) {
      return cmd_train(cfg, level, seed, lower_path, policy_out, export_json);
    }
    if (app.got_subcommand(evaluate)) {
      return cmd_evaluate(cfg, controller, seed, episodes, l1_path, l2_path,
                          threads, timing);
    }
    if (app.got_subcommand(simulate)) {
      return cmd_simulate(cfg, controller, seed, l1_path, l2_path, trace_out);
    }
    if (app.got_subcommand(sweep)) {
      return cmd_sweep(cfg, seed, episodes, w_ratios, x_bs, p1, p2, l1_path,
                       l2_path, threads);
    }
    if (app.got_subcommand(render)) {
      return cmd_render(cfg, trace_in);
    }
  } catch (const MissingArtifact& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitMissingArtifact;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
