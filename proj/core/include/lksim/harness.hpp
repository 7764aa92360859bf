#pragma once

#include "lksim/autonomy.hpp"
#include "lksim/policy.hpp"
#include "lksim/reward.hpp"
#include "lksim/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace lksim {

/// All per-module environment configuration, bundled for the episode loop.
struct SimParams {
  RoadConfig road;
  KinematicsConfig kin;
  ObservationConfig obs;
  RewardWeights reward;
  StackelbergConfig stackelberg;
  DecisionTreeConfig decision_tree;
  TriggerConfig trigger;
};

enum class ControllerKind {
  Level0 = 0,
  Level1,
  Level2,
  Stackelberg,
  DecisionTree,
  RandomMasked,  // uniform over feasible actions; evaluation baseline
};

const char* to_string(ControllerKind k);

/// Policy tags carried by traffic cars (and the ego).
enum class PolicyTag : int { Level0 = 0, Level1 = 1, Level2 = 2, Ego = 3 };

struct EpisodeConfig {
  int n_c = 0;            // traffic cars, excluding the ego
  double x0_max = 200.0;  // initialization half-length [m]
  double t_f = 200.0;     // episode duration [s]
  std::uint64_t seed = 0;
  ControllerKind ego_controller = ControllerKind::Level0;
  // i.i.d. level assignment fractions for traffic cars (L0, L1, L2).
  std::array<double, 3> traffic_mix{0.10, 0.60, 0.30};
};

struct PolicySet {
  const TabularPolicy* level1 = nullptr;
  const TabularPolicy* level2 = nullptr;
};

struct EpisodeResult {
  bool violated = false;
  int steps_run = 0;
  double mean_speed = 0.0;  // ego, averaged over executed steps [m/s]
  double wall_time = 0.0;   // seconds
};

struct MetricsAggregate {
  int episodes = 0;
  double violation_rate = 0.0;
  double ci_low = 0.0;   // binomial 95% CI on the violation rate
  double ci_high = 0.0;
  double mean_of_mean_speeds = 0.0;
  double mean_wall_time = 0.0;
};

MetricsAggregate aggregate(const std::vector<EpisodeResult>& results);

/// Ego override used by the trainer: chooses the trainee's action and
/// receives the post-step learning signal.
struct TraineeHook {
  virtual ~TraineeHook() = default;
  virtual Action choose(const Message& m, const FeasibilityMask& mask) = 0;
  virtual void learn(const Message& m, Action a, bool violation, double v_x,
                     Range headway) = 0;
};

/// Per-step world snapshot consumer (trace export).
using TraceSink =
    std::function<void(int step, const World& world, bool violation)>;

inline constexpr int kEgoId = 0;

/// Ego at x = 0 in a uniform random lane; traffic cars placed by rejection
/// sampling with same-lane spacing >= 30 m, uniform speeds, Maintain.
/// Throws std::runtime_error when capacity or the attempt budget is exceeded.
World initialize_episode(const EpisodeConfig& cfg, const SimParams& params,
                         Rng& rng);

/// Algorithm-style episode loop with simultaneous moves: every car decides
/// on the start-of-step snapshot, all updates apply together; ends at t_f
/// or on the first ego violation.
EpisodeResult run_episode(const World& initial, const EpisodeConfig& cfg,
                          const SimParams& params, const PolicySet& policies,
                          TraineeHook* hook = nullptr,
                          const TraceSink& trace = nullptr);

/// Seeded Monte Carlo batch: episode i uses seed base_seed + i. The result
/// is independent of the parallelism degree.
MetricsAggregate run_batch(const EpisodeConfig& cfg, const SimParams& params,
                           const PolicySet& policies, int n_episodes,
                           std::uint64_t base_seed, int n_threads = 0);

/// Per-episode results, ordered by episode index (paired comparisons).
std::vector<EpisodeResult> run_batch_results(const EpisodeConfig& cfg,
                                             const SimParams& params,
                                             const PolicySet& policies,
                                             int n_episodes,
                                             std::uint64_t base_seed,
                                             int n_threads = 0);

/// R_obj = p1*(-violation_rate) + p2*(mean_speed - v_min)/(v_max - v_min).
double compute_objective(double violation_rate, double mean_speed, double p1,
                         double p2, const KinematicsConfig& kin);

struct SweepPoint {
  double w_ratio = 2.0;  // w_l1 / w_l2 (w_l2 fixed at 1)
  double x_B = 21.0;
};

struct SweepRow {
  SweepPoint point;
  double violation_rate = 0.0;
  double mean_speed = 0.0;
  double r_obj = 0.0;
  bool is_argmax = false;
};

/// Decision-tree calibration sweep with common random numbers across
/// grid points.
std::vector<SweepRow> calibration_sweep(const std::vector<SweepPoint>& grid,
                                        const EpisodeConfig& cfg,
                                        const SimParams& params,
                                        const PolicySet& policies,
                                        int n_episodes, std::uint64_t base_seed,
                                        double p1, double p2,
                                        int n_threads = 0);

/// Stream-splitting helper for deterministic per-entity RNGs.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace lksim
