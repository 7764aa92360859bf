#include "lksim/harness.hpp"

#include "lksim/world.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace lksim {

namespace {
constexpr double kMinSpacing = 30.0;
constexpr int kPlacementAttempts = 1000;
constexpr int kLayoutRestarts = 100;
}  // namespace

const char* to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::Level0: return "level0";
    case ControllerKind::Level1: return "level1";
    case ControllerKind::Level2: return "level2";
    case ControllerKind::Stackelberg: return "stackelberg";
    case ControllerKind::DecisionTree: return "decision-tree";
    case ControllerKind::RandomMasked: return "random";
  }
  return "?";
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

World initialize_episode(const EpisodeConfig& cfg, const SimParams& params,
                         Rng& rng) {
  const auto& road = params.road;
  const auto& kin = params.kin;

  const int per_lane_capacity =
      static_cast<int>(2.0 * cfg.x0_max / kMinSpacing) + 1;
  if (cfg.n_c + 1 > road.n_lanes * per_lane_capacity) {
    throw std::runtime_error("road capacity exceeded for requested car count");
  }

  std::uniform_int_distribution<int> lane_dist(1, road.n_lanes);
  std::uniform_real_distribution<double> x_dist(-cfg.x0_max, cfg.x0_max);
  std::uniform_real_distribution<double> v_dist(kin.v_min, kin.v_max);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // Dense layouts can dead-end under per-car rejection sampling, so the
  // whole layout restarts (still bounded) before giving up.
  for (int restart = 0; restart < kLayoutRestarts; ++restart) {
    World world;
    world.reserve(cfg.n_c + 1);

    VehicleState ego;
    ego.id = kEgoId;
    ego.x = 0.0;
    ego.lane = lane_dist(rng);
    ego.y = road.lane_center(ego.lane);
    ego.v_x = v_dist(rng);
    ego.policy_tag = static_cast<int>(PolicyTag::Ego);
    world.push_back(ego);

    bool layout_ok = true;
    for (int i = 0; i < cfg.n_c && layout_ok; ++i) {
      VehicleState car;
      car.id = i + 1;
      bool placed = false;
      for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
        car.lane = lane_dist(rng);
        car.x = x_dist(rng);
        bool ok = true;
        for (const auto& other : world) {
          if (other.lane == car.lane &&
              std::abs(other.x - car.x) < kMinSpacing) {
            ok = false;
            break;
          }
        }
        if (ok) {
          placed = true;
          break;
        }
      }
      if (!placed) {
        layout_ok = false;
        break;
      }
      car.y = road.lane_center(car.lane);
      car.v_x = v_dist(rng);

      const double u = u01(rng);
      if (u < cfg.traffic_mix[0]) {
        car.policy_tag = static_cast<int>(PolicyTag::Level0);
      } else if (u < cfg.traffic_mix[0] + cfg.traffic_mix[1]) {
        car.policy_tag = static_cast<int>(PolicyTag::Level1);
      } else {
        car.policy_tag = static_cast<int>(PolicyTag::Level2);
      }
      world.push_back(car);
    }
    if (layout_ok) return world;
  }

  // Near-capacity layouts defeat rejection sampling (sequential placement
  // jams well below the packing limit), so construct one directly: assign
  // lanes under per-segment capacity, then draw each lane's positions as
  // sorted uniforms with the minimum gap added back.
  World world;
  world.reserve(cfg.n_c + 1);
  VehicleState ego;
  ego.id = kEgoId;
  ego.x = 0.0;
  ego.lane = lane_dist(rng);
  ego.y = road.lane_center(ego.lane);
  ego.v_x = v_dist(rng);
  ego.policy_tag = static_cast<int>(PolicyTag::Ego);
  world.push_back(ego);

  // Segments per lane; the ego lane is split around the ego's own gap.
  struct Segment {
    int lane;
    double a, b;
    int cap;
    int count = 0;
  };
  std::vector<Segment> segs;
  for (int lane = 1; lane <= road.n_lanes; ++lane) {
    auto add = [&](double a, double b) {
      if (b < a) return;
      const int cap = static_cast<int>((b - a) / kMinSpacing) + 1;
      segs.push_back({lane, a, b, cap});
    };
    if (lane == ego.lane) {
      add(-cfg.x0_max, -kMinSpacing);
      add(kMinSpacing, cfg.x0_max);
    } else {
      add(-cfg.x0_max, cfg.x0_max);
    }
  }
  for (int i = 0; i < cfg.n_c; ++i) {
    int open = 0;
    for (const auto& s : segs) open += (s.count < s.cap) ? 1 : 0;
    if (open == 0) throw std::runtime_error("placement attempt budget exhausted");
    std::uniform_int_distribution<int> pick(0, open - 1);
    int k = pick(rng);
    for (auto& s : segs) {
      if (s.count >= s.cap) continue;
      if (k-- == 0) {
        s.count += 1;
        break;
      }
    }
  }
  int next_id = 1;
  for (const auto& s : segs) {
    if (s.count == 0) continue;
    const double slack = (s.b - s.a) - (s.count - 1) * kMinSpacing;
    std::vector<double> u(s.count);
    std::uniform_real_distribution<double> u_dist(0.0, slack);
    for (auto& v : u) v = u_dist(rng);
    std::sort(u.begin(), u.end());
    for (int i = 0; i < s.count; ++i) {
      VehicleState car;
      car.id = next_id++;
      car.lane = s.lane;
      car.x = s.a + u[i] + i * kMinSpacing;
      car.y = road.lane_center(car.lane);
      car.v_x = v_dist(rng);
      const double t = u01(rng);
      if (t < cfg.traffic_mix[0]) {
        car.policy_tag = static_cast<int>(PolicyTag::Level0);
      } else if (t < cfg.traffic_mix[0] + cfg.traffic_mix[1]) {
        car.policy_tag = static_cast<int>(PolicyTag::Level1);
      } else {
        car.policy_tag = static_cast<int>(PolicyTag::Level2);
      }
      world.push_back(car);
    }
  }
  return world;
}

namespace {

Action tabular_or_level0(const TabularPolicy* policy, const Message& m,
                         const FeasibilityMask& mask, Rng& rng) {
  if (policy) return sample_action(*policy, m, mask, rng);
  return degrade_to_feasible(level0_action(m), mask);
}

Action uniform_feasible(const FeasibilityMask& mask, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, mask.count() - 1);
  int k = pick(rng);
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask.allowed[a]) continue;
    if (k-- == 0) return static_cast<Action>(a);
  }
  return Action::Maintain;
}

}  // namespace

EpisodeResult run_episode(const World& initial, const EpisodeConfig& cfg,
                          const SimParams& params, const PolicySet& policies,
                          TraineeHook* hook, const TraceSink& trace) {
  const auto t_start = std::chrono::steady_clock::now();
  const auto& road = params.road;
  const auto& kin = params.kin;
  const auto& obs = params.obs;

  World world = initial;
  EpisodeResult result;

  // Independent per-car streams keep the step permutation-invariant.
  std::vector<Rng> rngs;
  rngs.reserve(world.size());
  for (const auto& car : world) {
    rngs.emplace_back(mix_seed(cfg.seed, 0x100 + car.id));
  }

  if (detect_violation(world, kEgoId, road)) {
    result.violated = true;
    result.mean_speed = world.front().v_x;
    if (trace) trace(0, world, true);
    result.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    return result;
  }

  const int max_steps = static_cast<int>(std::lround(cfg.t_f / kin.dt));
  double speed_sum = 0.0;

  Message ego_message;
  Action ego_action = Action::Maintain;

  for (int step = 0; step < max_steps; ++step) {
    // Decide: everyone observes the start-of-step snapshot.
    bool ego_decided = false;
    std::vector<Action> actions(world.size(), Action::Maintain);
    for (std::size_t i = 0; i < world.size(); ++i) {
      const auto& car = world[i];
      if (car.changing_lane()) continue;  // continuation, action ignored
      const auto mask = feasible_actions(world, car.id, kin, road, obs);
      if (car.id == kEgoId) {
        ego_decided = true;
        ego_message = observe(world, kEgoId, obs, road);
        if (hook) {
          ego_action = hook->choose(ego_message, mask);
        } else {
          switch (cfg.ego_controller) {
            case ControllerKind::Level0:
              ego_action = degrade_to_feasible(level0_action(ego_message), mask);
              break;
            case ControllerKind::Level1:
              ego_action =
                  tabular_or_level0(policies.level1, ego_message, mask, rngs[i]);
              break;
            case ControllerKind::Level2:
              ego_action =
                  tabular_or_level0(policies.level2, ego_message, mask, rngs[i]);
              break;
            case ControllerKind::Stackelberg:
              ego_action = controller_step(
                  world, kEgoId, PlannerKind::Stackelberg, params.stackelberg,
                  params.decision_tree, params.trigger, params.reward, kin,
                  road, obs);
              break;
            case ControllerKind::DecisionTree:
              ego_action = controller_step(
                  world, kEgoId, PlannerKind::DecisionTree, params.stackelberg,
                  params.decision_tree, params.trigger, params.reward, kin,
                  road, obs);
              break;
            case ControllerKind::RandomMasked:
              ego_action = uniform_feasible(mask, rngs[i]);
              break;
          }
        }
        actions[i] = ego_action;
        continue;
      }
      const Message m = observe(world, car.id, obs, road);
      switch (static_cast<PolicyTag>(car.policy_tag)) {
        case PolicyTag::Level0:
          actions[i] = degrade_to_feasible(level0_action(m), mask);
          break;
        case PolicyTag::Level1:
          actions[i] = tabular_or_level0(policies.level1, m, mask, rngs[i]);
          break;
        case PolicyTag::Level2:
          actions[i] = tabular_or_level0(policies.level2, m, mask, rngs[i]);
          break;
        default:
          actions[i] = Action::Maintain;
          break;
      }
    }

    // Act: all updates apply together.
    for (std::size_t i = 0; i < world.size(); ++i) {
      world[i] = step_vehicle(world[i], actions[i], kin, road);
    }

    result.steps_run += 1;
    speed_sum += world.front().v_x;
    const bool violated = detect_violation(world, kEgoId, road);
    if (trace) trace(result.steps_run, world, violated);
    if (hook && ego_decided) {
      hook->learn(ego_message, ego_action, violated, world.front().v_x,
                  headway_range(world, kEgoId, obs, road));
    }
    if (violated) {
      result.violated = true;
      break;
    }
  }

  result.mean_speed =
      result.steps_run > 0 ? speed_sum / result.steps_run : initial.front().v_x;
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

MetricsAggregate aggregate(const std::vector<EpisodeResult>& results) {
  MetricsAggregate agg;
  agg.episodes = static_cast<int>(results.size());
  if (results.empty()) return agg;
  int violations = 0;
  double speed_sum = 0.0, time_sum = 0.0;
  for (const auto& r : results) {
    violations += r.violated ? 1 : 0;
    speed_sum += r.mean_speed;
    time_sum += r.wall_time;
  }
  const double n = static_cast<double>(agg.episodes);
  const double p = violations / n;
  agg.violation_rate = p;
  const double half = 1.96 * std::sqrt(p * (1.0 - p) / n);
  agg.ci_low = std::max(0.0, p - half);
  agg.ci_high = std::min(1.0, p + half);
  agg.mean_of_mean_speeds = speed_sum / n;
  agg.mean_wall_time = time_sum / n;
  return agg;
}

std::vector<EpisodeResult> run_batch_results(const EpisodeConfig& cfg,
                                             const SimParams& params,
                                             const PolicySet& policies,
                                             int n_episodes,
                                             std::uint64_t base_seed,
                                             int n_threads) {
  std::vector<EpisodeResult> results(n_episodes);
  if (n_threads <= 0) {
    n_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads <= 0) n_threads = 1;
  }
  n_threads = std::min(n_threads, n_episodes);

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_episodes) return;
      EpisodeConfig ecfg = cfg;
      ecfg.seed = base_seed + static_cast<std::uint64_t>(i);
      Rng init_rng(mix_seed(ecfg.seed, 0));
      const World world = initialize_episode(ecfg, params, init_rng);
      results[i] = run_episode(world, ecfg, params, policies);
    }
  };
  std::vector<std::thread> threads;
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return results;
}

MetricsAggregate run_batch(const EpisodeConfig& cfg, const SimParams& params,
                           const PolicySet& policies, int n_episodes,
                           std::uint64_t base_seed, int n_threads) {
  return aggregate(run_batch_results(cfg, params, policies, n_episodes,
                                     base_seed, n_threads));
}

double compute_objective(double violation_rate, double mean_speed, double p1,
                         double p2, const KinematicsConfig& kin) {
  return p1 * (-violation_rate) +
         p2 * (mean_speed - kin.v_min) / (kin.v_max - kin.v_min);
}

std::vector<SweepRow> calibration_sweep(const std::vector<SweepPoint>& grid,
                                        const EpisodeConfig& cfg,
                                        const SimParams& params,
                                        const PolicySet& policies,
                                        int n_episodes, std::uint64_t base_seed,
                                        double p1, double p2, int n_threads) {
  if (grid.empty()) throw std::invalid_argument("empty sweep grid");
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const auto& point : grid) {
    SimParams p = params;
    p.decision_tree.w_l1 = point.w_ratio;
    p.decision_tree.w_l2 = 1.0;
    p.trigger.x_B = point.x_B;
    EpisodeConfig ecfg = cfg;
    ecfg.ego_controller = ControllerKind::DecisionTree;
    // Common random numbers: the same seed sequence for every grid point.
    const auto agg =
        run_batch(ecfg, p, policies, n_episodes, base_seed, n_threads);
    SweepRow row;
    row.point = point;
    row.violation_rate = agg.violation_rate;
    row.mean_speed = agg.mean_of_mean_speeds;
    row.r_obj = compute_objective(agg.violation_rate, agg.mean_of_mean_speeds,
                                  p1, p2, params.kin);
    rows.push_back(row);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].r_obj > rows[best].r_obj) best = i;
  }
  rows[best].is_argmax = true;
  return rows;
}

}  // namespace lksim
