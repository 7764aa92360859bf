#include "lksim/autonomy.hpp"

#include "lksim/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lksim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Indices of allowed actions, ordinal order.
std::vector<Action> allowed_actions(const FeasibilityMask& mask) {
  std::vector<Action> out;
  out.reserve(kNumActions);
  for (int a = 0; a < kNumActions; ++a) {
    if (mask.allowed[a]) out.push_back(static_cast<Action>(a));
  }
  return out;
}

struct RegionRect {
  double x_lo, x_hi, y_lo, y_hi;
};

bool zone_intersects_region(const VehicleState& car, const RegionRect& r,
                            const RoadConfig& road) {
  const double hl = road.safe_zone_length / 2.0;
  const double hw = road.safe_zone_width / 2.0;
  return car.x + hl > r.x_lo && car.x - hl < r.x_hi &&
         car.y + hw > r.y_lo && car.y - hw < r.y_hi;
}

}  // namespace

VehicleState predict_step(const VehicleState& state, Action held,
                          const KinematicsConfig& kin, const RoadConfig& road) {
  VehicleState next = state;
  next.x = state.x + state.v_x * kin.dt;

  if (state.changing_lane()) {
    next.y = state.y + state.change_dir * road.lane_width * kin.dt / kin.t_cl;
    next.change_steps_left = state.change_steps_left - 1;
    if (next.change_steps_left == 0) {
      next.y = road.lane_center(next.lane);
      next.change_dir = 0;
    }
    return next;
  }

  switch (held) {
    case Action::Maintain:
      break;
    case Action::Accelerate:
      next.v_x = std::min(state.v_x + kin.a1 * kin.dt, kin.v_max);
      break;
    case Action::HardAccelerate:
      next.v_x = std::min(state.v_x + kin.a2 * kin.dt, kin.v_max);
      break;
    case Action::Decelerate:
      next.v_x = std::max(state.v_x - kin.a1 * kin.dt, kin.v_min);
      break;
    case Action::HardDecelerate:
      next.v_x = std::max(state.v_x - kin.a2 * kin.dt, kin.v_min);
      break;
    case Action::ChangeLeft:
    case Action::ChangeRight: {
      const int dir = (held == Action::ChangeLeft) ? +1 : -1;
      const int target = state.lane + dir;
      if (target < 1 || target > road.n_lanes) break;  // hold lane instead
      next.lane = target;
      next.change_dir = dir;
      next.change_steps_left = kin.lane_change_steps();
      next.y = state.y + dir * road.lane_width * kin.dt / kin.t_cl;
      next.change_steps_left -= 1;
      if (next.change_steps_left == 0) {
        next.y = road.lane_center(target);
        next.change_dir = 0;
      }
      break;
    }
  }
  return next;
}

double stackelberg_utility(const World& world, int player_id,
                           const StackelbergConfig& cfg,
                           const RoadConfig& road) {
  const VehicleState* player = find_vehicle(world, player_id);
  if (!player) return 0.0;
  const int lane = lane_of(*player, road);

  double front_gap = kInf;
  double rear_gap = kInf;
  double rear_closing = 0.0;
  for (const auto& car : world) {
    if (car.id == player_id) continue;
    if (lane_of(car, road) != lane) continue;
    const double x_r = car.x - player->x;
    if (x_r > 0 && x_r <= cfg.d_v && x_r < front_gap) {
      front_gap = x_r;
    } else if (x_r < 0 && -x_r <= cfg.d_v && -x_r < rear_gap) {
      rear_gap = -x_r;
      rear_closing = car.v_x - player->v_x;
    }
  }

  const double u_pos = std::isfinite(front_gap) ? std::min(front_gap, cfg.d_v)
                                                : cfg.d_v;
  const double u_neg = std::isfinite(rear_gap)
                           ? rear_gap - rear_closing * cfg.T - cfg.d_min
                           : cfg.d_v - cfg.d_min;
  return u_pos + u_neg;
}

namespace {

World predict_world(const World& world, int steps, const KinematicsConfig& kin,
                    const RoadConfig& road, int id_a, Action act_a, int id_b,
                    Action act_b, int id_c, Action act_c) {
  World w = world;
  for (int s = 0; s < steps; ++s) {
    for (auto& car : w) {
      Action a = Action::Maintain;
      if (car.id == id_a) a = act_a;
      else if (car.id == id_b) a = act_b;
      else if (car.id == id_c) a = act_c;
      car = predict_step(car, a, kin, road);
    }
  }
  return w;
}

}  // namespace

Action stackelberg_action(const World& world, int ego_id,
                          const StackelbergConfig& cfg,
                          const KinematicsConfig& kin, const RoadConfig& road,
                          const ObservationConfig& obs) {
  const VehicleState* ego = find_vehicle(world, ego_id);
  if (!ego) return Action::Maintain;

  // Followers: the two nearest cars behind, any lane, within visibility.
  int f1 = -1, f2 = -1;
  double d1 = kInf, d2 = kInf;
  for (const auto& car : world) {
    if (car.id == ego_id) continue;
    const double x_r = car.x - ego->x;
    if (x_r >= 0 || -x_r > cfg.d_v) continue;
    const double d = -x_r;
    if (d < d1) {
      f2 = f1; d2 = d1;
      f1 = car.id; d1 = d;
    } else if (d < d2) {
      f2 = car.id; d2 = d;
    }
  }

  const int steps = std::max(1, static_cast<int>(std::lround(cfg.T / kin.dt)));
  const auto leader_actions =
      allowed_actions(feasible_actions(world, ego_id, kin, road, obs));
  const auto f1_actions =
      f1 >= 0 ? allowed_actions(feasible_actions(world, f1, kin, road, obs))
              : std::vector<Action>{Action::Maintain};
  const auto f2_actions =
      f2 >= 0 ? allowed_actions(feasible_actions(world, f2, kin, road, obs))
              : std::vector<Action>{Action::Maintain};

  Action best = Action::Maintain;
  double best_u = -kInf;
  for (Action gl : leader_actions) {
    double worst = kInf;
    for (Action g1 : f1_actions) {
      for (Action g2 : f2_actions) {
        const World w =
            predict_world(world, steps, kin, road, ego_id, gl, f1, g1, f2, g2);
        worst = std::min(worst, stackelberg_utility(w, ego_id, cfg, road));
      }
    }
    if (worst > best_u) {  // strict: ties keep the lower ordinal
      best_u = worst;
      best = gl;
    }
  }
  return best;
}

Action decision_tree_action(const World& world, int ego_id,
                            const DecisionTreeConfig& cfg,
                            const RewardWeights& rw,
                            const KinematicsConfig& kin,
                            const RoadConfig& road,
                            const ObservationConfig& obs) {
  const VehicleState* ego = find_vehicle(world, ego_id);
  if (!ego) return Action::Maintain;

  auto layer_reward = [&](const World& w, Action charged) {
    const bool violation = detect_violation(w, ego_id, road);
    const VehicleState* e = find_vehicle(w, ego_id);
    const Range hw = headway_range(w, ego_id, obs, road);
    return compute_reward(violation, e->v_x, hw, charged, rw, kin).total;
  };

  auto step_all = [&](const World& w, Action ego_action) {
    World out = w;
    for (auto& car : out) {
      car = predict_step(car, car.id == ego_id ? ego_action : Action::Maintain,
                         kin, road);
    }
    return out;
  };

  const auto first_actions =
      allowed_actions(feasible_actions(world, ego_id, kin, road, obs));

  Action best = Action::Maintain;
  double best_total = -kInf;
  for (Action a1 : first_actions) {
    const World w1 = step_all(world, a1);
    const double r1 = layer_reward(w1, a1);

    std::vector<Action> second_actions;
    bool forced = false;
    if (find_vehicle(w1, ego_id)->changing_lane()) {
      // The started lane change consumes the second layer; the branch does
      // not fan out and the continuation is charged as the change action.
      second_actions = {a1};
      forced = true;
    } else {
      second_actions =
          allowed_actions(feasible_actions(w1, ego_id, kin, road, obs));
    }

    for (Action a2 : second_actions) {
      const World w2 = step_all(w1, forced ? Action::Maintain : a2);
      const double r2 = layer_reward(w2, a2);
      const double total = cfg.w_l1 * r1 + cfg.w_l2 * r2;
      if (total > best_total) {
        best_total = total;
        best = a1;
      }
    }
  }
  return best;
}

TriggerState trigger_state(const World& world, int ego_id,
                           const TriggerConfig& cfg, const RoadConfig& road) {
  const VehicleState* ego = find_vehicle(world, ego_id);
  if (!ego) return TriggerState::FreeAccelerate;

  const double front = ego->x + road.safe_zone_length / 2.0;
  const double cy = road.lane_center(ego->lane);

  // Region A spans the adjacent lane centers (the ego lane when an
  // adjacent lane does not exist).
  RegionRect a;
  a.x_lo = front;
  a.x_hi = front + cfg.x_A;
  a.y_lo = (ego->lane > 1) ? road.lane_center(ego->lane - 1)
                           : cy - road.lane_width / 2.0;
  a.y_hi = (ego->lane < road.n_lanes) ? road.lane_center(ego->lane + 1)
                                      : cy + road.lane_width / 2.0;

  // Region B covers the ego lane widened past its boundary lines.
  RegionRect b;
  b.x_lo = front;
  b.x_hi = front + cfg.x_B;
  b.y_lo = cy - road.lane_width / 2.0 - cfg.b_widen;
  b.y_hi = cy + road.lane_width / 2.0 + cfg.b_widen;

  bool in_a = false;
  for (const auto& car : world) {
    if (car.id == ego_id) continue;
    if (zone_intersects_region(car, b, road)) return TriggerState::SafeMode;
    if (zone_intersects_region(car, a, road)) in_a = true;
  }
  return in_a ? TriggerState::Plan : TriggerState::FreeAccelerate;
}

Action controller_step(const World& world, int ego_id, PlannerKind planner,
                       const StackelbergConfig& sb,
                       const DecisionTreeConfig& dt, const TriggerConfig& trig,
                       const RewardWeights& rw, const KinematicsConfig& kin,
                       const RoadConfig& road, const ObservationConfig& obs) {
  switch (trigger_state(world, ego_id, trig, road)) {
    case TriggerState::FreeAccelerate: {
      const auto mask = feasible_actions(world, ego_id, kin, road, obs);
      return mask[Action::Accelerate] ? Action::Accelerate : Action::Maintain;
    }
    case TriggerState::Plan:
      return planner == PlannerKind::Stackelberg
                 ? stackelberg_action(world, ego_id, sb, kin, road, obs)
                 : decision_tree_action(world, ego_id, dt, rw, kin, road, obs);
    case TriggerState::SafeMode: {
      const auto mask = feasible_actions(world, ego_id, kin, road, obs);
      return degrade_to_feasible(level0_action(observe(world, ego_id, obs, road)),
                                 mask);
    }
  }
  return Action::Maintain;
}

}  // namespace lksim
