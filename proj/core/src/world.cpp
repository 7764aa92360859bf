#include "lksim/world.hpp"

#include <algorithm>
#include <cmath>

namespace lksim {

namespace {
constexpr double kSpeedTol = 1e-9;
}

const char* to_string(Action a) {
  switch (a) {
    case Action::Maintain: return "maintain";
    case Action::Accelerate: return "accelerate";
    case Action::Decelerate: return "decelerate";
    case Action::HardAccelerate: return "hard-accelerate";
    case Action::HardDecelerate: return "hard-decelerate";
    case Action::ChangeLeft: return "change-left";
    case Action::ChangeRight: return "change-right";
  }
  return "?";
}

Action action_from_string(const std::string& s) {
  for (int i = 0; i < kNumActions; ++i) {
    if (s == to_string(static_cast<Action>(i))) return static_cast<Action>(i);
  }
  throw std::invalid_argument("unknown action: " + s);
}

int lane_of(const VehicleState& v, const RoadConfig& road) {
  int lane = static_cast<int>(std::lround(v.y / road.lane_width + 0.5));
  return std::clamp(lane, 1, road.n_lanes);
}

const VehicleState* find_vehicle(const World& world, int id) {
  for (const auto& v : world) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

VehicleState step_vehicle(const VehicleState& state, Action action,
                          const KinematicsConfig& kin, const RoadConfig& road) {
  VehicleState next = state;
  next.x = state.x + state.v_x * kin.dt;

  if (state.changing_lane()) {
    // Ongoing lane change: action requests are ignored, lateral motion
    // continues at constant v_y until the destination center is reached.
    next.y = state.y + state.change_dir * road.lane_width * kin.dt / kin.t_cl;
    next.change_steps_left = state.change_steps_left - 1;
    if (next.change_steps_left == 0) {
      next.y = road.lane_center(next.lane);
      next.change_dir = 0;
    }
    return next;
  }

  switch (action) {
    case Action::Maintain:
      break;
    case Action::Accelerate:
    case Action::HardAccelerate: {
      // Feasible whenever the car is below v_max; the result saturates at
      // the bound rather than overshooting.
      if (state.v_x >= kin.v_max - kSpeedTol) {
        throw InfeasibleActionError("already at v_max");
      }
      const double a = (action == Action::Accelerate) ? kin.a1 : kin.a2;
      next.v_x = std::min(state.v_x + a * kin.dt, kin.v_max);
      break;
    }
    case Action::Decelerate:
    case Action::HardDecelerate: {
      if (state.v_x <= kin.v_min + kSpeedTol) {
        throw InfeasibleActionError("already at v_min");
      }
      const double a = (action == Action::Decelerate) ? kin.a1 : kin.a2;
      next.v_x = std::max(state.v_x - a * kin.dt, kin.v_min);
      break;
    }
    case Action::ChangeLeft:
    case Action::ChangeRight: {
      const int dir = (action == Action::ChangeLeft) ? +1 : -1;
      const int target = state.lane + dir;
      if (target < 1 || target > road.n_lanes) {
        throw InfeasibleActionError("no adjacent lane in that direction");
      }
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

bool safe_zones_intersect(const VehicleState& a, const VehicleState& b,
                          const RoadConfig& road) {
  return std::abs(a.x - b.x) < road.safe_zone_length &&
         std::abs(a.y - b.y) < road.safe_zone_width;
}

bool is_parallel(const VehicleState& a, const VehicleState& b,
                 const RoadConfig& road) {
  return std::abs(a.x - b.x) < road.safe_zone_length;
}

bool detect_violation(const World& world, int ego_id, const RoadConfig& road) {
  const VehicleState* ego = find_vehicle(world, ego_id);
  if (!ego) return false;
  for (const auto& v : world) {
    if (v.id == ego_id) continue;
    if (safe_zones_intersect(*ego, v, road)) return true;
  }
  return false;
}

}  // namespace lksim
