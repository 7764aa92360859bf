#include "lksim/policy.hpp"

#include "lksim/world.hpp"

#include <cmath>

namespace lksim {

namespace {
constexpr double kSpeedTol = 1e-9;

bool close_and_approaching(const Message& m, Slot s) {
  const int i = static_cast<int>(s);
  return m.range[i] == Range::Close && m.rate[i] == RangeRate::Approaching;
}
}  // namespace

FeasibilityMask feasible_actions(const World& world, int ego_id,
                                 const KinematicsConfig& kin,
                                 const RoadConfig& road,
                                 const ObservationConfig& obs) {
  FeasibilityMask mask;
  mask.set(Action::Maintain, true);

  const VehicleState* ego = find_vehicle(world, ego_id);
  if (!ego) return mask;
  if (ego->changing_lane()) return mask;  // only continuation occurs

  // Acceleration feasibility conditions on the current speed; the dynamics
  // saturate at the bounds, so any car strictly inside them can maneuver.
  const bool below_max = ego->v_x < kin.v_max - kSpeedTol;
  const bool above_min = ego->v_x > kin.v_min + kSpeedTol;
  mask.set(Action::Accelerate, below_max);
  mask.set(Action::HardAccelerate, below_max);
  mask.set(Action::Decelerate, above_min);
  mask.set(Action::HardDecelerate, above_min);

  bool left_parallel = false;
  bool right_parallel = false;
  for (const auto& car : world) {
    if (car.id == ego_id) continue;
    const int dl = lane_of(car, road) - ego->lane;
    if (dl == +1 && is_parallel(*ego, car, road)) left_parallel = true;
    if (dl == -1 && is_parallel(*ego, car, road)) right_parallel = true;
  }

  const Message m = observe(world, ego_id, obs, road);
  const bool left_hot = close_and_approaching(m, Slot::FrontLeft) ||
                        close_and_approaching(m, Slot::RearLeft);
  const bool right_hot = close_and_approaching(m, Slot::FrontRight) ||
                         close_and_approaching(m, Slot::RearRight);

  mask.set(Action::ChangeLeft,
           ego->lane + 1 <= road.n_lanes && !left_parallel && !left_hot);
  mask.set(Action::ChangeRight,
           ego->lane - 1 >= 1 && !right_parallel && !right_hot);
  return mask;
}

Action level0_action(const Message& m) {
  const Range r = m.range[static_cast<int>(Slot::FrontCenter)];
  const RangeRate rr = m.rate[static_cast<int>(Slot::FrontCenter)];
  if (r == Range::Close && rr == RangeRate::Approaching) {
    return Action::HardDecelerate;
  }
  if ((r == Range::Nominal && rr == RangeRate::Approaching) ||
      (r == Range::Close && rr == RangeRate::Stable)) {
    return Action::Decelerate;
  }
  return Action::Maintain;
}

Action degrade_to_feasible(Action a, const FeasibilityMask& mask) {
  if (mask[a]) return a;
  if (a == Action::HardDecelerate && mask[Action::Decelerate]) {
    return Action::Decelerate;
  }
  if (a == Action::HardAccelerate && mask[Action::Accelerate]) {
    return Action::Accelerate;
  }
  return Action::Maintain;
}

TabularPolicy TabularPolicy::uniform(int level, int n_messages, int n_actions) {
  TabularPolicy p;
  p.level = level;
  p.n_messages = n_messages;
  p.n_actions = n_actions;
  p.probs.assign(static_cast<std::size_t>(n_messages) * n_actions,
                 1.0 / n_actions);
  p.visits.assign(n_messages, 0);
  return p;
}

void TabularPolicy::set_row_deterministic(int m, Action a) {
  auto r = row(m);
  for (auto& p : r) p = 0.0;
  r[static_cast<int>(a)] = 1.0;
}

std::array<double, kNumActions> masked_distribution(
    std::span<const double> row, const FeasibilityMask& mask) {
  std::array<double, kNumActions> dist{};
  double total = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    if (mask.allowed[a]) {
      dist[a] = row[a];
      total += row[a];
    }
  }
  if (total <= 1e-300) {
    // All feasible actions have zero probability: uniform fallback.
    const int n = mask.count();
    for (int a = 0; a < kNumActions; ++a) {
      dist[a] = mask.allowed[a] ? 1.0 / n : 0.0;
    }
    return dist;
  }
  for (auto& p : dist) p /= total;
  return dist;
}

Action sample_action(const TabularPolicy& policy, const Message& m,
                     const FeasibilityMask& mask, Rng& rng) {
  const auto dist = masked_distribution(policy.row(encode(m)), mask);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  int last_allowed = 0;
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask.allowed[a]) continue;
    last_allowed = a;
    r -= dist[a];
    if (r <= 0.0) return static_cast<Action>(a);
  }
  return static_cast<Action>(last_allowed);  // guard against rounding
}

}  // namespace lksim
