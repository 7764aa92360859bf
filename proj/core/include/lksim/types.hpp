#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lksim {

/// The 7-action driver space. Ordinal order is load-bearing: it is the
/// column order of tabular policies and the tie-break order of planners.
enum class Action : int {
  Maintain = 0,
  Accelerate = 1,
  Decelerate = 2,
  HardAccelerate = 3,
  HardDecelerate = 4,
  ChangeLeft = 5,
  ChangeRight = 6,
};

inline constexpr int kNumActions = 7;

const char* to_string(Action a);
Action action_from_string(const std::string& s);

constexpr double kmh_to_ms(double kmh) { return kmh / 3.6; }

struct RoadConfig {
  int n_lanes = 3;
  double lane_width = 3.6;
  double safe_zone_length = 6.0;
  double safe_zone_width = 2.0;

  // Lanes are 1-based; lane 1 is the rightmost.
  double lane_center(int lane) const { return (lane - 0.5) * lane_width; }
};

struct KinematicsConfig {
  double a1 = 2.5;  // nominal accel/decel magnitude [m/s^2]
  double a2 = 5.0;  // hard accel/decel magnitude [m/s^2]
  double t_cl = 2.0;  // lane change duration [s]
  double dt = 1.0;    // update period [s]
  double v_min = kmh_to_ms(62.0);
  double v_max = kmh_to_ms(98.0);

  int lane_change_steps() const {
    return static_cast<int>(std::lround(t_cl / dt));
  }
  double v_nominal() const { return 0.5 * (v_min + v_max); }
};

/// Pose and speed of one car. While a lane change is in progress,
/// `lane` already holds the destination lane and `change_steps_left`
/// counts the remaining steps; y lies strictly between the two centers.
struct VehicleState {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double v_x = 0.0;
  int lane = 1;
  int change_steps_left = 0;
  int change_dir = 0;  // +1 toward higher lane index (left), -1 right
  int policy_tag = 0;

  bool changing_lane() const { return change_steps_left > 0; }
};

using World = std::vector<VehicleState>;

struct InfeasibleActionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lksim
