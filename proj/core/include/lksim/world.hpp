#pragma once

#include "lksim/types.hpp"

namespace lksim {

/// Lane whose center is nearest to the car's current y, clamped to the road.
int lane_of(const VehicleState& v, const RoadConfig& road);

const VehicleState* find_vehicle(const World& world, int id);

/// One kinematic step. Throws InfeasibleActionError if the action would
/// push v_x outside [v_min, v_max] or change into a nonexistent lane.
/// While a lane change is in progress the requested action is ignored and
/// the change continues; it always runs to completion.
VehicleState step_vehicle(const VehicleState& state, Action action,
                          const KinematicsConfig& kin, const RoadConfig& road);

/// Strict overlap of the two axis-aligned safe-zone rectangles
/// (positive area in both axes; touching zones do not intersect).
bool safe_zones_intersect(const VehicleState& a, const VehicleState& b,
                          const RoadConfig& road);

/// Longitudinal safe-zone intervals overlap, regardless of lateral offset.
bool is_parallel(const VehicleState& a, const VehicleState& b,
                 const RoadConfig& road);

/// True iff the ego's safe zone intersects any other car's zone.
bool detect_violation(const World& world, int ego_id, const RoadConfig& road);

}  // namespace lksim
