#pragma once

#include "lksim/perception.hpp"
#include "lksim/policy.hpp"
#include "lksim/reward.hpp"
#include "lksim/types.hpp"

namespace lksim {

struct StackelbergConfig {
  double T = 2.0;      // prediction window [s]
  double d_min = 6.0;  // minimum lane-change gap; the safe zone length
  double d_v = 63.0;   // visibility limit [m]
};

struct DecisionTreeConfig {
  double w_l1 = 2.0;
  double w_l2 = 1.0;
};

struct TriggerConfig {
  double x_A = 42.0;      // forward extent of region A [m]
  double x_B = 21.0;      // forward extent of region B [m]
  double b_widen = 1.0;   // lateral widening of region B beyond the lane [m]
};

enum class TriggerState { FreeAccelerate, Plan, SafeMode };

enum class PlannerKind { Stackelberg, DecisionTree };

/// U_pos + U_neg for the given player in a (predicted) world.
double stackelberg_utility(const World& world, int player_id,
                           const StackelbergConfig& cfg,
                           const RoadConfig& road);

/// Leader action from the max-min-min equilibrium over feasible action
/// triples with the two nearest rear cars as followers. Each triple is
/// held over the prediction window while all other cars Maintain.
/// Ties break by action ordinal.
Action stackelberg_action(const World& world, int ego_id,
                          const StackelbergConfig& cfg,
                          const KinematicsConfig& kin, const RoadConfig& road,
                          const ObservationConfig& obs);

/// Two-layer receding-horizon enumeration over feasible action profiles,
/// scored with R_total = w_l1*R_l1 + w_l2*R_l2. All other cars are assumed
/// to Maintain. A first-layer lane change forces its own continuation as
/// the second layer. Ties break by enumeration order.
Action decision_tree_action(const World& world, int ego_id,
                            const DecisionTreeConfig& cfg,
                            const RewardWeights& rw,
                            const KinematicsConfig& kin,
                            const RoadConfig& road,
                            const ObservationConfig& obs);

/// SafeMode if any car's safe zone intersects region B; else Plan if any
/// intersects region A; else FreeAccelerate.
TriggerState trigger_state(const World& world, int ego_id,
                           const TriggerConfig& cfg, const RoadConfig& road);

/// Trigger dispatch: FreeAccelerate -> Accelerate (Maintain at v_max),
/// Plan -> planner action, SafeMode -> level-0 rule on the observation.
Action controller_step(const World& world, int ego_id, PlannerKind planner,
                       const StackelbergConfig& sb,
                       const DecisionTreeConfig& dt, const TriggerConfig& trig,
                       const RewardWeights& rw, const KinematicsConfig& kin,
                       const RoadConfig& road, const ObservationConfig& obs);

/// Prediction step used by both planners: the assigned action is held,
/// speed saturates at the bounds instead of erroring, ongoing lane
/// changes continue.
VehicleState predict_step(const VehicleState& state, Action held,
                          const KinematicsConfig& kin, const RoadConfig& road);

}  // namespace lksim
