#pragma once

#include "lksim/perception.hpp"
#include "lksim/types.hpp"

namespace lksim {

struct RewardWeights {
  double w1 = 10000.0;  // constraint violation
  double w2 = 5.0;      // velocity
  double w3 = 1.0;      // headway
  double w4 = 1.0;      // effort
  double e1 = -1.0;     // ordinary maneuver effort
  double e2 = -5.0;     // hard maneuver effort
};

struct RewardBreakdown {
  double c = 0.0;
  double v = 0.0;
  double h = 0.0;
  double e = 0.0;
  double total = 0.0;
};

/// R = w1*c + w2*v + w3*h + w4*e, evaluated on the post-step state.
RewardBreakdown compute_reward(bool violation, double v_x, Range headway,
                               Action action, const RewardWeights& w,
                               const KinematicsConfig& kin);

}  // namespace lksim
