#include "lksim/reward.hpp"

namespace lksim {

RewardBreakdown compute_reward(bool violation, double v_x, Range headway,
                               Action action, const RewardWeights& w,
                               const KinematicsConfig& kin) {
  RewardBreakdown r;
  r.c = violation ? -1.0 : 0.0;
  r.v = (v_x - kin.v_nominal()) / kin.a1;
  switch (headway) {
    case Range::Close: r.h = -1.0; break;
    case Range::Nominal: r.h = 0.0; break;
    case Range::Far: r.h = 1.0; break;
  }
  switch (action) {
    case Action::Maintain:
      r.e = 0.0;
      break;
    case Action::HardAccelerate:
    case Action::HardDecelerate:
      r.e = w.e2;
      break;
    default:
      r.e = w.e1;
      break;
  }
  r.total = w.w1 * r.c + w.w2 * r.v + w.w3 * r.h + w.w4 * r.e;
  return r;
}

}  // namespace lksim
