#include <doctest.h>

#include "lksim/autonomy.hpp"
#include "lksim/world.hpp"

#include <limits>
#include <random>
#include <vector>

using namespace lksim;

namespace {

VehicleState car(int id, double x, int lane, double v = 20.0) {
  VehicleState s;
  s.id = id;
  s.x = x;
  s.lane = lane;
  RoadConfig road;
  s.y = road.lane_center(lane);
  s.v_x = v;
  return s;
}

std::vector<Action> allowed(const FeasibilityMask& mask) {
  std::vector<Action> out;
  for (int a = 0; a < kNumActions; ++a) {
    if (mask.allowed[a]) out.push_back(static_cast<Action>(a));
  }
  return out;
}

World roll(const World& world, int steps, const KinematicsConfig& kin,
           const RoadConfig& road, int ia, Action aa, int ib, Action ab,
           int ic, Action ac) {
  World w = world;
  for (int s = 0; s < steps; ++s) {
    for (auto& c : w) {
      Action a = Action::Maintain;
      if (c.id == ia) a = aa;
      if (c.id == ib) a = ab;
      if (c.id == ic) a = ac;
      c = predict_step(c, a, kin, road);
    }
  }
  return w;
}

// Exhaustive max-min-min oracle, written flat: enumerate every
// (leader, follower1, follower2) triple, compute the leader's security
// level, pick the first maximizer in ordinal order.
Action stackelberg_oracle(const World& world, int ego_id,
                          const StackelbergConfig& cfg,
                          const KinematicsConfig& kin, const RoadConfig& road,
                          const ObservationConfig& obs) {
  const VehicleState* ego = find_vehicle(world, ego_id);
  std::vector<std::pair<double, int>> rear;
  for (const auto& c : world) {
    if (c.id == ego_id) continue;
    const double d = ego->x - c.x;
    if (d > 0 && d <= cfg.d_v) rear.push_back({d, c.id});
  }
  std::sort(rear.begin(), rear.end());
  const int f1 = rear.size() > 0 ? rear[0].second : -1;
  const int f2 = rear.size() > 1 ? rear[1].second : -1;

  const int steps = static_cast<int>(cfg.T / kin.dt);
  const auto la = allowed(feasible_actions(world, ego_id, kin, road, obs));
  const auto fa1 =
      f1 >= 0 ? allowed(feasible_actions(world, f1, kin, road, obs))
              : std::vector<Action>{Action::Maintain};
  const auto fa2 =
      f2 >= 0 ? allowed(feasible_actions(world, f2, kin, road, obs))
              : std::vector<Action>{Action::Maintain};

  Action best = Action::Maintain;
  double best_u = -std::numeric_limits<double>::infinity();
  for (Action gl : la) {
    double worst = std::numeric_limits<double>::infinity();
    for (Action g1 : fa1) {
      for (Action g2 : fa2) {
        const World w = roll(world, steps, kin, road, ego_id, gl, f1, g1, f2, g2);
        worst = std::min(worst, stackelberg_utility(w, ego_id, cfg, road));
      }
    }
    if (worst > best_u) {
      best_u = worst;
      best = gl;
    }
  }
  return best;
}

// Flat enumeration of the two-layer profiles with the same world model.
Action decision_tree_oracle(const World& world, int ego_id,
                            const DecisionTreeConfig& cfg,
                            const RewardWeights& rw,
                            const KinematicsConfig& kin, const RoadConfig& road,
                            const ObservationConfig& obs) {
  auto score_layer = [&](const World& w, Action charged) {
    return compute_reward(detect_violation(w, ego_id, road),
                          find_vehicle(w, ego_id)->v_x,
                          headway_range(w, ego_id, obs, road), charged, rw, kin)
        .total;
  };
  auto advance = [&](const World& w, Action ego_a) {
    World out = w;
    for (auto& c : out) {
      c = predict_step(c, c.id == ego_id ? ego_a : Action::Maintain, kin, road);
    }
    return out;
  };

  Action best = Action::Maintain;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Action a1 : allowed(feasible_actions(world, ego_id, kin, road, obs))) {
    const World w1 = advance(world, a1);
    const double r1 = score_layer(w1, a1);
    if (find_vehicle(w1, ego_id)->changing_lane()) {
      const World w2 = advance(w1, Action::Maintain);
      const double s = cfg.w_l1 * r1 + cfg.w_l2 * score_layer(w2, a1);
      if (s > best_score) {
        best_score = s;
        best = a1;
      }
      continue;
    }
    for (Action a2 : allowed(feasible_actions(w1, ego_id, kin, road, obs))) {
      const World w2 = advance(w1, a2);
      const double s = cfg.w_l1 * r1 + cfg.w_l2 * score_layer(w2, a2);
      if (s > best_score) {
        best_score = s;
        best = a1;
      }
    }
  }
  return best;
}

World random_world(std::mt19937_64& rng, int n_cars) {
  KinematicsConfig kin;
  RoadConfig road;
  std::uniform_real_distribution<double> dx(-80.0, 80.0);
  std::uniform_int_distribution<int> dlane(1, 3);
  std::uniform_real_distribution<double> dv(kin.v_min, kin.v_max);
  World w{car(0, 0, dlane(rng), dv(rng))};
  for (int i = 1; i <= n_cars; ++i) {
    w.push_back(car(i, dx(rng), dlane(rng), dv(rng)));
  }
  return w;
}

}  // namespace

TEST_CASE("predict_step saturates instead of erroring") {
  KinematicsConfig kin;
  RoadConfig road;
  auto fast = car(0, 0, 2, kin.v_max);
  CHECK(predict_step(fast, Action::HardAccelerate, kin, road).v_x == kin.v_max);
  auto slow = car(0, 0, 2, kin.v_min);
  CHECK(predict_step(slow, Action::HardDecelerate, kin, road).v_x == kin.v_min);
  // lane change off the road holds the lane
  auto edge = car(0, 0, 3, 20);
  auto n = predict_step(edge, Action::ChangeLeft, kin, road);
  CHECK(n.lane == 3);
  CHECK(n.y == road.lane_center(3));
  CHECK_FALSE(n.changing_lane());
}

TEST_CASE("predict_step continues an ongoing lane change") {
  KinematicsConfig kin;
  RoadConfig road;
  auto s = predict_step(car(0, 0, 2, 20), Action::ChangeLeft, kin, road);
  REQUIRE(s.changing_lane());
  auto done = predict_step(s, Action::HardAccelerate, kin, road);
  CHECK_FALSE(done.changing_lane());
  CHECK(done.lane == 3);
  CHECK(done.v_x == 20.0);
  CHECK(done.y == road.lane_center(3));
}

TEST_CASE("stackelberg utility") {
  StackelbergConfig cfg;
  RoadConfig road;

  SUBCASE("empty lane reads both terms at their ceilings") {
    World w{car(0, 0, 2, 20)};
    CHECK(stackelberg_utility(w, 0, cfg, road) ==
          doctest::Approx(cfg.d_v + cfg.d_v - cfg.d_min));
  }
  SUBCASE("front and rear gaps with a closing rear car") {
    World w{car(0, 0, 2, 20), car(1, 30, 2, 20), car(2, -20, 2, 22)};
    // u_pos = 30, u_neg = 20 - 2*2 - 6 = 10
    CHECK(stackelberg_utility(w, 0, cfg, road) == doctest::Approx(40.0));
  }
  SUBCASE("other lanes do not contribute") {
    World w{car(0, 0, 2, 20), car(1, 10, 1, 20), car(2, -10, 3, 30)};
    CHECK(stackelberg_utility(w, 0, cfg, road) ==
          doctest::Approx(cfg.d_v + cfg.d_v - cfg.d_min));
  }
  SUBCASE("front gap is capped at the visibility limit") {
    World w{car(0, 0, 2, 20), car(1, 62.0, 2, 20)};
    CHECK(stackelberg_utility(w, 0, cfg, road) ==
          doctest::Approx(62.0 + cfg.d_v - cfg.d_min));
  }
}

TEST_CASE("stackelberg action on an empty road is Maintain (tie break)") {
  StackelbergConfig cfg;
  KinematicsConfig kin;
  RoadConfig road;
  ObservationConfig obs;
  World w{car(0, 0, 2, 20)};
  CHECK(stackelberg_action(w, 0, cfg, kin, road, obs) == Action::Maintain);
}

TEST_CASE("stackelberg action matches the exhaustive oracle") {
  StackelbergConfig cfg;
  KinematicsConfig kin;
  RoadConfig road;
  ObservationConfig obs;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dn(0, 5);
  for (int trial = 0; trial < 300; ++trial) {
    const World w = random_world(rng, dn(rng));
    const Action got = stackelberg_action(w, 0, cfg, kin, road, obs);
    const Action want = stackelberg_oracle(w, 0, cfg, kin, road, obs);
    CHECK_MESSAGE(got == want, "trial " << trial << ": got " << to_string(got)
                                        << " want " << to_string(want));
  }
}

TEST_CASE("decision tree on an empty road accelerates hard below the cap") {
  DecisionTreeConfig cfg;
  RewardWeights rw;
  KinematicsConfig kin;
  RoadConfig road;
  ObservationConfig obs;
  // From v_nominal, hard acceleration reaches v_max in one step: its
  // velocity gain (+2 per layer weight unit) beats the extra effort.
  World w{car(0, 0, 2, kin.v_nominal())};
  CHECK(decision_tree_action(w, 0, cfg, rw, kin, road, obs) ==
        Action::HardAccelerate);
  // At v_max nothing beats coasting.
  World capped{car(0, 0, 2, kin.v_max)};
  CHECK(decision_tree_action(capped, 0, cfg, rw, kin, road, obs) ==
        Action::Maintain);
}

TEST_CASE("decision tree matches the exhaustive oracle") {
  DecisionTreeConfig cfg;
  RewardWeights rw;
  KinematicsConfig kin;
  RoadConfig road;
  ObservationConfig obs;
  std::mt19937_64 rng(555);
  std::uniform_int_distribution<int> dn(0, 5);
  for (int trial = 0; trial < 300; ++trial) {
    const World w = random_world(rng, dn(rng));
    const Action got = decision_tree_action(w, 0, cfg, rw, kin, road, obs);
    const Action want = decision_tree_oracle(w, 0, cfg, rw, kin, road, obs);
    CHECK_MESSAGE(got == want, "trial " << trial << ": got " << to_string(got)
                                        << " want " << to_string(want));
  }
}

TEST_CASE("decision tree layer weights matter") {
  RewardWeights rw;
  KinematicsConfig kin;
  RoadConfig road;
  ObservationConfig obs;
  std::mt19937_64 rng(77);
  // With different weights the choice must still match the reweighted oracle.
  DecisionTreeConfig heavy2{.w_l1 = 1.0, .w_l2 = 5.0};
  for (int trial = 0; trial < 100; ++trial) {
    const World w = random_world(rng, 4);
    CHECK(decision_tree_action(w, 0, heavy2, rw, kin, road, obs) ==
          decision_tree_oracle(w, 0, heavy2, rw, kin, road, obs));
  }
}

TEST_CASE("trigger regions") {
  TriggerConfig cfg;
  RoadConfig road;
  // ego in the middle lane; its front bumper sits at x = 3
  World w{car(0, 0, 2, 20)};

  SUBCASE("far ahead: free road") {
    w.push_back(car(1, 50, 2));  // zone starts at 47 > 3 + 42
    CHECK(trigger_state(w, 0, cfg, road) == TriggerState::FreeAccelerate);
  }
  SUBCASE("inside region A: plan") {
    w.push_back(car(1, 40, 2));
    CHECK(trigger_state(w, 0, cfg, road) == TriggerState::Plan);
  }
  SUBCASE("adjacent lanes are part of region A") {
    w.push_back(car(1, 30, 1));
    CHECK(trigger_state(w, 0, cfg, road) == TriggerState::Plan);
  }
  SUBCASE("inside region B: safe mode") {
    w.push_back(car(1, 15, 2));
    CHECK(trigger_state(w, 0, cfg, road) == TriggerState::SafeMode);
  }
  SUBCASE("B takes precedence over A") {
    w.push_back(car(1, 40, 2));
    w.push_back(car(2, 15, 2));
    CHECK(trigger_state(w, 0, cfg, road) == TriggerState::SafeMode);
  }
  SUBCASE("cars behind never trigger") {
    w.push_back(car(1, -10, 2));
    CHECK(trigger_state(w, 0, cfg, road) == TriggerState::FreeAccelerate);
  }
}

TEST_CASE("region A stops at the adjacent lane centers") {
  TriggerConfig cfg;
  RoadConfig road;
  // ego in lane 1: region A reaches up to the lane-2 center (5.4 m); a
  // lane-3 car (zone 8..10 m) is outside it
  World w{car(0, 0, 1, 20), car(1, 20, 3, 20)};
  CHECK(trigger_state(w, 0, cfg, road) == TriggerState::FreeAccelerate);
  // a lane-2 car straddles the boundary from below (past region B)
  World w2{car(0, 0, 1, 20), car(2, 30, 2, 20)};
  CHECK(trigger_state(w2, 0, cfg, road) == TriggerState::Plan);
}

TEST_CASE("region B reaches one meter into the adjacent lanes") {
  TriggerConfig cfg;
  RoadConfig road;
  // ego lane 2 (center 5.4): B spans y in (2.6, 8.2). A lane-3 car has
  // zone y in (8.0, 10.0): the 0.2 m overlap makes it hot.
  World w{car(0, 0, 2, 20), car(1, 10, 3, 20)};
  CHECK(trigger_state(w, 0, cfg, road) == TriggerState::SafeMode);
}

TEST_CASE("controller dispatch") {
  StackelbergConfig sb;
  DecisionTreeConfig dt;
  TriggerConfig trig;
  RewardWeights rw;
  KinematicsConfig kin;
  RoadConfig road;
  ObservationConfig obs;
  auto step = [&](const World& w, PlannerKind p) {
    return controller_step(w, 0, p, sb, dt, trig, rw, kin, road, obs);
  };

  SUBCASE("free road accelerates, and coasts at the cap") {
    World w{car(0, 0, 2, 20)};
    CHECK(step(w, PlannerKind::Stackelberg) == Action::Accelerate);
    World capped{car(0, 0, 2, kin.v_max)};
    CHECK(step(capped, PlannerKind::Stackelberg) == Action::Maintain);
  }
  SUBCASE("planning hands off to the selected planner") {
    World w{car(0, 0, 2, 20), car(1, 40, 2, 18)};
    REQUIRE(trigger_state(w, 0, trig, road) == TriggerState::Plan);
    CHECK(step(w, PlannerKind::Stackelberg) ==
          stackelberg_action(w, 0, sb, kin, road, obs));
    CHECK(step(w, PlannerKind::DecisionTree) ==
          decision_tree_action(w, 0, dt, rw, kin, road, obs));
  }
  SUBCASE("safe mode brakes hard for a close approaching car") {
    World w{car(0, 0, 2, 25), car(1, 10, 2, 17.5)};
    REQUIRE(trigger_state(w, 0, trig, road) == TriggerState::SafeMode);
    CHECK(step(w, PlannerKind::Stackelberg) == Action::HardDecelerate);
  }
  SUBCASE("safe mode degrades when no brake is feasible at the floor") {
    World w{car(0, 0, 2, kin.v_min), car(1, 10, 2, kin.v_min)};
    REQUIRE(trigger_state(w, 0, trig, road) == TriggerState::SafeMode);
    CHECK(step(w, PlannerKind::Stackelberg) == Action::Maintain);
  }
}
