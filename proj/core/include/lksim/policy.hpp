#pragma once

#include "lksim/perception.hpp"
#include "lksim/types.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace lksim {

struct FeasibilityMask {
  std::array<bool, kNumActions> allowed{};

  bool operator[](Action a) const { return allowed[static_cast<int>(a)]; }
  void set(Action a, bool v) { allowed[static_cast<int>(a)] = v; }
  int count() const {
    int n = 0;
    for (bool b : allowed) n += b;
    return n;
  }
};

/// Hard constraints of the action space: lane existence, parallel cars,
/// close-and-approaching adjacent cars (evaluated on the quantized
/// observation), and the speed bounds. Maintain is always feasible.
/// While the ego's own lane change is in progress only Maintain remains.
FeasibilityMask feasible_actions(const World& world, int ego_id,
                                 const KinematicsConfig& kin,
                                 const RoadConfig& road,
                                 const ObservationConfig& obs);

/// Rule-based reflexive policy: brakes for the car ahead, never changes
/// lanes, never accelerates.
Action level0_action(const Message& m);

/// Degrade an infeasible deterministic action to the nearest feasible one
/// of the same kind (hard maneuver -> nominal maneuver -> Maintain).
Action degrade_to_feasible(Action a, const FeasibilityMask& mask);

using Rng = std::mt19937_64;

/// Stochastic message -> action map; the trained level-k artifact.
struct TabularPolicy {
  int level = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  int n_messages = kNumMessages;
  int n_actions = kNumActions;
  std::vector<double> probs;          // row-major n_messages x n_actions
  std::vector<std::uint64_t> visits;  // per message

  static TabularPolicy uniform(int level = 0, int n_messages = kNumMessages,
                               int n_actions = kNumActions);

  std::span<double> row(int m) {
    return {probs.data() + static_cast<std::size_t>(m) * n_actions,
            static_cast<std::size_t>(n_actions)};
  }
  std::span<const double> row(int m) const {
    return {probs.data() + static_cast<std::size_t>(m) * n_actions,
            static_cast<std::size_t>(n_actions)};
  }
  void set_row_deterministic(int m, Action a);
};

/// Sample from the policy row restricted to feasible actions, renormalized.
/// Falls back to uniform over feasible actions when the feasible mass is 0.
Action sample_action(const TabularPolicy& policy, const Message& m,
                     const FeasibilityMask& mask, Rng& rng);

/// Same restriction/renormalization without sampling (used by tests).
std::array<double, kNumActions> masked_distribution(
    std::span<const double> row, const FeasibilityMask& mask);

}  // namespace lksim
