#pragma once

#include "lksim/types.hpp"

#include <array>

namespace lksim {

enum class Range : int { Close = 0, Nominal = 1, Far = 2 };
enum class RangeRate : int { Approaching = 0, Stable = 1, MovingAway = 2 };

/// Observation slots around the ego, in the feature listing order.
enum class Slot : int {
  FrontCenter = 0,
  FrontLeft = 1,
  FrontRight = 2,
  RearLeft = 3,
  RearRight = 4,
};
inline constexpr int kNumSlots = 5;

struct ObservationConfig {
  double d_c = 21.0;    // "close" threshold [m]
  double d_f = 42.0;    // "nominal" threshold [m]
  double d_v = 63.0;    // visibility limit [m]
  double rr_eps = 0.25; // |separation rate| below which a car is "stable"
};

/// The 11-feature ternary observation.
struct Message {
  std::array<Range, kNumSlots> range{};
  std::array<RangeRate, kNumSlots> rate{};
  int lane_digit = 0;  // 0..2 for lane 1..3

  bool operator==(const Message&) const = default;
};

inline constexpr int kNumMessages = 177147;  // 3^11

Range quantize_range(double x_r, const ObservationConfig& cfg);

/// rate < -rr_eps: approaching; rate > +rr_eps: moving away; else stable.
/// The rate is d/dt of separation (negative means closing).
RangeRate quantize_range_rate(double rate, const ObservationConfig& cfg);

/// Nearest-car-per-slot observation with occlusion and visibility limits.
/// Empty slots read (far, moving away). During the ego's own lane change
/// slot lanes are relative to the destination lane.
Message observe(const World& world, int ego_id, const ObservationConfig& cfg,
                const RoadConfig& road);

/// Bijective little-endian base-3 code over the 11 features.
int encode(const Message& m);
Message decode(int code);

/// Quantized range to the car directly ahead in the ego's lane; Far when
/// no such car exists. Used by the reward's headway term.
Range headway_range(const World& world, int ego_id,
                    const ObservationConfig& cfg, const RoadConfig& road);

}  // namespace lksim
