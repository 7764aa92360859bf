#include "lksim/perception.hpp"

#include "lksim/world.hpp"

#include <cmath>
#include <limits>

namespace lksim {

Range quantize_range(double x_r, const ObservationConfig& cfg) {
  if (x_r <= cfg.d_c) return Range::Close;
  if (x_r <= cfg.d_f) return Range::Nominal;
  return Range::Far;
}

RangeRate quantize_range_rate(double rate, const ObservationConfig& cfg) {
  if (rate < -cfg.rr_eps) return RangeRate::Approaching;
  if (rate > cfg.rr_eps) return RangeRate::MovingAway;
  return RangeRate::Stable;
}

Message observe(const World& world, int ego_id, const ObservationConfig& cfg,
                const RoadConfig& road) {
  Message m;
  m.range.fill(Range::Far);
  m.rate.fill(RangeRate::MovingAway);

  const VehicleState* ego = find_vehicle(world, ego_id);
  if (!ego) return m;

  const int ego_lane = ego->lane;  // destination lane while changing
  m.lane_digit = std::clamp(ego_lane, 1, 3) - 1;

  std::array<double, kNumSlots> best_dist;
  best_dist.fill(std::numeric_limits<double>::infinity());

  for (const auto& car : world) {
    if (car.id == ego_id) continue;
    const double x_r = car.x - ego->x;
    if (std::abs(x_r) > cfg.d_v) continue;
    const int dl = lane_of(car, road) - ego_lane;
    if (dl < -1 || dl > 1) continue;

    Slot slot;
    if (dl == 0) {
      if (x_r < 0) continue;  // no rear-center slot
      slot = Slot::FrontCenter;  // x_r == 0 ties resolve to front
    } else if (dl == +1) {
      slot = (x_r >= 0) ? Slot::FrontLeft : Slot::RearLeft;
    } else {
      slot = (x_r >= 0) ? Slot::FrontRight : Slot::RearRight;
    }

    const int si = static_cast<int>(slot);
    const double d = std::abs(x_r);
    if (d >= best_dist[si]) continue;  // occluded by a nearer car
    best_dist[si] = d;

    m.range[si] = quantize_range(d, cfg);
    // Rate of change of separation: front cars close when slower than ego,
    // rear cars close when faster.
    const double sep_rate =
        (x_r >= 0) ? (car.v_x - ego->v_x) : (ego->v_x - car.v_x);
    m.rate[si] = quantize_range_rate(sep_rate, cfg);
  }
  return m;
}

int encode(const Message& m) {
  int code = 0;
  int base = 1;
  for (int i = 0; i < kNumSlots; ++i) {
    code += static_cast<int>(m.range[i]) * base;
    base *= 3;
  }
  for (int i = 0; i < kNumSlots; ++i) {
    code += static_cast<int>(m.rate[i]) * base;
    base *= 3;
  }
  code += m.lane_digit * base;
  return code;
}

Message decode(int code) {
  if (code < 0 || code >= kNumMessages) {
    throw std::out_of_range("message code out of [0, 3^11)");
  }
  Message m;
  for (int i = 0; i < kNumSlots; ++i) {
    m.range[i] = static_cast<Range>(code % 3);
    code /= 3;
  }
  for (int i = 0; i < kNumSlots; ++i) {
    m.rate[i] = static_cast<RangeRate>(code % 3);
    code /= 3;
  }
  m.lane_digit = code % 3;
  return m;
}

Range headway_range(const World& world, int ego_id,
                    const ObservationConfig& cfg, const RoadConfig& road) {
  const VehicleState* ego = find_vehicle(world, ego_id);
  if (!ego) return Range::Far;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& car : world) {
    if (car.id == ego_id) continue;
    if (lane_of(car, road) != ego->lane) continue;
    const double x_r = car.x - ego->x;
    if (x_r >= 0 && x_r < best) best = x_r;
  }
  if (!std::isfinite(best)) return Range::Far;
  return quantize_range(best, cfg);
}

}  // namespace lksim
