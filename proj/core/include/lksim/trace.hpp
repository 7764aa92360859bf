#pragma once

#include "lksim/types.hpp"

#include <string>
#include <vector>

namespace lksim {

struct TraceCar {
  int id = 0;
  double x = 0, y = 0, v_x = 0;
  int lane = 1;
  int change_steps_left = 0;
  int policy_tag = 0;
};

/// One simulated step: car states plus the ego violation flag.
struct TraceRecord {
  int step = 0;
  std::vector<TraceCar> cars;
  bool violation = false;
};

/// JSON-lines trace persistence, one record per line.
void write_trace(const std::vector<TraceRecord>& records,
                 const std::string& path);
std::vector<TraceRecord> read_trace(const std::string& path);

TraceRecord make_record(int step, const World& world, bool violation);

}  // namespace lksim
