#pragma once

#include "lksim/trace.hpp"
#include "lksim/types.hpp"

#include <string>

namespace lksim {

/// One SVG frame per trace record: lane boundaries, safe-zone rectangles,
/// the ego highlighted (and flagged on violation), velocity arrows scaled
/// by v_x. Returns the SVG text.
std::string render_frame_svg(const TraceRecord& rec, const RoadConfig& road,
                             int ego_id = 0);

/// Writes frame_<step>.svg files for every record into out_dir.
void render_trace(const std::vector<TraceRecord>& records,
                  const RoadConfig& road, const std::string& out_dir,
                  int ego_id = 0);

}  // namespace lksim
