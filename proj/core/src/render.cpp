#include "lksim/render.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace lksim {

std::string render_frame_svg(const TraceRecord& rec, const RoadConfig& road,
                             int ego_id) {
  double ego_x = 0.0;
  for (const auto& c : rec.cars) {
    if (c.id == ego_id) ego_x = c.x;
  }
  const double view_half = 120.0;  // meters shown around the ego
  const double scale = 6.0;        // px per meter
  const double width = 2 * view_half * scale;
  const double road_h = road.n_lanes * road.lane_width * scale;
  const double margin = 20.0;
  const double height = road_h + 2 * margin;

  auto px = [&](double x) { return (x - (ego_x - view_half)) * scale; };
  // y grows upward in road coordinates, downward in SVG.
  auto py = [&](double y) { return margin + road_h - y * scale; };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "'>\n";
  svg << "<rect width='100%' height='100%' fill='#f4f4f4'/>\n";

  for (int i = 0; i <= road.n_lanes; ++i) {
    const double y = py(i * road.lane_width);
    svg << "<line class='lane' x1='0' y1='" << y << "' x2='" << width
        << "' y2='" << y << "' stroke='#888' stroke-dasharray='"
        << (i == 0 || i == road.n_lanes ? "none" : "12,10") << "'/>\n";
  }

  for (const auto& c : rec.cars) {
    const double w = road.safe_zone_length * scale;
    const double h = road.safe_zone_width * scale;
    const double x0 = px(c.x) - w / 2;
    const double y0 = py(c.y) - h / 2;
    const bool is_ego = c.id == ego_id;
    const char* fill = is_ego ? (rec.violation ? "#ff2222" : "#d03030")
                              : "#e0b020";
    svg << "<rect class='" << (is_ego ? "ego" : "car") << "' x='" << x0
        << "' y='" << y0 << "' width='" << w << "' height='" << h
        << "' fill='" << fill << "' stroke='#222'";
    if (is_ego && rec.violation) svg << " stroke-width='3'";
    svg << "/>\n";
    // velocity arrow, length scaled by v_x
    const double ax0 = px(c.x) + w / 2;
    const double ay = py(c.y);
    const double len = c.v_x * 0.6 * scale / 3.0;
    svg << "<line class='vel' x1='" << ax0 << "' y1='" << ay << "' x2='"
        << ax0 + len << "' y2='" << ay
        << "' stroke='#3050d0' stroke-width='2'/>\n";
  }

  svg << "<text x='8' y='14' font-size='12'>step " << rec.step
      << (rec.violation ? " VIOLATION" : "") << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void render_trace(const std::vector<TraceRecord>& records,
                  const RoadConfig& road, const std::string& out_dir,
                  int ego_id) {
  std::filesystem::create_directories(out_dir);
  for (const auto& rec : records) {
    std::ostringstream name;
    name << out_dir << "/frame_" << std::setw(4) << std::setfill('0')
         << rec.step << ".svg";
    std::ofstream out(name.str());
    if (!out) throw std::runtime_error("cannot write " + name.str());
    out << render_frame_svg(rec, road, ego_id);
  }
}

}  // namespace lksim
