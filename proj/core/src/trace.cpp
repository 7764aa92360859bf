#include "lksim/trace.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace lksim {

TraceRecord make_record(int step, const World& world, bool violation) {
  TraceRecord rec;
  rec.step = step;
  rec.violation = violation;
  rec.cars.reserve(world.size());
  for (const auto& v : world) {
    rec.cars.push_back({v.id, v.x, v.y, v.v_x, v.lane, v.change_steps_left,
                        v.policy_tag});
  }
  return rec;
}

void write_trace(const std::vector<TraceRecord>& records,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  for (const auto& rec : records) {
    nlohmann::json j;
    j["step"] = rec.step;
    j["violation"] = rec.violation;
    nlohmann::json cars = nlohmann::json::array();
    for (const auto& c : rec.cars) {
      cars.push_back({{"id", c.id},
                      {"x", c.x},
                      {"y", c.y},
                      {"v_x", c.v_x},
                      {"lane", c.lane},
                      {"changing", c.change_steps_left},
                      {"policy", c.policy_tag}});
    }
    j["cars"] = cars;
    out << j.dump() << '\n';
  }
}

std::vector<TraceRecord> read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  std::vector<TraceRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": malformed trace line: " + e.what());
    }
    TraceRecord rec;
    rec.step = j.at("step").get<int>();
    rec.violation = j.at("violation").get<bool>();
    for (const auto& c : j.at("cars")) {
      rec.cars.push_back({c.at("id").get<int>(), c.at("x").get<double>(),
                          c.at("y").get<double>(), c.at("v_x").get<double>(),
                          c.at("lane").get<int>(),
                          c.at("changing").get<int>(),
                          c.at("policy").get<int>()});
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace lksim
