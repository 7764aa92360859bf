#include "lksim/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace lksim {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("invalid numeric value for " + key + ": " + value);
  }
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid integer value for " + key + ": " + value);
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> m;
  m["road.n_lanes"] = std::to_string(params.road.n_lanes);
  m["road.lane_width"] = fmt(params.road.lane_width);
  m["road.safe_zone_length"] = fmt(params.road.safe_zone_length);
  m["road.safe_zone_width"] = fmt(params.road.safe_zone_width);
  m["kinematics.a1"] = fmt(params.kin.a1);
  m["kinematics.a2"] = fmt(params.kin.a2);
  m["kinematics.t_cl"] = fmt(params.kin.t_cl);
  m["kinematics.dt"] = fmt(params.kin.dt);
  m["kinematics.v_min"] = fmt(params.kin.v_min);
  m["kinematics.v_max"] = fmt(params.kin.v_max);
  m["observation.d_c"] = fmt(params.obs.d_c);
  m["observation.d_f"] = fmt(params.obs.d_f);
  m["observation.d_v"] = fmt(params.obs.d_v);
  m["observation.rr_eps"] = fmt(params.obs.rr_eps);
  m["reward.w1"] = fmt(params.reward.w1);
  m["reward.w2"] = fmt(params.reward.w2);
  m["reward.w3"] = fmt(params.reward.w3);
  m["reward.w4"] = fmt(params.reward.w4);
  m["reward.e1"] = fmt(params.reward.e1);
  m["reward.e2"] = fmt(params.reward.e2);
  m["stackelberg.T"] = fmt(params.stackelberg.T);
  m["stackelberg.d_min"] = fmt(params.stackelberg.d_min);
  m["stackelberg.d_v"] = fmt(params.stackelberg.d_v);
  m["decision_tree.w_l1"] = fmt(params.decision_tree.w_l1);
  m["decision_tree.w_l2"] = fmt(params.decision_tree.w_l2);
  m["trigger.x_A"] = fmt(params.trigger.x_A);
  m["trigger.x_B"] = fmt(params.trigger.x_B);
  m["trigger.b_widen"] = fmt(params.trigger.b_widen);
  m["episode.n_c"] = std::to_string(episode.n_c);
  m["episode.x0_max"] = fmt(episode.x0_max);
  m["episode.t_f"] = fmt(episode.t_f);
  m["episode.mix_l0"] = fmt(episode.traffic_mix[0]);
  m["episode.mix_l1"] = fmt(episode.traffic_mix[1]);
  m["episode.mix_l2"] = fmt(episode.traffic_mix[2]);
  m["training.cycles"] = std::to_string(training.training_cycles);
  m["training.min_total_steps"] = std::to_string(training.min_total_steps);
  m["training.epsilon_increment"] = fmt(training.epsilon_increment);
  m["training.n_c_max"] = std::to_string(training.n_c_max);
  m["training.x0_max"] = fmt(training.x0_max);
  m["training.t_f"] = fmt(training.t_f);
  m["training.convergence_tolerance"] = fmt(training.convergence_tolerance);
  m["training.convergence_patience_steps"] =
      std::to_string(training.convergence_patience_steps);
  m["training.undertrained_threshold"] =
      std::to_string(training.undertrained_threshold);
  m["training.window_length"] = std::to_string(training.window_length);
  m["training.gamma_offset"] = fmt(training.gamma_offset);
  m["output_dir"] = output_dir;
  return m;
}

void RunConfig::apply(const std::string& key, const std::string& value) {
  if (key == "road.n_lanes") params.road.n_lanes = (int)parse_long(key, value);
  else if (key == "road.lane_width") params.road.lane_width = parse_double(key, value);
  else if (key == "road.safe_zone_length") params.road.safe_zone_length = parse_double(key, value);
  else if (key == "road.safe_zone_width") params.road.safe_zone_width = parse_double(key, value);
  else if (key == "kinematics.a1") params.kin.a1 = parse_double(key, value);
  else if (key == "kinematics.a2") params.kin.a2 = parse_double(key, value);
  else if (key == "kinematics.t_cl") params.kin.t_cl = parse_double(key, value);
  else if (key == "kinematics.dt") params.kin.dt = parse_double(key, value);
  else if (key == "kinematics.v_min") params.kin.v_min = parse_double(key, value);
  else if (key == "kinematics.v_max") params.kin.v_max = parse_double(key, value);
  else if (key == "kinematics.v_min_kmh") params.kin.v_min = kmh_to_ms(parse_double(key, value));
  else if (key == "kinematics.v_max_kmh") params.kin.v_max = kmh_to_ms(parse_double(key, value));
  else if (key == "observation.d_c") params.obs.d_c = parse_double(key, value);
  else if (key == "observation.d_f") params.obs.d_f = parse_double(key, value);
  else if (key == "observation.d_v") params.obs.d_v = parse_double(key, value);
  else if (key == "observation.rr_eps") params.obs.rr_eps = parse_double(key, value);
  else if (key == "reward.w1") params.reward.w1 = parse_double(key, value);
  else if (key == "reward.w2") params.reward.w2 = parse_double(key, value);
  else if (key == "reward.w3") params.reward.w3 = parse_double(key, value);
  else if (key == "reward.w4") params.reward.w4 = parse_double(key, value);
  else if (key == "reward.e1") params.reward.e1 = parse_double(key, value);
  else if (key == "reward.e2") params.reward.e2 = parse_double(key, value);
  else if (key == "stackelberg.T") params.stackelberg.T = parse_double(key, value);
  else if (key == "stackelberg.d_min") params.stackelberg.d_min = parse_double(key, value);
  else if (key == "stackelberg.d_v") params.stackelberg.d_v = parse_double(key, value);
  else if (key == "decision_tree.w_l1") params.decision_tree.w_l1 = parse_double(key, value);
  else if (key == "decision_tree.w_l2") params.decision_tree.w_l2 = parse_double(key, value);
  else if (key == "trigger.x_A") params.trigger.x_A = parse_double(key, value);
  else if (key == "trigger.x_B") params.trigger.x_B = parse_double(key, value);
  else if (key == "trigger.b_widen") params.trigger.b_widen = parse_double(key, value);
  else if (key == "episode.n_c") episode.n_c = (int)parse_long(key, value);
  else if (key == "episode.x0_max") episode.x0_max = parse_double(key, value);
  else if (key == "episode.t_f") episode.t_f = parse_double(key, value);
  else if (key == "episode.mix_l0") episode.traffic_mix[0] = parse_double(key, value);
  else if (key == "episode.mix_l1") episode.traffic_mix[1] = parse_double(key, value);
  else if (key == "episode.mix_l2") episode.traffic_mix[2] = parse_double(key, value);
  else if (key == "training.cycles") training.training_cycles = parse_long(key, value);
  else if (key == "training.min_total_steps") training.min_total_steps = parse_long(key, value);
  else if (key == "training.epsilon_increment") training.epsilon_increment = parse_double(key, value);
  else if (key == "training.n_c_max") training.n_c_max = (int)parse_long(key, value);
  else if (key == "training.x0_max") training.x0_max = parse_double(key, value);
  else if (key == "training.t_f") training.t_f = parse_double(key, value);
  else if (key == "training.convergence_tolerance") training.convergence_tolerance = parse_double(key, value);
  else if (key == "training.convergence_patience_steps") training.convergence_patience_steps = parse_long(key, value);
  else if (key == "training.undertrained_threshold") training.undertrained_threshold = (std::uint64_t)parse_long(key, value);
  else if (key == "training.window_length") training.window_length = (int)parse_long(key, value);
  else if (key == "training.gamma_offset") training.gamma_offset = parse_double(key, value);
  else if (key == "output_dir") output_dir = value;
  else throw ConfigError("unknown config key: " + key);
}

void RunConfig::validate() const {
  const auto& p = params;
  if (p.road.n_lanes < 1) throw ConfigError("road.n_lanes must be >= 1");
  if (p.road.lane_width <= 0) throw ConfigError("road.lane_width must be > 0");
  if (p.road.safe_zone_length <= 0 || p.road.safe_zone_width <= 0) {
    throw ConfigError("road safe zone dimensions must be > 0");
  }
  if (!(0 < p.kin.a1 && p.kin.a1 < p.kin.a2)) {
    throw ConfigError("kinematics.a1 must satisfy 0 < a1 < a2");
  }
  if (p.kin.dt <= 0) throw ConfigError("kinematics.dt must be > 0");
  const double ratio = p.kin.t_cl / p.kin.dt;
  if (std::abs(ratio - std::lround(ratio)) > 1e-9 || ratio < 1.0) {
    throw ConfigError("kinematics.t_cl must be an integer multiple of dt");
  }
  if (!(p.kin.v_min < p.kin.v_max)) {
    throw ConfigError("kinematics.v_min must be < v_max");
  }
  if (!(0 < p.obs.d_c && p.obs.d_c < p.obs.d_f && p.obs.d_f < p.obs.d_v)) {
    throw ConfigError("observation thresholds must satisfy 0 < d_c < d_f < d_v");
  }
  if (p.obs.rr_eps < 0) throw ConfigError("observation.rr_eps must be >= 0");
  if (!(0 < p.trigger.x_B && p.trigger.x_B < p.trigger.x_A)) {
    throw ConfigError("trigger thresholds must satisfy 0 < x_B < x_A");
  }
  if (p.decision_tree.w_l1 <= 0 || p.decision_tree.w_l2 <= 0) {
    throw ConfigError("decision_tree layer weights must be > 0");
  }
  if (p.stackelberg.T <= 0) throw ConfigError("stackelberg.T must be > 0");
  const double mix = episode.traffic_mix[0] + episode.traffic_mix[1] +
                     episode.traffic_mix[2];
  if (std::abs(mix - 1.0) > 1e-9) {
    throw ConfigError("episode traffic mix fractions must sum to 1");
  }
  if (episode.n_c < 0) throw ConfigError("episode.n_c must be >= 0");
  if (training.level < 1) throw ConfigError("training level must be >= 1");
  if (training.epsilon_increment <= 0 || training.epsilon_increment >= 1) {
    throw ConfigError("training.epsilon_increment must be in (0, 1)");
  }
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t RunConfig::environment_hash() const {
  std::ostringstream os;
  for (const auto& [k, v] : to_map()) {
    if (k.rfind("road.", 0) == 0 || k.rfind("kinematics.", 0) == 0 ||
        k.rfind("observation.", 0) == 0 || k.rfind("reward.", 0) == 0) {
      os << k << '=' << v << '\n';
    }
  }
  return fnv1a64(os.str());
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    base.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

}  // namespace lksim
