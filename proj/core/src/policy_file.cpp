#include "lksim/policy_file.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

namespace lksim {

namespace {

constexpr char kMagic[8] = {'L', 'K', 'P', 'O', 'L', 'I', 'C', 'Y'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw PolicyFileError("truncated policy file");
}

}  // namespace

void save_policy(const TabularPolicy& policy, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PolicyFileError("cannot write policy file: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint32_t>(policy.level));
  write_pod(out, policy.seed);
  write_pod(out, policy.config_hash);
  write_pod(out, static_cast<std::uint32_t>(policy.n_messages));
  write_pod(out, static_cast<std::uint32_t>(policy.n_actions));
  out.write(reinterpret_cast<const char*>(policy.probs.data()),
            static_cast<std::streamsize>(policy.probs.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(policy.visits.data()),
            static_cast<std::streamsize>(policy.visits.size() *
                                         sizeof(std::uint64_t)));
  if (!out) throw PolicyFileError("short write to policy file: " + path);
}

TabularPolicy load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PolicyFileError("cannot open policy file: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw PolicyFileError("bad magic in policy file: " + path);
  }
  std::uint32_t version, level, n_messages, n_actions;
  read_pod(in, version);
  if (version != kVersion) {
    throw PolicyFileError("unsupported policy file version");
  }
  TabularPolicy p;
  read_pod(in, level);
  read_pod(in, p.seed);
  read_pod(in, p.config_hash);
  read_pod(in, n_messages);
  read_pod(in, n_actions);
  if (n_messages == 0 || n_actions == 0 || n_messages > (1u << 24) ||
      n_actions > 64) {
    throw PolicyFileError("implausible policy dimensions");
  }
  p.level = static_cast<int>(level);
  p.n_messages = static_cast<int>(n_messages);
  p.n_actions = static_cast<int>(n_actions);
  p.probs.resize(static_cast<std::size_t>(n_messages) * n_actions);
  p.visits.resize(n_messages);
  in.read(reinterpret_cast<char*>(p.probs.data()),
          static_cast<std::streamsize>(p.probs.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(p.visits.data()),
          static_cast<std::streamsize>(p.visits.size() * sizeof(std::uint64_t)));
  if (!in) throw PolicyFileError("truncated policy file");
  char extra;
  if (in.read(&extra, 1)) throw PolicyFileError("trailing bytes in policy file");

  for (int m = 0; m < p.n_messages; ++m) {
    double sum = 0.0;
    for (double v : p.row(m)) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw PolicyFileError("negative or non-finite probability at row " +
                              std::to_string(m));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw PolicyFileError("row " + std::to_string(m) +
                            " does not sum to 1 within 1e-9");
    }
  }
  return p;
}

void export_policy_json(const TabularPolicy& policy, const std::string& path) {
  nlohmann::json j;
  j["level"] = policy.level;
  j["seed"] = policy.seed;
  j["config_hash"] = policy.config_hash;
  j["n_messages"] = policy.n_messages;
  j["n_actions"] = policy.n_actions;
  nlohmann::json rows = nlohmann::json::array();
  for (int m = 0; m < policy.n_messages; ++m) {
    if (policy.visits[m] == 0) continue;
    nlohmann::json row;
    row["message"] = m;
    row["visits"] = policy.visits[m];
    row["probs"] = std::vector<double>(policy.row(m).begin(),
                                       policy.row(m).end());
    rows.push_back(row);
  }
  j["visited_rows"] = rows;
  std::ofstream out(path);
  if (!out) throw PolicyFileError("cannot write json export: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace lksim
