#include <doctest.h>

#include "lksim/config.hpp"
#include "lksim/policy_file.hpp"
#include "lksim/render.hpp"
#include "lksim/trace.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace lksim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("lksim_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("config: defaults validate and round-trip through the map") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  const auto m = cfg.to_map();
  CHECK(m.at("road.n_lanes") == "3");
  CHECK(m.at("reward.w1") == "10000");
  CHECK(m.at("trigger.x_B") == "21");

  RunConfig rebuilt;
  rebuilt.params.road.n_lanes = 0;  // will be overwritten
  for (const auto& [k, v] : m) rebuilt.apply(k, v);
  CHECK(rebuilt.to_map() == m);
}

TEST_CASE("config: apply parses and rejects") {
  RunConfig cfg;
  cfg.apply("kinematics.v_min_kmh", "72");
  CHECK(cfg.params.kin.v_min == doctest::Approx(20.0));
  cfg.apply("episode.n_c", "12");
  CHECK(cfg.episode.n_c == 12);

  CHECK_THROWS_AS(cfg.apply("bogus.key", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.apply("kinematics.a1", "fast"), ConfigError);
  CHECK_THROWS_AS(cfg.apply("episode.n_c", "3.5"), ConfigError);
  CHECK_THROWS_WITH_AS(cfg.apply("no.such", "1"),
                       "unknown config key: no.such", ConfigError);
}

TEST_CASE("config: validation messages name the offending field") {
  auto expect_throw = [](auto mutate, const char* fragment) {
    RunConfig cfg;
    mutate(cfg);
    try {
      cfg.validate();
      FAIL_CHECK("expected ConfigError containing '" << fragment << "'");
    } catch (const ConfigError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos,
                    e.what());
    }
  };
  expect_throw([](RunConfig& c) { c.params.road.n_lanes = 0; }, "n_lanes");
  expect_throw([](RunConfig& c) { c.params.kin.a1 = 7.0; }, "a1");
  expect_throw([](RunConfig& c) { c.params.kin.t_cl = 2.5; }, "t_cl");
  expect_throw([](RunConfig& c) { c.params.kin.v_min = 100.0; }, "v_min");
  expect_throw([](RunConfig& c) { c.params.obs.d_f = 5.0; }, "d_c < d_f < d_v");
  expect_throw([](RunConfig& c) { c.params.trigger.x_B = 50.0; }, "x_B < x_A");
  expect_throw([](RunConfig& c) { c.params.decision_tree.w_l1 = 0.0; },
               "layer weights");
  expect_throw([](RunConfig& c) { c.episode.traffic_mix = {0.5, 0.5, 0.5}; },
               "sum to 1");
  expect_throw([](RunConfig& c) { c.episode.n_c = -1; }, "n_c");
  expect_throw([](RunConfig& c) { c.training.epsilon_increment = 2.0; },
               "epsilon_increment");
}

TEST_CASE("config: file parsing with comments and overrides") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("run.cfg"));
    out << "# a comment line\n"
        << "\n"
        << "episode.n_c = 17  # trailing comment\n"
        << "reward.w2=7.5\n";
  }
  const auto cfg = load_config_file(tmp.file("run.cfg"));
  CHECK(cfg.episode.n_c == 17);
  CHECK(cfg.params.reward.w2 == 7.5);
  // untouched keys keep their defaults
  CHECK(cfg.params.reward.w1 == 10000.0);

  {
    std::ofstream out(tmp.file("bad.cfg"));
    out << "this line has no equals\n";
  }
  CHECK_THROWS_AS(load_config_file(tmp.file("bad.cfg")), ConfigError);
  CHECK_THROWS_AS(load_config_file(tmp.file("missing.cfg")), ConfigError);
}

TEST_CASE("config: environment hash covers the environment, not the episode") {
  RunConfig a, b;
  CHECK(a.environment_hash() == b.environment_hash());
  b.episode.n_c = 30;
  b.training.seed = 999;
  b.output_dir = "elsewhere";
  CHECK(a.environment_hash() == b.environment_hash());
  b.params.reward.w2 = 6.0;
  CHECK(a.environment_hash() != b.environment_hash());
  RunConfig c;
  c.params.obs.d_c = 20.0;
  CHECK(a.environment_hash() != c.environment_hash());
}

TEST_CASE("policy file: save/load/save is byte-identical") {
  TempDir tmp;
  auto p = TabularPolicy::uniform(2, 100, kNumActions);
  p.seed = 0xdeadbeef;
  p.config_hash = 0x1234;
  p.set_row_deterministic(3, Action::ChangeLeft);
  p.visits[3] = 42;

  const auto path1 = tmp.file("p1.lkp");
  const auto path2 = tmp.file("p2.lkp");
  save_policy(p, path1);
  const auto loaded = load_policy(path1);
  CHECK(loaded.level == 2);
  CHECK(loaded.seed == 0xdeadbeef);
  CHECK(loaded.config_hash == 0x1234);
  CHECK(loaded.n_messages == 100);
  CHECK(loaded.probs == p.probs);
  CHECK(loaded.visits == p.visits);
  save_policy(loaded, path2);
  CHECK(slurp(path1) == slurp(path2));
}

TEST_CASE("policy file: corruption is rejected") {
  TempDir tmp;
  auto p = TabularPolicy::uniform(1, 10, kNumActions);
  const auto path = tmp.file("p.lkp");
  save_policy(p, path);
  const std::string good = slurp(path);

  auto write_bytes = [&](const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
  };

  SUBCASE("bad magic") {
    std::string bad = good;
    bad[0] = 'X';
    write_bytes(bad);
    CHECK_THROWS_AS(load_policy(path), PolicyFileError);
  }
  SUBCASE("bad version") {
    std::string bad = good;
    bad[8] = 99;
    write_bytes(bad);
    CHECK_THROWS_AS(load_policy(path), PolicyFileError);
  }
  SUBCASE("truncated") {
    write_bytes(good.substr(0, good.size() / 2));
    CHECK_THROWS_AS(load_policy(path), PolicyFileError);
  }
  SUBCASE("trailing bytes") {
    write_bytes(good + "x");
    CHECK_THROWS_AS(load_policy(path), PolicyFileError);
  }
  SUBCASE("row sum broken") {
    auto broken = p;
    broken.probs[0] = 0.9;  // row 0 no longer sums to 1
    save_policy(broken, path);
    CHECK_THROWS_AS(load_policy(path), PolicyFileError);
  }
  SUBCASE("negative probability") {
    auto broken = p;
    broken.probs[0] = -1.0 / kNumActions;
    broken.probs[1] = 3.0 / kNumActions;
    save_policy(broken, path);
    CHECK_THROWS_AS(load_policy(path), PolicyFileError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_policy(tmp.file("nope.lkp")), PolicyFileError);
  }
}

TEST_CASE("policy json export lists only the visited rows") {
  TempDir tmp;
  auto p = TabularPolicy::uniform(1, 8, kNumActions);
  p.visits[2] = 5;
  p.visits[6] = 1;
  const auto path = tmp.file("p.json");
  export_policy_json(p, path);
  const std::string text = slurp(path);
  CHECK(text.find("\"n_messages\": 8") != std::string::npos);
  CHECK(text.find("\"message\": 2") != std::string::npos);
  CHECK(text.find("\"message\": 6") != std::string::npos);
  CHECK(text.find("\"message\": 0") == std::string::npos);
}

TEST_CASE("trace: JSONL round trip") {
  TempDir tmp;
  RoadConfig road;
  World w;
  VehicleState a;
  a.id = 0; a.x = 12.5; a.y = 5.4; a.v_x = 21.25; a.lane = 2;
  a.policy_tag = 3;
  VehicleState b = a;
  b.id = 1; b.x = -30; b.change_steps_left = 1; b.lane = 3; b.y = 7.2;
  w = {a, b};

  std::vector<TraceRecord> records{make_record(0, w, false),
                                   make_record(1, w, true)};
  const auto path = tmp.file("trace.jsonl");
  write_trace(records, path);

  // one line per record
  std::istringstream lines(slurp(path));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 2);

  const auto back = read_trace(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].step == 0);
  CHECK_FALSE(back[0].violation);
  CHECK(back[1].violation);
  REQUIRE(back[0].cars.size() == 2);
  CHECK(back[0].cars[0].x == 12.5);
  CHECK(back[0].cars[0].v_x == 21.25);
  CHECK(back[0].cars[1].change_steps_left == 1);
  CHECK(back[0].cars[1].lane == 3);
  CHECK(back[0].cars[0].policy_tag == 3);
}

TEST_CASE("trace: malformed lines report path and line number") {
  TempDir tmp;
  const auto path = tmp.file("broken.jsonl");
  {
    std::ofstream out(path);
    out << R"({"step":0,"violation":false,"cars":[]})" << "\n";
    out << "{not json\n";
  }
  try {
    read_trace(path);
    FAIL_CHECK("expected a parse failure");
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    CHECK(what.find(path) != std::string::npos);
    CHECK(what.find(":2") != std::string::npos);
  }
  CHECK_THROWS_AS(read_trace(tmp.file("missing.jsonl")),
                  std::runtime_error);
}

TEST_CASE("render: frame contents") {
  RoadConfig road;
  World w;
  VehicleState ego;
  ego.id = 0; ego.x = 50; ego.y = 5.4; ego.lane = 2; ego.v_x = 22;
  VehicleState other = ego;
  other.id = 1; other.x = 80; other.y = 1.8; other.lane = 1;
  w = {ego, other};

  const auto rec = make_record(3, w, false);
  const std::string svg = render_frame_svg(rec, road, 0);
  CHECK(svg.find("<svg") != std::string::npos);
  // one rectangle per car plus the background
  std::size_t rects = 0, pos = 0;
  while ((pos = svg.find("<rect", pos)) != std::string::npos) {
    ++rects;
    pos += 5;
  }
  CHECK(rects == 3);
  CHECK(svg.find("class='ego'") != std::string::npos);
  CHECK(svg.find("class='car'") != std::string::npos);
  // n_lanes + 1 boundary lines plus one velocity arrow per car
  std::size_t lane_lines = 0, arrows = 0;
  pos = 0;
  while ((pos = svg.find("class='lane'", pos)) != std::string::npos) {
    ++lane_lines;
    pos += 10;
  }
  pos = 0;
  while ((pos = svg.find("class='vel'", pos)) != std::string::npos) {
    ++arrows;
    pos += 10;
  }
  CHECK(lane_lines == static_cast<std::size_t>(road.n_lanes) + 1);
  CHECK(arrows == w.size());
  CHECK(svg.find("step 3") != std::string::npos);
  CHECK(svg.find("VIOLATION") == std::string::npos);

  const std::string hot = render_frame_svg(make_record(4, w, true), road, 0);
  CHECK(hot.find("VIOLATION") != std::string::npos);
}

TEST_CASE("render: one file per trace record") {
  TempDir tmp;
  RoadConfig road;
  World w;
  VehicleState ego;
  ego.id = 0; ego.y = 5.4; ego.lane = 2; ego.v_x = 20;
  w = {ego};
  std::vector<TraceRecord> records{make_record(0, w, false),
                                   make_record(1, w, false),
                                   make_record(2, w, false)};
  const auto dir = tmp.file("frames");
  render_trace(records, road, dir, 0);
  CHECK(fs::exists(fs::path(dir) / "frame_0000.svg"));
  CHECK(fs::exists(fs::path(dir) / "frame_0001.svg"));
  CHECK(fs::exists(fs::path(dir) / "frame_0002.svg"));
  int n = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++n;
  CHECK(n == 3);
}
