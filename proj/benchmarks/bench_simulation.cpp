#include "lksim/harness.hpp"
#include "lksim/perception.hpp"
#include "lksim/world.hpp"

#include <benchmark/benchmark.h>

using namespace lksim;

namespace {

World make_world(int n_c, std::uint64_t seed, const SimParams& params) {
  EpisodeConfig cfg;
  cfg.n_c = n_c;
  cfg.traffic_mix = {1.0, 0.0, 0.0};
  cfg.seed = seed;
  Rng rng(mix_seed(seed, 0));
  return initialize_episode(cfg, params, rng);
}

void BM_Observe(benchmark::State& state) {
  SimParams params;
  const World world = make_world(static_cast<int>(state.range(0)), 11, params);
  for (auto _ : state) {
    benchmark::DoNotOptimize(observe(world, kEgoId, params.obs, params.road));
  }
}
BENCHMARK(BM_Observe)->Arg(10)->Arg(20)->Arg(36);

void BM_DecisionTreeStep(benchmark::State& state) {
  SimParams params;
  const World world = make_world(static_cast<int>(state.range(0)), 13, params);
  for (auto _ : state) {
    benchmark::DoNotOptimize(controller_step(
        world, kEgoId, PlannerKind::DecisionTree, params.stackelberg,
        params.decision_tree, params.trigger, params.reward, params.kin,
        params.road, params.obs));
  }
}
BENCHMARK(BM_DecisionTreeStep)->Arg(10)->Arg(20)->Arg(36);

void BM_StackelbergStep(benchmark::State& state) {
  SimParams params;
  const World world = make_world(static_cast<int>(state.range(0)), 13, params);
  for (auto _ : state) {
    benchmark::DoNotOptimize(controller_step(
        world, kEgoId, PlannerKind::Stackelberg, params.stackelberg,
        params.decision_tree, params.trigger, params.reward, params.kin,
        params.road, params.obs));
  }
}
BENCHMARK(BM_StackelbergStep)->Arg(10)->Arg(20)->Arg(36);

void BM_Episode(benchmark::State& state) {
  SimParams params;
  EpisodeConfig cfg;
  cfg.n_c = static_cast<int>(state.range(0));
  cfg.traffic_mix = {1.0, 0.0, 0.0};
  cfg.ego_controller = ControllerKind::DecisionTree;
  PolicySet policies;
  std::uint64_t seed = 1000;
  for (auto _ : state) {
    cfg.seed = seed++;
    Rng rng(mix_seed(cfg.seed, 0));
    const World world = initialize_episode(cfg, params, rng);
    benchmark::DoNotOptimize(run_episode(world, cfg, params, policies));
  }
}
BENCHMARK(BM_Episode)->Arg(10)->Arg(20)->Arg(36)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
