#include <benchmark/benchmark.h>

#include "metanet/harness.hpp"
#include "metanet/policies.hpp"
#include "metanet/selectors.hpp"
#include "metanet/simcore.hpp"
#include "metanet/surrogate.hpp"

using namespace metanet;

namespace {

SystemState warm_state(const ExperimentConfig& cfg, int intervals) {
  SystemState state = initial_state(cfg.sim);
  Rng arrivals(derive_seed(1, "arrivals"));
  const int bestfit = cfg.policies.index_of("bestfit");
  for (int t = 1; t <= intervals; ++t) {
    auto fresh = spawn_tasks(arrivals, t, cfg.sim, state.next_task_id);
    state.tasks.insert(state.tasks.end(), fresh.begin(), fresh.end());
    PolicyContext ctx{&cfg.sim, &cfg.policies, derive_seed(1, "policy", t)};
    auto out = schedule(bestfit, state, ctx);
    step_interval(state, out.placement, ScheduleCharge{bestfit, out.omega, 0.0, -1},
                  cfg.sim);
  }
  return state;
}

void BM_step_interval(benchmark::State& bench) {
  const auto cfg = default_config();
  const SystemState base = warm_state(cfg, 20);
  const int bestfit = cfg.policies.index_of("bestfit");
  PolicyContext ctx{&cfg.sim, &cfg.policies, 7};
  const auto out = schedule(bestfit, base, ctx);
  for (auto _ : bench) {
    SystemState state = base;
    auto m = step_interval(state, out.placement,
                           ScheduleCharge{bestfit, out.omega, 0.0, -1}, cfg.sim);
    benchmark::DoNotOptimize(m.total_cost);
  }
}
BENCHMARK(BM_step_interval);

void BM_policy(benchmark::State& bench) {
  const auto cfg = default_config();
  const SystemState state = warm_state(cfg, 20);
  const int policy = static_cast<int>(bench.range(0));
  PolicyContext ctx{&cfg.sim, &cfg.policies, 11};
  for (auto _ : bench) {
    auto out = schedule(policy, state, ctx);
    benchmark::DoNotOptimize(out.omega);
  }
  bench.SetLabel(cfg.policies.roster[policy]);
}
BENCHMARK(BM_policy)->DenseRange(0, 6);

void BM_surrogate_select(benchmark::State& bench) {
  const auto cfg = default_config();
  const FeatureLayout layout{static_cast<int>(cfg.sim.fleet.size()),
                             cfg.sim.history_window, cfg.policies.q()};
  SurrogateConfig scfg;
  auto net = make_surrogate(layout, scfg, 3);
  const SystemState state = warm_state(cfg, 20);
  const EncodedState enc = encode_state(state, cfg.sim.fleet);
  for (auto _ : bench) {
    auto sel = metanet_select(net, enc, 5e-7);
    benchmark::DoNotOptimize(sel.policy);
  }
}
BENCHMARK(BM_surrogate_select);

void BM_online_update(benchmark::State& bench) {
  const auto cfg = default_config();
  const FeatureLayout layout{static_cast<int>(cfg.sim.fleet.size()),
                             cfg.sim.history_window, cfg.policies.q()};
  SurrogateConfig scfg;
  auto net = make_surrogate(layout, scfg, 4);
  const SystemState state = warm_state(cfg, 20);
  TraceRecord r;
  r.policy = 3;
  r.phi = 0.4;
  r.state = state_features(encode_state(state, cfg.sim.fleet), layout);
  for (auto _ : bench) {
    online_update(net, r, 1e-3);
    benchmark::DoNotOptimize(net.norm.phi_max[0]);
  }
}
BENCHMARK(BM_online_update);

}  // namespace

BENCHMARK_MAIN();
