#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "metanet/error.hpp"
#include "metanet/policies.hpp"
#include "metanet/simcore.hpp"
#include "test_util.hpp"

using namespace metanet;

namespace {

Task make_task(long id, double cpu, double work = 50.0) {
  Task t;
  t.task_id = id;
  t.arrival_interval = 1;
  t.cpu_demand = cpu;
  t.ram_demand = 0.5;
  t.disk_demand = 0.01;
  t.total_work = work;
  t.sla_deadline = 60.0;
  return t;
}

}  // namespace

TEST_CASE("forecast_ar: constant series is a fixed point") {
  std::vector<double> hist(6, 0.5);
  CHECK(forecast_ar(hist, 1) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(forecast_ar(hist, 2) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("forecast_ar: AR(1) matches the closed-form least-squares line") {
  // pairs (0.1->0.2), (0.2->0.3), (0.3->0.4) fit y = 1*x + 0.1 exactly,
  // so the one-step forecast from 0.4 is 0.5.
  std::vector<double> hist{0.1, 0.2, 0.3, 0.4};
  CHECK(forecast_ar(hist, 1) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("forecast_ar: short window falls back to the last value") {
  std::vector<double> hist{0.3, 0.7};
  CHECK(forecast_ar(hist, 3) == doctest::Approx(0.7));
  std::vector<double> empty;
  CHECK(forecast_ar(empty, 2) == 0.0);
}

TEST_CASE("forecast_ar: prediction is clamped to [0,1]") {
  std::vector<double> hist{0.2, 0.45, 0.7, 0.95};
  const double f = forecast_ar(hist, 1);
  CHECK(f >= 0.0);
  CHECK(f <= 1.0);
}

TEST_CASE("ema_forecast: gamma one returns the last value") {
  std::vector<double> hist{0.1, 0.9, 0.4};
  CHECK(ema_forecast(hist, 1.0) == doctest::Approx(0.4));
}

TEST_CASE("ema_forecast: constant series") {
  std::vector<double> hist(5, 0.37);
  CHECK(ema_forecast(hist, 0.3) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("ema_forecast: two-step hand computation") {
  std::vector<double> hist{0.0, 1.0};
  CHECK(ema_forecast(hist, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("ema_forecast: empty history gives zero") {
  std::vector<double> empty;
  CHECK(ema_forecast(empty, 0.5) == 0.0);
}

TEST_CASE("greedy: single empty host takes every task") {
  auto cfg = testutil::small_config();
  cfg.sim.fleet = make_fleet(1, 0, 0);
  SystemState state = initial_state(cfg.sim);
  for (long i = 0; i < 4; ++i) state.tasks.push_back(make_task(i, 0.4));
  auto p = greedy_bestfit(state, cfg.sim.fleet, 0.8);
  REQUIRE(p.assignment.size() == 4);
  for (const auto& [id, host] : p.assignment) CHECK(host == 0);
  auto pc = greedy_cheapest(state, cfg.sim.fleet, 0.8);
  for (const auto& [id, host] : pc.assignment) CHECK(host == 0);
}

TEST_CASE("greedy_cheapest: picks the cheaper of two idle hosts") {
  auto cfg = testutil::small_config();
  cfg.sim.fleet = make_fleet(1, 0, 1);  // price 0.0416 and 0.333
  SystemState state = initial_state(cfg.sim);
  state.tasks.push_back(make_task(0, 1.0));
  auto p = greedy_cheapest(state, cfg.sim.fleet, 0.8);
  CHECK(p.assignment.at(0) == 0);
}

TEST_CASE("greedy_bestfit: agrees with a brute-force headroom ranking") {
  auto cfg = testutil::small_config();
  cfg.sim.fleet = make_fleet(1, 1, 1);
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    SystemState state = initial_state(cfg.sim);
    // seed some placed tasks so hosts are active with uneven headroom
    long id = 0;
    for (int j = 0; j < 3; ++j) {
      const int reps = rng.uniform_int(3);
      for (int r = 0; r < reps; ++r) {
        state.tasks.push_back(make_task(id, rng.uniform(0.2, 1.0)));
        state.placement.assignment[id] = j;
        ++id;
      }
    }
    const double demand = rng.uniform(0.2, 1.2);
    state.tasks.push_back(make_task(id, demand));

    auto p = greedy_bestfit(state, cfg.sim.fleet, 0.8);
    const int got = p.assignment.at(id);

    // oracle: among active hosts where it fits under the cap, max headroom
    std::vector<double> usage(3, 0.0);
    for (const auto& t : state.tasks) {
      auto it = state.placement.assignment.find(t.task_id);
      if (it != state.placement.assignment.end()) usage[it->second] += t.cpu_demand;
    }
    int expect = -1;
    double best_headroom = -1.0;
    for (int j = 0; j < 3; ++j) {
      if (usage[j] <= 0.0) continue;
      const double headroom = cfg.sim.fleet[j].cpu_cores * 0.8 - usage[j];
      if (headroom >= demand && headroom > best_headroom) {
        best_headroom = headroom;
        expect = j;
      }
    }
    if (expect < 0) {
      for (int j = 0; j < 3; ++j) {
        if (usage[j] > 0.0) continue;
        const double headroom = cfg.sim.fleet[j].cpu_cores * 0.8;
        if (headroom >= demand && headroom > best_headroom) {
          best_headroom = headroom;
          expect = j;
        }
      }
    }
    if (expect < 0) {
      double best_util = 1e18;
      for (int j = 0; j < 3; ++j) {
        const double u = usage[j] / cfg.sim.fleet[j].cpu_cores;
        if (u < best_util) {
          best_util = u;
          expect = j;
        }
      }
    }
    CHECK(got == expect);
  }
}

TEST_CASE("aco: prefers the already-active host regardless of seed") {
  auto cfg = testutil::small_config();
  cfg.sim.fleet = make_fleet(2, 0, 0);
  SystemState state = initial_state(cfg.sim);
  state.tasks.push_back(make_task(0, 0.5));
  state.placement.assignment[0] = 1;  // host 1 active
  state.host_states[1].cpu_util = 0.25;
  state.host_states[1].active = true;
  state.tasks.push_back(make_task(1, 0.2));  // to place

  std::vector<double> bias(2, 0.0);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    auto p = aco_place(state, cfg.sim.fleet, bias, cfg.policies.aco,
                       cfg.policies.objective, 0.8, seed);
    // brute force over both candidate hosts
    Placement alt0 = state.placement, alt1 = state.placement;
    alt0.assignment[1] = 0;
    alt1.assignment[1] = 1;
    const double o0 = proxy_objective(alt0, state, cfg.sim.fleet, bias,
                                      cfg.policies.objective);
    const double o1 = proxy_objective(alt1, state, cfg.sim.fleet, bias,
                                      cfg.policies.objective);
    REQUIRE(o1 < o0);  // consolidation wins under the default weights
    CHECK(p.assignment.at(1) == 1);
  }
}

TEST_CASE("aco: degenerate one-ant one-iter budget still yields a full placement") {
  auto cfg = testutil::small_config();
  AcoParams tiny;
  tiny.n_ants = 1;
  tiny.n_iters = 1;
  SystemState state = testutil::decision_state(cfg, 3, 4);
  std::vector<double> bias(cfg.sim.fleet.size(), 0.0);
  auto p = aco_place(state, cfg.sim.fleet, bias, tiny, cfg.policies.objective, 0.8, 5);
  for (const auto& t : state.tasks) CHECK(p.assignment.contains(t.task_id));
}

TEST_CASE("aco: never worse than the greedy baseline it evaluates") {
  auto cfg = testutil::small_config();
  std::vector<double> bias(cfg.sim.fleet.size(), 0.0);
  for (uint64_t seed = 1; seed <= 8; ++seed) {
    SystemState state = testutil::decision_state(cfg, seed, 5);
    auto p = aco_place(state, cfg.sim.fleet, bias, cfg.policies.aco,
                       cfg.policies.objective, 0.8, seed);
    auto greedy = greedy_bestfit(state, cfg.sim.fleet, 0.8);
    const double obj_aco =
        proxy_objective(p, state, cfg.sim.fleet, bias, cfg.policies.objective);
    const double obj_greedy =
        proxy_objective(greedy, state, cfg.sim.fleet, bias, cfg.policies.objective);
    CHECK(obj_aco <= obj_greedy + 1e-12);
  }
}

TEST_CASE("gradient: zero steps returns the initial placement") {
  auto cfg = testutil::small_config();
  SystemState state = testutil::decision_state(cfg, 4, 4);
  const Placement init = greedy_bestfit(state, cfg.sim.fleet, 0.8);
  std::vector<double> bias(cfg.sim.fleet.size(), 0.0);
  auto p = gradient_opt_place(state, cfg.sim.fleet, bias, cfg.policies.objective, init,
                              0, 0.3, true, false, 0.9, 0.999);
  CHECK(p == init);
}

TEST_CASE("gradient: two-task two-host toy converges to the enumerated optimum") {
  auto cfg = testutil::small_config();
  cfg.sim.fleet = make_fleet(2, 0, 0);
  for (int j = 0; j < 2; ++j) cfg.sim.fleet[j].cpu_cores = 1;
  SystemState state = initial_state(cfg.sim);
  state.tasks.push_back(make_task(0, 0.8));
  state.tasks.push_back(make_task(1, 0.4));

  // init: both tasks on host 0; both hosts carry a small forecast bias so
  // the activity term does not wall off the idle host
  Placement init;
  init.assignment[0] = 0;
  init.assignment[1] = 0;
  std::vector<double> bias(2, 0.1);

  double best_obj = 1e18;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Placement p;
      p.assignment[0] = a;
      p.assignment[1] = b;
      best_obj = std::min(
          best_obj,
          proxy_objective(p, state, cfg.sim.fleet, bias, cfg.policies.objective));
    }
  const double init_obj =
      proxy_objective(init, state, cfg.sim.fleet, bias, cfg.policies.objective);
  REQUIRE(best_obj < init_obj);  // spreading the load is strictly better

  for (bool second : {false, true}) {
    auto p = gradient_opt_place(state, cfg.sim.fleet, bias, cfg.policies.objective,
                                init, 300, 0.3, true, second, 0.9, 0.999);
    const double got =
        proxy_objective(p, state, cfg.sim.fleet, bias, cfg.policies.objective);
    CHECK(got == doctest::Approx(best_obj).epsilon(1e-9));
  }
}

TEST_CASE("gradient: discrete objective never worse than the initialization") {
  auto cfg = testutil::small_config();
  std::vector<double> bias(cfg.sim.fleet.size(), 0.0);
  for (uint64_t seed = 10; seed < 20; ++seed) {
    SystemState state = testutil::decision_state(cfg, seed, 5);
    const Placement init = greedy_bestfit(state, cfg.sim.fleet, 0.8);
    for (bool second : {false, true}) {
      auto p = gradient_opt_place(state, cfg.sim.fleet, bias, cfg.policies.objective,
                                  init, 40, 0.3, true, second, 0.9, 0.999);
      const double o_init =
          proxy_objective(init, state, cfg.sim.fleet, bias, cfg.policies.objective);
      const double o_got =
          proxy_objective(p, state, cfg.sim.fleet, bias, cfg.policies.objective);
      CHECK(o_got <= o_init + 1e-12);
    }
  }
}

TEST_CASE("schedule: empty task list keeps an empty placement but charges omega") {
  auto cfg = testutil::small_config();
  SystemState state = initial_state(cfg.sim);
  for (int k = 0; k < cfg.policies.q(); ++k) {
    PolicyContext ctx{&cfg.sim, &cfg.policies, 123};
    auto out = schedule(k, state, ctx);
    CHECK(out.placement.assignment.empty());
    CHECK(out.omega > 0.0);
  }
}

TEST_CASE("schedule: single task and single host forces the assignment everywhere") {
  auto cfg = testutil::small_config();
  cfg.sim.fleet = make_fleet(1, 0, 0);
  SystemState state = initial_state(cfg.sim);
  state.tasks.push_back(make_task(0, 0.7));
  for (int k = 0; k < cfg.policies.q(); ++k) {
    PolicyContext ctx{&cfg.sim, &cfg.policies, 9 + k};
    auto out = schedule(k, state, ctx);
    REQUIRE(out.placement.assignment.size() == 1);
    CHECK(out.placement.assignment.at(0) == 0);
  }
}

TEST_CASE("schedule: deterministic outputs for a fixed state and seed") {
  auto cfg = testutil::small_config();
  for (uint64_t seed : {1u, 2u}) {
    SystemState state = testutil::decision_state(cfg, seed, 4);
    for (int k = 0; k < cfg.policies.q(); ++k) {
      PolicyContext ctx{&cfg.sim, &cfg.policies, derive_seed(seed, "policy", k)};
      auto a = schedule(k, state, ctx);
      auto b = schedule(k, state, ctx);
      CHECK(a.placement == b.placement);
      CHECK(a.omega == b.omega);
    }
  }
}

TEST_CASE("schedule: every policy covers every active task (completeness)") {
  auto cfg = testutil::small_config();
  for (uint64_t seed = 40; seed < 48; ++seed) {
    SystemState state = testutil::decision_state(cfg, seed, 6);
    for (int k = 0; k < cfg.policies.q(); ++k) {
      PolicyContext ctx{&cfg.sim, &cfg.policies, derive_seed(seed, "p", k)};
      auto out = schedule(k, state, ctx);
      for (const auto& t : state.tasks) {
        REQUIRE(out.placement.assignment.contains(t.task_id));
        const int host = out.placement.assignment.at(t.task_id);
        CHECK(host >= 0);
        CHECK(host < static_cast<int>(cfg.sim.fleet.size()));
      }
    }
  }
}

TEST_CASE("schedule: empty fleet is a scheduling error") {
  auto cfg = testutil::small_config();
  cfg.sim.fleet.clear();
  SystemState state;
  PolicyContext ctx{&cfg.sim, &cfg.policies, 1};
  CHECK_THROWS_AS(schedule(0, state, ctx), MetaError);
}

TEST_CASE("schedule: configured omega ordering greedy < aco < gradient < second") {
  auto cfg = testutil::small_config();
  for (uint64_t seed = 60; seed < 66; ++seed) {
    SystemState state = testutil::decision_state(cfg, seed, 5);
    std::map<std::string, double> omega;
    for (int k = 0; k < cfg.policies.q(); ++k) {
      PolicyContext ctx{&cfg.sim, &cfg.policies, derive_seed(seed, "w", k)};
      omega[cfg.policies.roster[k]] = schedule(k, state, ctx).omega;
    }
    CHECK(omega["bestfit"] < omega["ar_aco"]);
    CHECK(omega["bestfit"] < omega["ema_aco"]);
    CHECK(omega["cheapest"] < omega["ar_aco"]);
    CHECK(omega["ar_aco"] < omega["gradient"]);
    CHECK(omega["ema_aco"] < omega["gradient"]);
    CHECK(omega["gradient"] < omega["second_order"]);
  }
}

TEST_CASE("schedule: no-migration mode keeps existing assignments fixed") {
  auto cfg = testutil::small_config();
  cfg.sim.migration.allow = false;
  for (uint64_t seed = 70; seed < 74; ++seed) {
    SystemState state = testutil::decision_state(cfg, seed, 6);
    for (int k = 0; k < cfg.policies.q(); ++k) {
      PolicyContext ctx{&cfg.sim, &cfg.policies, derive_seed(seed, "m", k)};
      auto out = schedule(k, state, ctx);
      for (const auto& [id, host] : state.placement.assignment)
        CHECK(out.placement.assignment.at(id) == host);
    }
  }
}
