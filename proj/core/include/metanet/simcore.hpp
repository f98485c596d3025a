#pragma once

#include "metanet/config.hpp"
#include "metanet/rng.hpp"
#include "metanet/types.hpp"

namespace metanet {

SystemState initial_state(const SimConfig& cfg);

// Poisson(lambda) new tasks for the given interval, app types sampled from
// the configured profile mix, demands drawn from per-profile ranges.
std::vector<Task> spawn_tasks(Rng& rng, int interval, const SimConfig& cfg,
                              long& next_task_id);

// Billing while active, prorated per second of the interval.
double host_cost(const HostSpec& spec, const HostState& state, double delta_seconds);

// FaaS-style linear billing for a scheduler run of `omega` seconds.
double serverless_cost(double omega, const FaasConfig& faas);

// Linear power model over active hosts, in kWh.
double energy_kwh(const std::vector<HostSpec>& fleet,
                  const std::vector<HostState>& states, double delta_seconds);

EncodedState encode_state(const SystemState& state, const std::vector<HostSpec>& fleet);

// What one interval is charged for: the chosen policy's overhead plus the
// selector's own inference overhead, hosted on `runner_host`.
struct ScheduleCharge {
  int policy = 0;
  double policy_omega = 0.0;
  double selector_omega = 0.0;
  int runner_host = -1;
};

struct StepDetail {
  std::vector<HostState> during;  // utilization observed while executing
  std::vector<long> completed_ids;
  int migrations = 0;
};

// Advances the state by one interval of delta_seconds virtual time under
// `placement`. CPU shares are fixed at interval start and shared
// proportionally to demand when a host is oversubscribed.
IntervalMetrics step_interval(SystemState& state, const Placement& placement,
                              const ScheduleCharge& charge, const SimConfig& cfg,
                              StepDetail* detail = nullptr);

}  // namespace metanet
