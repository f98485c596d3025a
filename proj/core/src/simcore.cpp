#include "metanet/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "metanet/error.hpp"

namespace metanet {

SystemState initial_state(const SimConfig& cfg) {
  SystemState s;
  s.host_states.resize(cfg.fleet.size());
  s.histories.assign(cfg.fleet.size(),
                     std::vector<double>(cfg.history_window, 0.0));
  return s;
}

std::vector<Task> spawn_tasks(Rng& rng, int interval, const SimConfig& cfg,
                              long& next_task_id) {
  const double lambda = cfg.lambda_at(interval);
  const int count = rng.poisson(lambda);
  const auto* weights = cfg.weights_at(interval);
  const int n_profiles = static_cast<int>(cfg.app_profiles.size());

  std::vector<Task> tasks;
  tasks.reserve(count);
  for (int i = 0; i < count; ++i) {
    int app;
    if (weights != nullptr) {
      double total = 0.0;
      for (double w : *weights) total += w;
      double u = rng.u01() * total;
      app = n_profiles - 1;
      double acc = 0.0;
      for (int k = 0; k < n_profiles && k < static_cast<int>(weights->size()); ++k) {
        acc += (*weights)[k];
        if (u < acc) { app = k; break; }
      }
    } else {
      app = rng.uniform_int(n_profiles);
    }
    const AppProfile& p = cfg.app_profiles[app];
    Task t;
    t.task_id = next_task_id++;
    t.app_type = app;
    t.arrival_interval = interval;
    t.cpu_demand = rng.uniform(p.cpu_demand[0], p.cpu_demand[1]);
    t.ram_demand = rng.uniform(p.ram_demand[0], p.ram_demand[1]);
    t.disk_demand = rng.uniform(p.disk_demand[0], p.disk_demand[1]);
    t.total_work = rng.uniform(p.total_work[0], p.total_work[1]);
    t.sla_deadline = p.sla_deadline;
    tasks.push_back(t);
  }
  return tasks;
}

double host_cost(const HostSpec& spec, const HostState& state, double delta_seconds) {
  if (!state.active) return 0.0;
  return spec.price_per_hour * delta_seconds / 3600.0;
}

double serverless_cost(double omega, const FaasConfig& faas) {
  if (omega < 0.0)
    throw MetaError(ErrorKind::Argument, "serverless_cost: omega must be >= 0");
  return omega * faas.mem_gb * faas.price_per_gb_second + faas.per_invocation_fee;
}

double energy_kwh(const std::vector<HostSpec>& fleet,
                  const std::vector<HostState>& states, double delta_seconds) {
  double joules = 0.0;
  for (size_t i = 0; i < fleet.size() && i < states.size(); ++i) {
    if (!states[i].active) continue;
    const double watts = fleet[i].power_idle +
                         (fleet[i].power_peak - fleet[i].power_idle) * states[i].cpu_util;
    joules += watts * delta_seconds;
  }
  return joules / 3.6e6;
}

static double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

EncodedState encode_state(const SystemState& state, const std::vector<HostSpec>& fleet) {
  EncodedState enc;
  enc.H.resize(fleet.size());
  for (size_t i = 0; i < fleet.size(); ++i) {
    const HostState& hs = state.host_states[i];
    enc.H[i] = {hs.cpu_util, hs.ram_util, hs.disk_util};
  }

  double max_cores = 1.0, max_ram = 1.0;
  for (const auto& h : fleet) {
    max_cores = std::max(max_cores, static_cast<double>(h.cpu_cores));
    max_ram = std::max(max_ram, h.ram_gb);
  }

  enc.W.reserve(state.tasks.size());
  enc.task_ids.reserve(state.tasks.size());
  for (const Task& t : state.tasks) {
    auto it = state.placement.assignment.find(t.task_id);
    double cores = max_cores, ram = max_ram;
    if (it != state.placement.assignment.end()) {
      const HostSpec& h = fleet[it->second];
      cores = h.cpu_cores;
      ram = h.ram_gb;
    }
    enc.W.push_back({clamp01(t.cpu_demand / cores), clamp01(t.ram_demand / ram),
                     clamp01(t.disk_demand)});
    enc.task_ids.push_back(t.task_id);
  }
  enc.S = state.placement;
  enc.histories = state.histories;
  return enc;
}

IntervalMetrics step_interval(SystemState& state, const Placement& placement,
                              const ScheduleCharge& charge, const SimConfig& cfg,
                              StepDetail* detail) {
  const auto& fleet = cfg.fleet;
  const double delta = cfg.delta_seconds;
  const int t = state.interval + 1;

  for (const auto& [task_id, host_id] : placement.assignment)
    if (host_id < 0 || host_id >= static_cast<int>(fleet.size()))
      throw MetaError(ErrorKind::PlacementIncomplete,
                      "placement names unknown host " + std::to_string(host_id));
  for (const Task& task : state.tasks)
    if (!placement.assignment.contains(task.task_id))
      throw MetaError(ErrorKind::PlacementIncomplete,
                      "task " + std::to_string(task.task_id) + " left unassigned");

  // Migration friction: a moved task makes no progress this interval but
  // still occupies its new host.
  std::set<long> paused;
  int migrations = 0;
  for (const Task& task : state.tasks) {
    auto prev = state.placement.assignment.find(task.task_id);
    if (prev == state.placement.assignment.end()) continue;
    if (placement.assignment.at(task.task_id) != prev->second) {
      ++migrations;
      if (cfg.migration.pause_intervals > 0) paused.insert(task.task_id);
    }
  }

  const size_t n_hosts = fleet.size();
  std::vector<double> cpu_sum(n_hosts, 0.0), ram_sum(n_hosts, 0.0), disk_sum(n_hosts, 0.0);
  for (const Task& task : state.tasks) {
    const int h = placement.assignment.at(task.task_id);
    cpu_sum[h] += task.cpu_demand;
    ram_sum[h] += task.ram_demand;
    disk_sum[h] += task.disk_demand;
  }

  // CPU shares fixed at interval start; proportional when oversubscribed.
  std::vector<double> share(n_hosts, 1.0);
  for (size_t i = 0; i < n_hosts; ++i)
    if (cpu_sum[i] > fleet[i].cpu_cores) share[i] = fleet[i].cpu_cores / cpu_sum[i];

  std::vector<HostState> during(n_hosts);
  for (size_t i = 0; i < n_hosts; ++i) {
    during[i].cpu_util = clamp01(cpu_sum[i] / fleet[i].cpu_cores);
    during[i].ram_util = clamp01(ram_sum[i] / fleet[i].ram_gb);
    during[i].disk_util = clamp01(disk_sum[i]);
  }
  if (charge.selector_omega > 0.0 && charge.runner_host >= 0 &&
      charge.runner_host < static_cast<int>(n_hosts)) {
    const double bump =
        charge.selector_omega / (delta * fleet[charge.runner_host].cpu_cores);
    during[charge.runner_host].cpu_util =
        clamp01(during[charge.runner_host].cpu_util + bump);
  }
  for (auto& hs : during) hs.active = hs.cpu_util > 0.0;

  IntervalMetrics m;
  m.selected_policy = charge.policy;
  m.omega = charge.policy_omega;

  std::vector<Task> remaining;
  std::vector<long> completed_ids;
  remaining.reserve(state.tasks.size());
  for (Task task : state.tasks) {
    const int h = placement.assignment.at(task.task_id);
    const double rate = paused.contains(task.task_id)
                            ? 0.0
                            : task.cpu_demand * share[h];
    const double needed = task.total_work - task.work_done;
    if (rate > 0.0 && needed <= rate * delta) {
      const double finish = (t - 1) * delta + needed / rate;
      const double response = finish - (task.arrival_interval - 1) * delta;
      m.response_times.push_back(response);
      ++m.completed;
      if (response > task.sla_deadline) ++m.sla_violations;
      completed_ids.push_back(task.task_id);
    } else {
      task.work_done += rate * delta;
      remaining.push_back(task);
    }
  }

  m.exec_cost = 0.0;
  for (size_t i = 0; i < n_hosts; ++i) m.exec_cost += host_cost(fleet[i], during[i], delta);
  m.sched_cost = serverless_cost(charge.policy_omega, cfg.faas);
  if (charge.selector_omega > 0.0)
    m.sched_cost += serverless_cost(charge.selector_omega, cfg.faas);
  m.total_cost = m.exec_cost + m.sched_cost;
  m.amortized_cost = m.total_cost / std::max(1, m.completed);
  m.energy = energy_kwh(fleet, during, delta);

  int active = 0;
  double util_sum = 0.0;
  for (const auto& hs : during) {
    if (!hs.active) continue;
    ++active;
    util_sum += hs.cpu_util;
  }
  m.mean_cpu_util = active > 0 ? util_sum / active : 0.0;

  // End-of-interval state: aggregates of the tasks that are still running.
  std::vector<double> cpu_end(n_hosts, 0.0), ram_end(n_hosts, 0.0), disk_end(n_hosts, 0.0);
  Placement next_placement;
  for (const Task& task : remaining) {
    const int h = placement.assignment.at(task.task_id);
    next_placement.assignment[task.task_id] = h;
    cpu_end[h] += task.cpu_demand;
    ram_end[h] += task.ram_demand;
    disk_end[h] += task.disk_demand;
  }
  for (size_t i = 0; i < n_hosts; ++i) {
    HostState& hs = state.host_states[i];
    hs.cpu_util = clamp01(cpu_end[i] / fleet[i].cpu_cores);
    hs.ram_util = clamp01(ram_end[i] / fleet[i].ram_gb);
    hs.disk_util = clamp01(disk_end[i]);
    hs.active = hs.cpu_util > 0.0;

    auto& hist = state.histories[i];
    hist.erase(hist.begin());
    hist.push_back(during[i].cpu_util);
  }

  state.tasks = std::move(remaining);
  state.placement = std::move(next_placement);
  state.interval = t;

  if (detail != nullptr) {
    detail->during = std::move(during);
    detail->completed_ids = std::move(completed_ids);
    detail->migrations = migrations;
  }
  return m;
}

}  // namespace metanet
