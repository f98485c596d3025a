#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace metanet {

enum class VmClass { SmallVM, MediumVM, LargeVM };

const char* to_string(VmClass c);
VmClass vm_class_from_string(const std::string& s);

struct HostSpec {
  int host_id = 0;
  VmClass vm_class = VmClass::SmallVM;
  int cpu_cores = 2;
  double ram_gb = 4.0;
  double price_per_hour = 0.0416;  // USD/h
  double power_idle = 75.0;        // W
  double power_peak = 150.0;       // W
};

struct HostState {
  double cpu_util = 0.0;
  double ram_util = 0.0;
  double disk_util = 0.0;
  bool active = false;  // invariant: active == (cpu_util > 0)
};

struct AppProfile {
  std::string name;
  std::array<double, 2> cpu_demand{0.5, 1.0};   // cores, uniform range
  std::array<double, 2> total_work{10.0, 20.0}; // core-seconds
  std::array<double, 2> ram_demand{0.5, 1.0};   // GB
  std::array<double, 2> disk_demand{0.01, 0.03};
  double sla_deadline = 30.0;  // seconds from arrival
};

struct Task {
  long task_id = 0;
  int app_type = 0;          // index into the 7 app profiles
  int arrival_interval = 0;  // 1-based interval of arrival
  double cpu_demand = 0.0;   // cores requested while running
  double ram_demand = 0.0;
  double disk_demand = 0.0;
  double total_work = 0.0;   // core-seconds
  double work_done = 0.0;
  double sla_deadline = 0.0;
};

struct Placement {
  std::map<long, int> assignment;  // task_id -> host_id

  bool operator==(const Placement&) const = default;
};

// Full simulator state carried across intervals. Host states and histories
// reflect what was observed while executing the previous interval; at t=0
// everything is zero.
struct SystemState {
  int interval = 0;
  long next_task_id = 0;
  std::vector<Task> tasks;  // active tasks, including not-yet-placed arrivals
  std::vector<HostState> host_states;
  Placement placement;
  std::vector<std::vector<double>> histories;  // per host, length = history window
};

struct IntervalMetrics {
  double exec_cost = 0.0;       // USD, sum of active-host billing
  double sched_cost = 0.0;      // USD, serverless charges for policy + selector
  double total_cost = 0.0;      // exec + sched
  double amortized_cost = 0.0;  // total / max(1, completed)
  double energy = 0.0;          // kWh
  int completed = 0;
  std::vector<double> response_times;  // seconds, one per completion
  int sla_violations = 0;
  double mean_cpu_util = 0.0;  // over active hosts during the interval
  int selected_policy = 0;
  double omega = 0.0;  // policy scheduling overhead, virtual seconds

  double response_time_mean() const {
    if (response_times.empty()) return 0.0;
    double s = 0.0;
    for (double r : response_times) s += r;
    return s / static_cast<double>(response_times.size());
  }
};

// The (W, H, S) encoding of a state: W has one row per active task, H one
// row per host, S the placement, plus the per-host utilization histories
// the forecasting policies consume.
struct EncodedState {
  std::vector<std::array<double, 3>> W;  // rows parallel to task_ids
  std::vector<long> task_ids;
  std::vector<std::array<double, 3>> H;
  Placement S;
  std::vector<std::vector<double>> histories;
};

}  // namespace metanet
