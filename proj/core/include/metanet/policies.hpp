#pragma once

#include <span>
#include <string>
#include <vector>

#include "metanet/config.hpp"
#include "metanet/types.hpp"

namespace metanet {

struct PolicyOutput {
  Placement placement;
  double omega = 0.0;  // virtual seconds: counted ops x per-policy scale
};

struct PolicyContext {
  const SimConfig* sim = nullptr;
  const PolicySetConfig* cfg = nullptr;
  uint64_t seed = 0;
};

// Dispatches to the roster entry `policy` (index into cfg->roster). Every
// policy returns a complete placement over the active tasks, deterministic
// given (state, seed). Throws ErrorKind::Scheduling on an empty fleet.
PolicyOutput schedule(int policy, const SystemState& state, const PolicyContext& ctx);

// AR(p) least-squares one-step forecast, clamped to [0,1]; falls back to the
// last observation when the window is shorter than p+1.
double forecast_ar(std::span<const double> history, int order);

// Exponential moving average with smoothing gamma in (0,1]; 0 when empty.
double ema_forecast(std::span<const double> history, double gamma);

// Shared proxy objective for the search policies: w_util * peak effective
// utilization + w_hosts * active host count + w_migration * moved tasks.
double proxy_objective(const Placement& placement, const SystemState& state,
                       const std::vector<HostSpec>& fleet,
                       std::span<const double> forecast_bias,
                       const ObjectiveWeights& weights);

// Individual strategies, exposed for direct testing. All return complete
// placements (previous assignments preserved unless the policy migrates).
Placement greedy_bestfit(const SystemState& state, const std::vector<HostSpec>& fleet,
                         double util_cap);
Placement greedy_cheapest(const SystemState& state, const std::vector<HostSpec>& fleet,
                          double util_cap);
Placement aco_place(const SystemState& state, const std::vector<HostSpec>& fleet,
                    std::span<const double> forecast_bias, const AcoParams& params,
                    const ObjectiveWeights& weights, double util_cap, uint64_t seed,
                    long* op_count = nullptr);
Placement local_search_place(const SystemState& state, const std::vector<HostSpec>& fleet,
                             std::span<const double> forecast_bias,
                             const ObjectiveWeights& weights, double util_cap,
                             int restarts, int iters, bool allow_migration,
                             uint64_t seed, long* op_count = nullptr);
Placement gradient_opt_place(const SystemState& state, const std::vector<HostSpec>& fleet,
                             std::span<const double> forecast_bias,
                             const ObjectiveWeights& weights, const Placement& init,
                             int steps, double lr, bool allow_migration,
                             bool second_order, double beta1, double beta2,
                             long* op_count = nullptr);

}  // namespace metanet
