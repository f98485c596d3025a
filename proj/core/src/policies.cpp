#include "metanet/policies.hpp"

#include <algorithm>
#include <cmath>

#include "metanet/error.hpp"
#include "metanet/rng.hpp"

namespace metanet {

double ema_forecast(std::span<const double> history, double gamma) {
  if (gamma <= 0.0 || gamma > 1.0)
    throw MetaError(ErrorKind::Argument, "ema gamma must be in (0,1]");
  if (history.empty()) return 0.0;
  double s = history[0];
  for (size_t i = 1; i < history.size(); ++i) s = gamma * history[i] + (1.0 - gamma) * s;
  return s;
}

double forecast_ar(std::span<const double> history, int order) {
  if (order < 1) throw MetaError(ErrorKind::Argument, "ar order must be >= 1");
  const int len = static_cast<int>(history.size());
  if (len == 0) return 0.0;
  const double last = history[len - 1];
  if (len < order + 1) return std::clamp(last, 0.0, 1.0);

  // Least-squares fit of x_t on (x_{t-1}..x_{t-p}, 1) via normal equations.
  const int dim = order + 1;
  std::vector<double> ata(static_cast<size_t>(dim) * dim, 0.0);
  std::vector<double> atb(dim, 0.0);
  for (int t = order; t < len; ++t) {
    std::vector<double> row(dim);
    for (int j = 0; j < order; ++j) row[j] = history[t - 1 - j];
    row[order] = 1.0;
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b) ata[a * dim + b] += row[a] * row[b];
      atb[a] += row[a] * history[t];
    }
  }

  // Gaussian elimination with partial pivoting; a singular system (e.g. a
  // constant series) falls back to the last observation.
  std::vector<double> m = ata, rhs = atb;
  for (int col = 0; col < dim; ++col) {
    int pivot = col;
    for (int r = col + 1; r < dim; ++r)
      if (std::abs(m[r * dim + col]) > std::abs(m[pivot * dim + col])) pivot = r;
    if (std::abs(m[pivot * dim + col]) < 1e-10) return std::clamp(last, 0.0, 1.0);
    if (pivot != col) {
      for (int c = 0; c < dim; ++c) std::swap(m[col * dim + c], m[pivot * dim + c]);
      std::swap(rhs[col], rhs[pivot]);
    }
    for (int r = col + 1; r < dim; ++r) {
      const double f = m[r * dim + col] / m[col * dim + col];
      for (int c = col; c < dim; ++c) m[r * dim + c] -= f * m[col * dim + c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> coef(dim);
  for (int r = dim - 1; r >= 0; --r) {
    double v = rhs[r];
    for (int c = r + 1; c < dim; ++c) v -= m[r * dim + c] * coef[c];
    coef[r] = v / m[r * dim + r];
  }

  double pred = coef[order];
  for (int j = 0; j < order; ++j) pred += coef[j] * history[len - 1 - j];
  return std::clamp(pred, 0.0, 1.0);
}

namespace {

struct TaskRef {
  long id;
  double cpu, ram, disk;
};

std::vector<TaskRef> task_refs(const SystemState& state) {
  std::vector<TaskRef> refs;
  refs.reserve(state.tasks.size());
  for (const Task& t : state.tasks)
    refs.push_back({t.task_id, t.cpu_demand, t.ram_demand, t.disk_demand});
  return refs;
}

std::vector<long> unassigned_ids(const SystemState& state) {
  std::vector<long> ids;
  for (const Task& t : state.tasks)
    if (!state.placement.assignment.contains(t.task_id)) ids.push_back(t.task_id);
  return ids;
}

const Task& task_by_id(const SystemState& state, long id) {
  for (const Task& t : state.tasks)
    if (t.task_id == id) return t;
  throw MetaError(ErrorKind::Argument, "unknown task id");
}

std::vector<double> host_cpu_usage(const Placement& placement, const SystemState& state,
                                   size_t n_hosts) {
  std::vector<double> usage(n_hosts, 0.0);
  for (const Task& t : state.tasks) {
    auto it = placement.assignment.find(t.task_id);
    if (it != placement.assignment.end()) usage[it->second] += t.cpu_demand;
  }
  return usage;
}

}  // namespace

double proxy_objective(const Placement& placement, const SystemState& state,
                       const std::vector<HostSpec>& fleet,
                       std::span<const double> forecast_bias,
                       const ObjectiveWeights& weights) {
  const size_t n = fleet.size();
  std::vector<double> loads(n, 0.0);
  for (size_t j = 0; j < n; ++j)
    loads[j] = j < forecast_bias.size() ? forecast_bias[j] : 0.0;
  for (const Task& t : state.tasks) {
    auto it = placement.assignment.find(t.task_id);
    if (it == placement.assignment.end()) continue;
    loads[it->second] += t.cpu_demand / fleet[it->second].cpu_cores;
  }
  double peak = 0.0;
  int active = 0;
  for (double l : loads) {
    peak = std::max(peak, l);
    if (l > 1e-12) ++active;
  }
  int migrations = 0;
  for (const auto& [id, host] : state.placement.assignment) {
    auto it = placement.assignment.find(id);
    if (it != placement.assignment.end() && it->second != host) ++migrations;
  }
  return weights.w_util * peak + weights.w_hosts * active +
         weights.w_migration * migrations;
}

Placement greedy_bestfit(const SystemState& state, const std::vector<HostSpec>& fleet,
                         double util_cap) {
  const size_t n = fleet.size();
  Placement out = state.placement;
  std::vector<double> usage = host_cpu_usage(out, state, n);

  for (long id : unassigned_ids(state)) {
    const Task& t = task_by_id(state, id);
    int pick = -1;
    double best_headroom = -1.0;
    // active host with the most remaining headroom under the cap
    for (size_t j = 0; j < n; ++j) {
      if (usage[j] <= 0.0) continue;
      const double headroom = fleet[j].cpu_cores * util_cap - usage[j];
      if (headroom >= t.cpu_demand && headroom > best_headroom) {
        best_headroom = headroom;
        pick = static_cast<int>(j);
      }
    }
    if (pick < 0) {
      // open the idle host with the most capacity that fits
      for (size_t j = 0; j < n; ++j) {
        if (usage[j] > 0.0) continue;
        const double headroom = fleet[j].cpu_cores * util_cap;
        if (headroom >= t.cpu_demand && headroom > best_headroom) {
          best_headroom = headroom;
          pick = static_cast<int>(j);
        }
      }
    }
    if (pick < 0) {
      // oversubscribe the least-loaded host
      double best_util = std::numeric_limits<double>::infinity();
      for (size_t j = 0; j < n; ++j) {
        const double u = usage[j] / fleet[j].cpu_cores;
        if (u < best_util) {
          best_util = u;
          pick = static_cast<int>(j);
        }
      }
    }
    out.assignment[id] = pick;
    usage[pick] += t.cpu_demand;
  }
  return out;
}

Placement greedy_cheapest(const SystemState& state, const std::vector<HostSpec>& fleet,
                          double util_cap) {
  const size_t n = fleet.size();
  Placement out = state.placement;
  std::vector<double> usage = host_cpu_usage(out, state, n);

  for (long id : unassigned_ids(state)) {
    const Task& t = task_by_id(state, id);
    int pick = -1;
    double best_price = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < n; ++j) {
      const double headroom = fleet[j].cpu_cores * util_cap - usage[j];
      if (headroom >= t.cpu_demand && fleet[j].price_per_hour < best_price) {
        best_price = fleet[j].price_per_hour;
        pick = static_cast<int>(j);
      }
    }
    if (pick < 0) {
      double best_util = std::numeric_limits<double>::infinity();
      for (size_t j = 0; j < n; ++j) {
        const double u = usage[j] / fleet[j].cpu_cores;
        if (u < best_util) {
          best_util = u;
          pick = static_cast<int>(j);
        }
      }
    }
    out.assignment[id] = pick;
    usage[pick] += t.cpu_demand;
  }
  return out;
}

Placement aco_place(const SystemState& state, const std::vector<HostSpec>& fleet,
                    std::span<const double> forecast_bias, const AcoParams& params,
                    const ObjectiveWeights& weights, double util_cap, uint64_t seed,
                    long* op_count) {
  const size_t n = fleet.size();
  const std::vector<long> movable = unassigned_ids(state);
  long ops = 0;

  // Best-so-far is seeded with the greedy completion, so the returned
  // placement is never worse than any solution evaluated.
  Placement best = greedy_bestfit(state, fleet, util_cap);
  double best_obj = proxy_objective(best, state, fleet, forecast_bias, weights);
  ops += static_cast<long>(n);

  Rng rng(seed);
  std::vector<std::vector<double>> tau(movable.size(), std::vector<double>(n, 1.0));

  for (int iter = 0; iter < params.n_iters; ++iter) {
    Placement iter_best;
    double iter_best_obj = std::numeric_limits<double>::infinity();
    for (int ant = 0; ant < params.n_ants; ++ant) {
      Placement cand = state.placement;
      std::vector<double> usage = host_cpu_usage(cand, state, n);
      ops += static_cast<long>(n);
      for (size_t m = 0; m < movable.size(); ++m) {
        const Task& t = task_by_id(state, movable[m]);
        std::vector<double> prob(n, 0.0);
        double total = 0.0;
        for (size_t j = 0; j < n; ++j) {
          const double load_after =
              (j < forecast_bias.size() ? forecast_bias[j] : 0.0) +
              (usage[j] + t.cpu_demand) / fleet[j].cpu_cores;
          const double eta =
              1.0 / (0.1 + load_after + (usage[j] <= 0.0 ? 0.3 : 0.0));
          prob[j] = std::pow(tau[m][j], params.alpha) * std::pow(eta, params.beta);
          total += prob[j];
          ++ops;
        }
        double u = rng.u01() * total;
        size_t pick = n - 1;
        double acc = 0.0;
        for (size_t j = 0; j < n; ++j) {
          acc += prob[j];
          if (u < acc) { pick = j; break; }
        }
        cand.assignment[movable[m]] = static_cast<int>(pick);
        usage[pick] += t.cpu_demand;
      }
      const double obj = proxy_objective(cand, state, fleet, forecast_bias, weights);
      if (obj < iter_best_obj) {
        iter_best_obj = obj;
        iter_best = cand;
      }
      if (obj < best_obj) {
        best_obj = obj;
        best = cand;
      }
    }
    for (size_t m = 0; m < movable.size(); ++m) {
      for (size_t j = 0; j < n; ++j) tau[m][j] *= (1.0 - params.evaporation);
      auto it = iter_best.assignment.find(movable[m]);
      if (it != iter_best.assignment.end())
        tau[m][it->second] += 1.0 / (1.0 + iter_best_obj);
    }
  }
  if (op_count != nullptr) *op_count += ops;
  return best;
}

Placement local_search_place(const SystemState& state, const std::vector<HostSpec>& fleet,
                             std::span<const double> forecast_bias,
                             const ObjectiveWeights& weights, double util_cap,
                             int restarts, int iters, bool allow_migration,
                             uint64_t seed, long* op_count) {
  const size_t n = fleet.size();
  std::vector<long> movable = unassigned_ids(state);
  if (allow_migration)
    for (const auto& [id, host] : state.placement.assignment) movable.push_back(id);
  long ops = 0;

  const Placement start0 = greedy_bestfit(state, fleet, util_cap);
  Placement best = start0;
  double best_obj = proxy_objective(best, state, fleet, forecast_bias, weights);
  ops += static_cast<long>(n);

  Rng rng(seed);
  for (int r = 0; r < restarts; ++r) {
    Placement cur = start0;
    if (r > 0)
      for (long id : movable)
        cur.assignment[id] = rng.uniform_int(static_cast<int>(n));
    double cur_obj = proxy_objective(cur, state, fleet, forecast_bias, weights);
    ops += static_cast<long>(n);
    if (cur_obj < best_obj) {
      best_obj = cur_obj;
      best = cur;
    }
    if (movable.empty()) continue;
    for (int it = 0; it < iters; ++it) {
      const long id = movable[rng.uniform_int(static_cast<int>(movable.size()))];
      const int new_host = rng.uniform_int(static_cast<int>(n));
      Placement cand = cur;
      cand.assignment[id] = new_host;
      const double obj = proxy_objective(cand, state, fleet, forecast_bias, weights);
      ops += static_cast<long>(n);
      if (obj < cur_obj) {
        cur = std::move(cand);
        cur_obj = obj;
        if (cur_obj < best_obj) {
          best_obj = cur_obj;
          best = cur;
        }
      }
    }
  }
  if (op_count != nullptr) *op_count += ops;
  return best;
}

Placement gradient_opt_place(const SystemState& state, const std::vector<HostSpec>& fleet,
                             std::span<const double> forecast_bias,
                             const ObjectiveWeights& weights, const Placement& init,
                             int steps, double lr, bool allow_migration,
                             bool second_order, double beta1, double beta2,
                             long* op_count) {
  const size_t n = fleet.size();
  long ops = static_cast<long>(n);

  std::vector<long> rows;
  for (const Task& t : state.tasks) {
    const bool existing = state.placement.assignment.contains(t.task_id);
    if (!existing || allow_migration) rows.push_back(t.task_id);
  }
  if (steps <= 0 || rows.empty()) {
    if (op_count != nullptr) *op_count += ops;
    return init;
  }

  // Fixed contribution of the rows this policy may not move.
  std::vector<double> load0(n, 0.0);
  for (size_t j = 0; j < n; ++j)
    load0[j] = j < forecast_bias.size() ? forecast_bias[j] : 0.0;
  for (const Task& t : state.tasks) {
    if (std::find(rows.begin(), rows.end(), t.task_id) != rows.end()) continue;
    auto it = init.assignment.find(t.task_id);
    if (it != init.assignment.end())
      load0[it->second] += t.cpu_demand / fleet[it->second].cpu_cores;
  }

  std::vector<double> demand(rows.size());
  std::vector<int> prev_host(rows.size(), -1);
  for (size_t i = 0; i < rows.size(); ++i) {
    demand[i] = task_by_id(state, rows[i]).cpu_demand;
    auto it = state.placement.assignment.find(rows[i]);
    if (it != state.placement.assignment.end()) prev_host[i] = it->second;
  }

  const double kPeak = 8.0;    // smooth-max sharpness
  const double kActive = 6.0;  // active-host sigmoid slope, gentle enough to descend
  const double kTheta = 0.0;

  const size_t cells = rows.size() * n;
  std::vector<double> z(cells, 0.0);
  for (size_t i = 0; i < rows.size(); ++i) {
    auto it = init.assignment.find(rows[i]);
    if (it != init.assignment.end()) z[i * n + it->second] = 1.0;
  }

  std::vector<double> m1(cells, 0.0), m2(cells, 0.0);
  std::vector<double> a(cells), dA(cells), dZ(cells), loads(n);

  for (int step = 0; step < steps; ++step) {
    for (size_t i = 0; i < rows.size(); ++i) {
      double zmax = -std::numeric_limits<double>::infinity();
      for (size_t j = 0; j < n; ++j) zmax = std::max(zmax, z[i * n + j]);
      double sum = 0.0;
      for (size_t j = 0; j < n; ++j) {
        a[i * n + j] = std::exp(z[i * n + j] - zmax);
        sum += a[i * n + j];
      }
      for (size_t j = 0; j < n; ++j) a[i * n + j] /= sum;
    }
    for (size_t j = 0; j < n; ++j) loads[j] = load0[j];
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t j = 0; j < n; ++j)
        loads[j] += a[i * n + j] * demand[i] / fleet[j].cpu_cores;

    double lmax = -std::numeric_limits<double>::infinity();
    for (double l : loads) lmax = std::max(lmax, l);
    double expsum = 0.0;
    std::vector<double> sm(n);
    for (size_t j = 0; j < n; ++j) {
      sm[j] = std::exp(kPeak * (loads[j] - lmax));
      expsum += sm[j];
    }
    for (size_t j = 0; j < n; ++j) sm[j] /= expsum;

    std::vector<double> dload(n);
    for (size_t j = 0; j < n; ++j) {
      const double sig = 1.0 / (1.0 + std::exp(-kActive * (loads[j] - kTheta)));
      dload[j] = weights.w_util * sm[j] +
                 weights.w_hosts * kActive * sig * (1.0 - sig);
    }

    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t j = 0; j < n; ++j) {
        double g = dload[j] * demand[i] / fleet[j].cpu_cores;
        if (static_cast<int>(j) == prev_host[i]) g -= weights.w_migration;
        dA[i * n + j] = g;
        ++ops;
      }

    // softmax jacobian per row
    for (size_t i = 0; i < rows.size(); ++i) {
      double dot = 0.0;
      for (size_t j = 0; j < n; ++j) dot += dA[i * n + j] * a[i * n + j];
      for (size_t j = 0; j < n; ++j)
        dZ[i * n + j] = a[i * n + j] * (dA[i * n + j] - dot);
    }

    for (size_t c = 0; c < cells; ++c) {
      if (!std::isfinite(dZ[c]))
        throw MetaError(ErrorKind::Optimization, "non-finite placement gradient");
      if (second_order) {
        m1[c] = beta1 * m1[c] + (1.0 - beta1) * dZ[c];
        m2[c] = beta2 * m2[c] + (1.0 - beta2) * dZ[c] * dZ[c];
        z[c] -= lr * m1[c] / (std::sqrt(m2[c]) + 1e-8);
      } else {
        z[c] -= lr * dZ[c];
      }
    }
  }

  Placement cand = init;
  for (size_t i = 0; i < rows.size(); ++i) {
    size_t pick = 0;
    for (size_t j = 1; j < n; ++j)
      if (z[i * n + j] > z[i * n + pick]) pick = j;
    cand.assignment[rows[i]] = static_cast<int>(pick);
  }
  if (op_count != nullptr) *op_count += ops;

  const double cand_obj = proxy_objective(cand, state, fleet, forecast_bias, weights);
  const double init_obj = proxy_objective(init, state, fleet, forecast_bias, weights);
  return cand_obj <= init_obj ? cand : init;
}

PolicyOutput schedule(int policy, const SystemState& state, const PolicyContext& ctx) {
  const auto& fleet = ctx.sim->fleet;
  const auto& cfg = *ctx.cfg;
  if (fleet.empty())
    throw MetaError(ErrorKind::Scheduling, "cannot schedule on an empty fleet");
  if (policy < 0 || policy >= cfg.q())
    throw MetaError(ErrorKind::Argument, "policy index outside the roster");
  for (const auto& [id, host] : state.placement.assignment)
    if (host < 0 || host >= static_cast<int>(fleet.size()))
      throw MetaError(ErrorKind::Scheduling, "state placement names unknown host");

  const std::string& name = cfg.roster[policy];
  const size_t n = fleet.size();
  const size_t unplaced = unassigned_ids(state).size();
  const bool migrate = ctx.sim->migration.allow;
  long ops = static_cast<long>(n);  // baseline fleet scan

  auto forecast_bias = [&](bool use_ar) {
    std::vector<double> bias(n, 0.0);
    for (size_t j = 0; j < n; ++j) {
      const auto& hist = state.histories[j];
      double f;
      if (use_ar) {
        f = forecast_ar(hist, cfg.ar_order);
        ops += static_cast<long>(hist.size()) +
               static_cast<long>(cfg.ar_order) * cfg.ar_order;
      } else {
        f = ema_forecast(hist, cfg.ema_gamma);
        ops += static_cast<long>(hist.size());
      }
      bias[j] = std::max(0.0, f - state.host_states[j].cpu_util);
    }
    return bias;
  };
  auto naive_bias = [&]() {
    std::vector<double> bias(n, 0.0);
    for (size_t j = 0; j < n; ++j) {
      const auto& hist = state.histories[j];
      const double f = hist.empty() ? 0.0 : hist.back();
      bias[j] = std::max(0.0, f - state.host_states[j].cpu_util);
      ++ops;
    }
    return bias;
  };

  Placement placement;
  if (name == "ar_aco") {
    auto bias = forecast_bias(true);
    placement = aco_place(state, fleet, bias, cfg.aco, cfg.objective, cfg.util_cap,
                          ctx.seed, &ops);
  } else if (name == "ema_aco") {
    auto bias = forecast_bias(false);
    placement = aco_place(state, fleet, bias, cfg.aco, cfg.objective, cfg.util_cap,
                          ctx.seed, &ops);
  } else if (name == "bestfit") {
    ops += static_cast<long>((1 + unplaced) * n);
    placement = greedy_bestfit(state, fleet, cfg.util_cap);
  } else if (name == "cheapest") {
    ops += static_cast<long>((1 + unplaced) * n);
    placement = greedy_cheapest(state, fleet, cfg.util_cap);
  } else if (name == "local_search") {
    auto bias = naive_bias();
    placement = local_search_place(state, fleet, bias, cfg.objective, cfg.util_cap,
                                   cfg.ls_restarts, cfg.ls_iters, migrate, ctx.seed,
                                   &ops);
  } else if (name == "gradient" || name == "second_order") {
    auto bias = naive_bias();
    const Placement init = greedy_bestfit(state, fleet, cfg.util_cap);
    const bool second = name == "second_order";
    // counted per step even when no task is movable, so heavier optimizers
    // keep a larger omega on every input
    const int steps = second ? cfg.so_steps : cfg.grad_steps;
    ops += static_cast<long>(steps) * static_cast<long>(n);
    placement = gradient_opt_place(state, fleet, bias, cfg.objective, init, steps,
                                   second ? cfg.so_lr : cfg.grad_lr, migrate, second,
                                   cfg.so_beta1, cfg.so_beta2, &ops);
  } else {
    throw MetaError(ErrorKind::Configuration, "unknown policy: " + name);
  }

  PolicyOutput out;
  out.placement = std::move(placement);
  out.omega = static_cast<double>(ops) * cfg.omega_scale(name);
  return out;
}

}  // namespace metanet
