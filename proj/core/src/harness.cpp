#include "metanet/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "metanet/csvio.hpp"
#include "metanet/error.hpp"
#include "metanet/policies.hpp"
#include "metanet/simcore.hpp"
#include "metanet/synthbench.hpp"

namespace metanet {

namespace fs = std::filesystem;

FeatureLayout layout_for(const ExperimentConfig& cfg) {
  FeatureLayout layout;
  layout.n_hosts = cfg.synthetic.enabled ? cfg.synthetic.fleet_hosts
                                         : static_cast<int>(cfg.sim.fleet.size());
  layout.history = cfg.sim.history_window;
  layout.q = cfg.policies.q();
  return layout;
}

void save_trace(const std::vector<TraceRecord>& records, const std::string& path) {
  const std::string tmp = path + ".tmp";
  try {
    CsvWriter out(tmp);
    std::vector<std::string> header{"k", "phi", "omega"};
    const size_t dim = records.empty() ? 0 : records.front().state.size();
    for (size_t i = 0; i < dim; ++i) header.push_back("s" + std::to_string(i));
    out.row(header);
    for (const auto& r : records) {
      std::vector<std::string> row{std::to_string(r.policy), fmt_double(r.phi),
                                   fmt_double(r.omega)};
      for (double v : r.state) row.push_back(fmt_double(v));
      out.row(row);
    }
    out.close();
    fs::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

std::vector<TraceRecord> load_trace(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 3 || t.header[0] != "k")
    throw MetaError(ErrorKind::Io, "not a trace file: " + path);
  const size_t dim = t.header.size() - 3;
  std::vector<TraceRecord> records;
  records.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size())
      throw MetaError(ErrorKind::Io, "ragged trace row in " + path);
    TraceRecord r;
    r.policy = static_cast<int>(parse_double(row[0]));
    r.phi = parse_double(row[1]);
    r.omega = parse_double(row[2]);
    r.state.reserve(dim);
    for (size_t i = 3; i < row.size(); ++i) r.state.push_back(parse_double(row[i]));
    records.push_back(std::move(r));
  }
  return records;
}

void collect(const ExperimentConfig& cfg, const std::string& out_path) {
  const FeatureLayout layout = layout_for(cfg);
  const int q = cfg.policies.q();
  const int gamma = cfg.collect_gamma;
  std::vector<TraceRecord> records;
  records.reserve(static_cast<size_t>(q) * gamma);

  if (cfg.synthetic.enabled) {
    for (int k = 0; k < q; ++k) {
      Rng noise(derive_seed(cfg.seed, "noise", k));
      for (int t = 1; t <= gamma; ++t) {
        const EncodedState enc = synth_state(cfg.synthetic, t, cfg.sim.history_window);
        TraceRecord r;
        r.policy = k;
        r.state = state_features(enc, layout);
        r.phi = synth_cost(cfg.synthetic, k, t, noise);
        r.omega = 0.0;
        records.push_back(std::move(r));
      }
    }
  } else {
    for (int k = 0; k < q; ++k) {
      SystemState state = initial_state(cfg.sim);
      Rng arrivals(derive_seed(cfg.seed, "arrivals", k));
      for (int t = 1; t <= gamma; ++t) {
        auto fresh = spawn_tasks(arrivals, t, cfg.sim, state.next_task_id);
        state.tasks.insert(state.tasks.end(), fresh.begin(), fresh.end());
        const EncodedState enc = encode_state(state, cfg.sim.fleet);

        PolicyContext ctx{&cfg.sim, &cfg.policies, derive_seed(cfg.seed, "policy", k, t)};
        const PolicyOutput out = schedule(k, state, ctx);
        ScheduleCharge charge{k, out.omega, 0.0, -1};
        const IntervalMetrics m = step_interval(state, out.placement, charge, cfg.sim);

        TraceRecord r;
        r.policy = k;
        r.state = state_features(enc, layout);
        r.phi = m.amortized_cost;
        r.omega = out.omega;
        records.push_back(std::move(r));
      }
    }
  }
  save_trace(records, out_path);
}

TrainCmdResult train_cmd(const ExperimentConfig& cfg, const std::string& trace_path,
                         const std::string& checkpoint_out, const std::string& loss_out) {
  const FeatureLayout layout = layout_for(cfg);
  std::vector<TraceRecord> records = load_trace(trace_path);
  if (records.empty())
    throw MetaError(ErrorKind::Coverage, "trace is empty: " + trace_path);
  for (const auto& r : records)
    if (static_cast<int>(r.state.size()) != layout.state_dim())
      throw MetaError(ErrorKind::Configuration,
                      "trace feature width does not match the environment layout");

  SurrogateNet net =
      make_surrogate(layout, cfg.surrogate, derive_seed(cfg.seed, "init"));
  net.norm = compute_phi_max(records, layout.q);
  TrainResult result = train(net, records, cfg.surrogate, derive_seed(cfg.seed, "batching"));
  save_checkpoint(net, checkpoint_out);

  if (!loss_out.empty()) {
    CsvWriter out(loss_out);
    out.row({"epoch", "mean_loss"});
    for (size_t e = 0; e < result.loss_curve.size(); ++e)
      out.row({std::to_string(e), fmt_double(result.loss_curve[e])});
    out.close();
  }
  return TrainCmdResult{std::move(result.loss_curve)};
}

std::string summary_path_for(const std::string& report_path) {
  const fs::path p(report_path);
  fs::path out = p;
  out.replace_extension();
  return out.string() + ".summary.csv";
}

namespace {

struct Accumulator {
  double amortized_sum = 0.0;
  double energy_sum = 0.0;
  double response_sum = 0.0;
  long completed = 0;
  long violations = 0;
  double cpu_sum = 0.0;
  int intervals = 0;

  void add_row(double amortized, double energy, int completed_n, double resp_mean,
               int viol, double cpu) {
    amortized_sum += amortized;
    energy_sum += energy;
    response_sum += resp_mean * completed_n;
    completed += completed_n;
    violations += viol;
    cpu_sum += cpu;
    intervals += 1;
  }

  RunSummary summary(const std::string& selector) const {
    RunSummary s;
    s.selector = selector;
    s.intervals = intervals;
    s.mean_amortized_cost = intervals > 0 ? amortized_sum / intervals : 0.0;
    s.total_energy = energy_sum;
    s.mean_response_time = completed > 0 ? response_sum / completed : 0.0;
    s.sla_rate = completed > 0 ? static_cast<double>(violations) / completed : 0.0;
    s.mean_cpu_pct = intervals > 0 ? 100.0 * cpu_sum / intervals : 0.0;
    return s;
  }
};

void write_summary(const RunSummary& s, const std::string& path) {
  CsvWriter out(path);
  out.row({"selector", "intervals", "mean_amortized_cost", "total_energy_kwh",
           "mean_response_time_s", "sla_violation_rate", "mean_cpu_pct"});
  out.row({s.selector, std::to_string(s.intervals), fmt_double(s.mean_amortized_cost),
           fmt_double(s.total_energy), fmt_double(s.mean_response_time),
           fmt_double(s.sla_rate), fmt_double(s.mean_cpu_pct)});
  out.close();
}

std::vector<std::string> report_header(int q) {
  std::vector<std::string> h{"interval",       "exec_cost",   "sched_cost",
                             "total_cost",     "amortized_cost", "energy",
                             "completed",      "response_time_mean",
                             "sla_violations", "mean_cpu_util",  "selected_policy",
                             "omega"};
  for (int k = 0; k < q; ++k) h.push_back("est_" + std::to_string(k));
  h.push_back("selector");
  return h;
}

}  // namespace

RunSummary evaluate(const ExperimentConfig& cfg, const SelectorArtifacts& artifacts,
                    const std::string& out_path) {
  const FeatureLayout layout = layout_for(cfg);
  const int q = cfg.policies.q();
  const int T = cfg.evaluate_T;
  auto selector = make_selector(cfg, layout, artifacts, cfg.seed);

  CsvWriter out(out_path);
  out.row(report_header(q));
  Accumulator acc;

  auto write_row = [&](int t, const IntervalMetrics& m,
                       const std::vector<double>& estimates) {
    std::vector<std::string> row{
        std::to_string(t),
        fmt_double(m.exec_cost),
        fmt_double(m.sched_cost),
        fmt_double(m.total_cost),
        fmt_double(m.amortized_cost),
        fmt_double(m.energy),
        std::to_string(m.completed),
        fmt_double(m.response_time_mean()),
        std::to_string(m.sla_violations),
        fmt_double(m.mean_cpu_util),
        cfg.policies.roster[m.selected_policy],
        fmt_double(m.omega)};
    for (int k = 0; k < q; ++k)
      row.push_back(fmt_double(k < static_cast<int>(estimates.size()) ? estimates[k] : 0.0));
    row.push_back(selector->name());
    out.row(row);
    acc.add_row(m.amortized_cost, m.energy, m.completed, m.response_time_mean(),
                m.sla_violations, m.mean_cpu_util);
  };

  if (cfg.synthetic.enabled) {
    Rng noise(derive_seed(cfg.seed, "noise"));
    for (int t = 1; t <= T; ++t) {
      const EncodedState enc = synth_state(cfg.synthetic, t, cfg.sim.history_window);
      const SelectionResult sel = selector->select(enc, t);
      const double phi = synth_cost(cfg.synthetic, sel.policy, t, noise);
      selector->observe(enc, sel.policy, phi, 0.0);

      IntervalMetrics m;
      m.exec_cost = phi;
      m.total_cost = phi;
      m.amortized_cost = phi;
      m.selected_policy = sel.policy;
      write_row(t, m, sel.estimates);
    }
  } else {
    SystemState state = initial_state(cfg.sim);
    Rng arrivals(derive_seed(cfg.seed, "arrivals"));
    for (int t = 1; t <= T; ++t) {
      auto fresh = spawn_tasks(arrivals, t, cfg.sim, state.next_task_id);
      state.tasks.insert(state.tasks.end(), fresh.begin(), fresh.end());
      const EncodedState enc = encode_state(state, cfg.sim.fleet);

      const SelectionResult sel = selector->select(enc, t);
      PolicyContext ctx{&cfg.sim, &cfg.policies, derive_seed(cfg.seed, "policy", t)};
      const PolicyOutput pol = schedule(sel.policy, state, ctx);

      ScheduleCharge charge;
      charge.policy = sel.policy;
      charge.policy_omega = pol.omega;
      charge.selector_omega = sel.omega;
      charge.runner_host = sel.omega > 0.0 ? pick_runner_node(enc.H) : -1;

      const IntervalMetrics m = step_interval(state, pol.placement, charge, cfg.sim);
      selector->observe(enc, sel.policy, m.amortized_cost, pol.omega);
      write_row(t, m, sel.estimates);
    }
  }
  out.close();

  const RunSummary summary = acc.summary(selector->name());
  write_summary(summary, summary_path_for(out_path));
  return summary;
}

RunSummary summarize_report(const std::string& report_path) {
  const CsvTable t = read_csv(report_path);
  const int c_amort = t.column("amortized_cost");
  const int c_energy = t.column("energy");
  const int c_completed = t.column("completed");
  const int c_resp = t.column("response_time_mean");
  const int c_viol = t.column("sla_violations");
  const int c_cpu = t.column("mean_cpu_util");
  const int c_selector = t.column("selector");
  if (c_amort < 0 || c_selector < 0)
    throw MetaError(ErrorKind::Io, "not a run report: " + report_path);

  Accumulator acc;
  std::string selector;
  for (const auto& row : t.rows) {
    selector = row[c_selector];
    acc.add_row(parse_double(row[c_amort]), parse_double(row[c_energy]),
                static_cast<int>(parse_double(row[c_completed])),
                parse_double(row[c_resp]),
                static_cast<int>(parse_double(row[c_viol])),
                parse_double(row[c_cpu]));
  }
  return acc.summary(selector);
}

std::vector<RunSummary> compare(const std::vector<ExperimentConfig>& configs,
                                const std::vector<SelectorArtifacts>& artifacts,
                                const std::string& out_prefix) {
  if (configs.empty())
    throw MetaError(ErrorKind::Argument, "compare needs at least one run");
  if (!artifacts.empty() && artifacts.size() != configs.size())
    throw MetaError(ErrorKind::Argument, "one artifact set per config required");

  const std::string fingerprint = sim_fingerprint(configs.front());
  for (const auto& cfg : configs)
    if (sim_fingerprint(cfg) != fingerprint)
      throw MetaError(ErrorKind::Comparability,
                      "simulator configurations differ between runs");

  std::vector<RunSummary> summaries;
  for (size_t i = 0; i < configs.size(); ++i) {
    const SelectorArtifacts art = artifacts.empty() ? SelectorArtifacts{} : artifacts[i];
    const std::string report =
        out_prefix + ".run" + std::to_string(i) + ".csv";
    summaries.push_back(evaluate(configs[i], art, report));
  }

  // cost/energy/resp/sla: lower is better; cpu: higher is better
  const int metrics = 5;
  auto value = [](const RunSummary& s, int m) {
    switch (m) {
      case 0: return s.mean_amortized_cost;
      case 1: return s.total_energy;
      case 2: return s.mean_response_time;
      case 3: return s.sla_rate;
      default: return s.mean_cpu_pct;
    }
  };
  std::vector<size_t> best(metrics, 0);
  for (int m = 0; m < metrics; ++m)
    for (size_t i = 1; i < summaries.size(); ++i) {
      const bool better = m == 4 ? value(summaries[i], m) > value(summaries[best[m]], m)
                                 : value(summaries[i], m) < value(summaries[best[m]], m);
      if (better) best[m] = i;
    }

  CsvWriter csv(out_prefix + ".csv");
  csv.row({"model", "cost", "energy", "resp_time", "sla_rate", "cpu_pct"});
  for (const auto& s : summaries)
    csv.row({s.selector, fmt_double(s.mean_amortized_cost), fmt_double(s.total_energy),
             fmt_double(s.mean_response_time), fmt_double(s.sla_rate),
             fmt_double(s.mean_cpu_pct)});
  std::vector<std::string> best_row{"best"};
  for (int m = 0; m < metrics; ++m) best_row.push_back(summaries[best[m]].selector);
  csv.row(best_row);
  csv.close();

  std::FILE* txt = std::fopen((out_prefix + ".txt").c_str(), "wb");
  if (txt == nullptr)
    throw MetaError(ErrorKind::Io, "cannot write comparison table");
  std::fprintf(txt, "%-20s %12s %12s %12s %12s %12s\n", "Model", "Cost", "Energy",
               "Resp. T.", "SLA V.", "CPU %");
  for (size_t i = 0; i < summaries.size(); ++i) {
    const auto& s = summaries[i];
    auto cell = [&](int m, double v) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3f%s", v, best[m] == i ? "*" : " ");
      return std::string(buf);
    };
    std::fprintf(txt, "%-20s %12s %12s %12s %12s %12s\n", s.selector.c_str(),
                 cell(0, s.mean_amortized_cost).c_str(), cell(1, s.total_energy).c_str(),
                 cell(2, s.mean_response_time).c_str(), cell(3, s.sla_rate).c_str(),
                 cell(4, s.mean_cpu_pct).c_str());
  }
  std::fclose(txt);
  return summaries;
}

void emit_vis(const std::string& report_path, const std::string& out_path) {
  const CsvTable t = read_csv(report_path);
  const int c_interval = t.column("interval");
  const int c_selected = t.column("selected_policy");
  const int c_selector = t.column("selector");
  if (c_interval < 0 || c_selected < 0 || c_selector < 0)
    throw MetaError(ErrorKind::Io, "not a run report: " + report_path);
  std::vector<int> est_cols;
  for (size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i].rfind("est_", 0) == 0) est_cols.push_back(static_cast<int>(i));
  if (est_cols.empty())
    throw MetaError(ErrorKind::Io, "report has no estimate columns");

  for (const auto& row : t.rows)
    if (row[c_selector] != "metanet")
      throw MetaError(ErrorKind::Unsupported,
                      "vis requires a metanet run, found selector: " + row[c_selector]);

  CsvWriter out(out_path);
  std::vector<std::string> header{"interval"};
  for (int c : est_cols) header.push_back(t.header[c]);
  header.push_back("selected_policy");
  out.row(header);
  for (const auto& row : t.rows) {
    std::vector<std::string> cells{row[c_interval]};
    for (int c : est_cols) cells.push_back(row[c]);
    cells.push_back(row[c_selected]);
    out.row(cells);
  }
  out.close();
}

}  // namespace metanet
