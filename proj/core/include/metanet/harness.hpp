#pragma once

#include <string>
#include <vector>

#include "metanet/config.hpp"
#include "metanet/selectors.hpp"
#include "metanet/surrogate.hpp"

namespace metanet {

FeatureLayout layout_for(const ExperimentConfig& cfg);

// Runs every roster policy as the sole scheduler for gamma intervals from
// the zero state and writes gamma*q trace records to `out_path` (CSV).
void collect(const ExperimentConfig& cfg, const std::string& out_path);

std::vector<TraceRecord> load_trace(const std::string& path);
void save_trace(const std::vector<TraceRecord>& records, const std::string& path);

struct TrainCmdResult {
  std::vector<double> loss_curve;
};

// Computes the per-policy normalizer from the trace, trains the surrogate,
// writes the checkpoint and the per-epoch loss curve.
TrainCmdResult train_cmd(const ExperimentConfig& cfg, const std::string& trace_path,
                         const std::string& checkpoint_out, const std::string& loss_out);

struct RunSummary {
  std::string selector;
  int intervals = 0;
  double mean_amortized_cost = 0.0;
  double total_energy = 0.0;
  double mean_response_time = 0.0;
  double sla_rate = 0.0;
  double mean_cpu_pct = 0.0;
};

// Runs T intervals with the configured selector, writing the per-interval
// report to out_path and the summary row to <out_path stem>.summary.csv.
RunSummary evaluate(const ExperimentConfig& cfg, const SelectorArtifacts& artifacts,
                    const std::string& out_path);

std::string summary_path_for(const std::string& report_path);

// Recomputes a RunSummary from the per-interval rows of a report file.
RunSummary summarize_report(const std::string& report_path);

// Runs one evaluation per config (simulator sections must match) and writes
// <out_prefix>.csv plus an aligned-text table <out_prefix>.txt.
std::vector<RunSummary> compare(const std::vector<ExperimentConfig>& configs,
                                const std::vector<SelectorArtifacts>& artifacts,
                                const std::string& out_prefix);

// Extracts interval, per-policy estimates and the selected policy from a
// MetaNet run report; errors on runs made with any other selector.
void emit_vis(const std::string& report_path, const std::string& out_path);

}  // namespace metanet
