#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "metanet/types.hpp"

namespace metanet {

struct FaasConfig {
  double mem_gb = 1.0;
  double price_per_gb_second = 1.6667e-5;  // USD per GB-second
  double per_invocation_fee = 2.0e-7;      // USD
};

// One phase of the workload schedule; arrivals use the most recent phase
// whose start_interval <= t. An empty profile_weights means uniform.
struct WorkloadPhase {
  int start_interval = 1;
  double lambda = 1.2;
  std::vector<double> profile_weights;
};

struct MigrationConfig {
  bool allow = true;
  // A migrated task makes no progress for this many intervals (friction).
  int pause_intervals = 1;
};

struct SimConfig {
  double delta_seconds = 10.0;
  double lambda = 1.2;
  int history_window = 4;
  std::vector<HostSpec> fleet;
  FaasConfig faas;
  MigrationConfig migration;
  std::vector<AppProfile> app_profiles;
  std::vector<WorkloadPhase> workload_schedule;  // optional non-stationarity

  double lambda_at(int interval) const;
  const std::vector<double>* weights_at(int interval) const;
};

struct ObjectiveWeights {
  double w_util = 1.0;
  double w_hosts = 0.25;
  double w_migration = 0.1;
};

struct AcoParams {
  int n_ants = 8;
  int n_iters = 15;
  double evaporation = 0.3;  // in (0,1)
  double alpha = 1.0;
  double beta = 2.0;
};

struct PolicySetConfig {
  std::vector<std::string> roster{"ar_aco",       "ema_aco",  "bestfit",
                                  "cheapest",     "local_search",
                                  "gradient",     "second_order"};
  double util_cap = 0.8;
  ObjectiveWeights objective;
  AcoParams aco;
  int ar_order = 2;
  double ema_gamma = 0.5;
  int ls_restarts = 4;
  int ls_iters = 40;
  int grad_steps = 40;
  double grad_lr = 0.3;
  int so_steps = 40;
  double so_lr = 0.3;
  double so_beta1 = 0.9;
  double so_beta2 = 0.999;
  // Virtual seconds per counted elementary operation, per policy.
  std::map<std::string, double> omega_scales{
      {"bestfit", 1e-4},      {"cheapest", 1e-4},    {"ar_aco", 2e-4},
      {"ema_aco", 2e-4},      {"local_search", 2e-4}, {"gradient", 1e-3},
      {"second_order", 3e-3}};

  int q() const { return static_cast<int>(roster.size()); }
  double omega_scale(const std::string& name) const;
  int index_of(const std::string& name) const;  // -1 when absent
};

struct SurrogateConfig {
  std::vector<int> hidden{64, 64, 64};
  double lr = 1e-3;
  double momentum = 0.9;
  int batch_size = 32;
  int epochs = 200;
  double lr_online = 1e-3;
  bool q_heads = false;  // one net with q outputs instead of one-hot input
};

struct MabConfig {
  double c = 0.5;  // UCB exploration constant
};

struct DqnConfig {
  double gamma = 0.9;
  double eps_start = 0.2;
  double eps_end = 0.02;
  double eps_decay = 200.0;  // exponential decay constant, in selections
  int buffer_capacity = 2000;
  int batch_size = 32;
  int sync_period = 50;  // updates between target syncs
  double lr = 1e-3;
  int pretrain_epochs = 3;  // replay passes over the trace transitions
};

struct SelectorConfig {
  std::string kind = "metanet";  // metanet | fixed | random | mab | dqn
  std::string fixed_policy;      // roster name, for kind == fixed
  double omega_scale = 5e-7;     // virtual seconds per counted inference op
  MabConfig mab;
  DqnConfig dqn;
};

struct LoadSignalConfig {
  double base = 0.5;
  double amplitude = 0.3;
  int period = 250;
};

// Affine per-policy cost functions of the load signal; segment k applies
// from `start` until the next segment begins.
struct RegimeSegment {
  int start = 1;
  std::vector<double> slope;
  std::vector<double> intercept;
};

struct SyntheticConfig {
  bool enabled = false;
  int fleet_hosts = 2;  // feature layout only; host 0 carries the load signal
  LoadSignalConfig load;
  double noise_level = 0.05;  // fraction of cost_scale
  double cost_scale = 0.5;    // USD
  std::vector<RegimeSegment> segments;
};

struct ExperimentConfig {
  uint64_t seed = 42;
  SimConfig sim;
  PolicySetConfig policies;
  SurrogateConfig surrogate;
  SelectorConfig selector;
  int collect_gamma = 100;
  int evaluate_T = 1000;
  SyntheticConfig synthetic;
};

// Desk-scale defaults: 6 SmallVM / 2 MediumVM / 2 LargeVM, seven app
// profiles (3 heavy, 4 light), arrivals at lambda = 1.2.
ExperimentConfig default_config();

std::vector<HostSpec> make_fleet(int small, int medium, int large);

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

// Serialized simulator section, used for the comparability check.
std::string sim_fingerprint(const ExperimentConfig& cfg);

// Throws ErrorKind::Configuration on invariant violations.
void validate(const ExperimentConfig& cfg);

}  // namespace metanet
