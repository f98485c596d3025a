#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metanet/config.hpp"
#include "metanet/mlp.hpp"
#include "metanet/rng.hpp"
#include "metanet/surrogate.hpp"
#include "metanet/types.hpp"

namespace metanet {

struct SelectionResult {
  int policy = 0;
  std::vector<double> estimates;  // denormalized cost per policy (empty if n/a)
  double omega = 0.0;             // selector inference overhead, virtual seconds
};

// Evaluates the surrogate for every policy on the current state, denormalizes
// and returns the argmin (ties to the smallest index) with all q estimates.
SelectionResult metanet_select(const SurrogateNet& net, const EncodedState& enc,
                               double omega_scale);

// Host with the least CPU utilization (ties to the lowest id); the selector's
// inference runs there.
int pick_runner_node(const std::vector<std::array<double, 3>>& H);

struct BanditStats {
  std::vector<long> pulls;
  std::vector<double> mean_reward;
  double c = 0.5;
  long t = 0;

  explicit BanditStats(int arms = 0, double c_ = 0.5)
      : pulls(arms, 0), mean_reward(arms, 0.0), c(c_) {}
};

// Untried arms first (lowest index), then argmax of mean + c*sqrt(2 ln t / n).
int ucb_select(const BanditStats& stats);
void ucb_update(BanditStats& stats, int arm, double reward);

struct Transition {
  std::vector<double> x;
  int action = 0;
  double reward = 0.0;
  std::vector<double> x_next;
};

struct DqnAgent {
  Mlp q_net;
  Mlp target_net;
  DqnConfig cfg;
  std::vector<Transition> buffer;
  size_t write_pos = 0;
  long selections = 0;
  long updates = 0;
  Mlp::Grad velocity;
};

DqnAgent make_dqn(int state_dim, int q, const DqnConfig& cfg, uint64_t init_seed);

double dqn_epsilon(const DqnConfig& cfg, long selections);
int dqn_select(const DqnAgent& agent, std::span<const double> x, double epsilon, Rng& rng);
void dqn_store(DqnAgent& agent, Transition t);

// One minibatch TD step; returns false (no-op) while the buffer is smaller
// than the batch size. Syncs the target net every cfg.sync_period updates.
bool dqn_update(DqnAgent& agent, Rng& rng);

// Replays the trace as synthetic transitions (consecutive records of the
// same policy) to pretrain the Q net.
void dqn_pretrain(DqnAgent& agent, const std::vector<TraceRecord>& records,
                  int epochs, Rng& rng);

// Per-run selector state machine used by the evaluation loop.
class SelectorRuntime {
 public:
  virtual ~SelectorRuntime() = default;
  virtual SelectionResult select(const EncodedState& enc, int interval) = 0;
  // Feedback after the interval executed: realized amortized cost phi for the
  // chosen policy, plus the policy overhead for trace-style records.
  virtual void observe(const EncodedState& enc_at_decision, int policy, double phi,
                       double omega) = 0;
  virtual std::string name() const = 0;
};

struct SelectorArtifacts {
  std::string checkpoint_path;  // metanet
  std::string trace_path;       // dqn pretrain; optional mab warm start
};

std::unique_ptr<SelectorRuntime> make_selector(const ExperimentConfig& cfg,
                                               const FeatureLayout& layout,
                                               const SelectorArtifacts& artifacts,
                                               uint64_t seed);

}  // namespace metanet
