#pragma once

#include <span>
#include <string>
#include <vector>

#include "metanet/config.hpp"
#include "metanet/mlp.hpp"
#include "metanet/types.hpp"

namespace metanet {

// Fixed-length feature layout: 5 aggregates per host, h history entries per
// host, and (unless q_heads) a one-hot policy block of width q.
struct FeatureLayout {
  int n_hosts = 0;
  int history = 0;
  int q = 0;

  int state_dim() const { return 5 * n_hosts + history * n_hosts; }
  int input_dim(bool q_heads) const { return state_dim() + (q_heads ? 0 : q); }

  bool operator==(const FeatureLayout&) const = default;
};

// Per-host aggregation of (W, H, S) plus histories; length state_dim().
std::vector<double> state_features(const EncodedState& enc, const FeatureLayout& layout);

// state_features with the one-hot policy block appended.
std::vector<double> featurize(const EncodedState& enc, int policy,
                              const FeatureLayout& layout);

struct Normalizer {
  std::vector<double> phi_max;  // USD, per policy
};

// One element of the trace dataset: the encoded state at decision time, the
// policy that ran, the amortized cost observed, and the policy's overhead.
struct TraceRecord {
  int policy = 0;
  double phi = 0.0;
  double omega = 0.0;
  std::vector<double> state;  // state_features at decision time
};

struct SurrogateNet {
  Mlp net;
  FeatureLayout layout;
  bool q_heads = false;
  Normalizer norm;

  // Normalized prediction in (0,1) for (state features, policy k).
  double predict_normalized(std::span<const double> state, int k) const;
  // phi_max[k] * prediction.
  double predict_cost(std::span<const double> state, int k) const;
};

SurrogateNet make_surrogate(const FeatureLayout& layout, const SurrogateConfig& cfg,
                            uint64_t init_seed);

// |phi - phi_max_k * phi_hat|; training minimizes its square.
double loss_residual(double phi, double phi_hat, double phi_max_k);

// Per-policy maximum cost in the dataset. Every policy must appear with a
// positive maximum, otherwise ErrorKind::Coverage.
Normalizer compute_phi_max(const std::vector<TraceRecord>& records, int q);

struct TrainResult {
  std::vector<double> loss_curve;  // per-epoch mean |residual|
};

TrainResult train(SurrogateNet& net, const std::vector<TraceRecord>& records,
                  const SurrogateConfig& cfg, uint64_t shuffle_seed);

// One gradient step on a fresh datapoint; raises phi_max[k] first when the
// observed cost exceeds it (running max).
void online_update(SurrogateNet& net, const TraceRecord& record, double lr_online);

// Worst relative error between analytic and central finite-difference
// gradients of the squared-residual loss, over all parameters.
double grad_check(const SurrogateNet& net, std::span<const double> x_state, int k,
                  double phi, double epsilon);

void save_checkpoint(const SurrogateNet& net, const std::string& path);
SurrogateNet load_checkpoint(const std::string& path);

// Throws ErrorKind::Checkpoint when the checkpoint was built for a different
// environment layout.
void check_layout(const SurrogateNet& net, const FeatureLayout& expected);

}  // namespace metanet
