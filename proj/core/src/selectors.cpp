#include "metanet/selectors.hpp"

#include <algorithm>
#include <cmath>

#include "metanet/error.hpp"
#include "metanet/harness.hpp"

namespace metanet {

namespace {

long forward_op_count(const Mlp& net) {
  long ops = 0;
  for (size_t l = 0; l + 1 < net.dims.size(); ++l)
    ops += static_cast<long>(net.dims[l]) * net.dims[l + 1];
  return ops;
}

}  // namespace

SelectionResult metanet_select(const SurrogateNet& net, const EncodedState& enc,
                               double omega_scale) {
  const std::vector<double> state = state_features(enc, net.layout);
  SelectionResult result;
  result.estimates.resize(net.layout.q);
  long ops = static_cast<long>(state.size());
  if (net.q_heads) {
    for (int k = 0; k < net.layout.q; ++k)
      result.estimates[k] = net.predict_cost(state, k);
    ops += forward_op_count(net.net);
  } else {
    for (int k = 0; k < net.layout.q; ++k) {
      result.estimates[k] = net.predict_cost(state, k);
      ops += forward_op_count(net.net);
    }
  }
  int best = 0;
  for (int k = 1; k < net.layout.q; ++k)
    if (result.estimates[k] < result.estimates[best]) best = k;
  result.policy = best;
  result.omega = static_cast<double>(ops) * omega_scale;
  return result;
}

int pick_runner_node(const std::vector<std::array<double, 3>>& H) {
  if (H.empty()) throw MetaError(ErrorKind::Argument, "empty fleet");
  int best = 0;
  for (int i = 1; i < static_cast<int>(H.size()); ++i)
    if (H[i][0] < H[best][0]) best = i;
  return best;
}

int ucb_select(const BanditStats& stats) {
  const int arms = static_cast<int>(stats.pulls.size());
  if (arms == 0) throw MetaError(ErrorKind::Argument, "bandit has no arms");
  for (int k = 0; k < arms; ++k)
    if (stats.pulls[k] == 0) return k;
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < arms; ++k) {
    const double bonus =
        stats.c * std::sqrt(2.0 * std::log(static_cast<double>(stats.t)) /
                            static_cast<double>(stats.pulls[k]));
    const double score = stats.mean_reward[k] + bonus;
    if (score > best_score) {
      best_score = score;
      best = k;
    }
  }
  return best;
}

void ucb_update(BanditStats& stats, int arm, double reward) {
  if (arm < 0 || arm >= static_cast<int>(stats.pulls.size()))
    throw MetaError(ErrorKind::Argument, "bandit arm out of range");
  stats.pulls[arm] += 1;
  stats.mean_reward[arm] +=
      (reward - stats.mean_reward[arm]) / static_cast<double>(stats.pulls[arm]);
  stats.t += 1;
}

DqnAgent make_dqn(int state_dim, int q, const DqnConfig& cfg, uint64_t init_seed) {
  Rng rng(init_seed);
  DqnAgent agent;
  agent.q_net = Mlp::init({state_dim, 64, 64, 64, q}, /*sigmoid_output=*/false, rng);
  agent.target_net = agent.q_net;
  agent.cfg = cfg;
  agent.velocity = Mlp::Grad::zeros_like(agent.q_net);
  return agent;
}

double dqn_epsilon(const DqnConfig& cfg, long selections) {
  return cfg.eps_end + (cfg.eps_start - cfg.eps_end) *
                           std::exp(-static_cast<double>(selections) / cfg.eps_decay);
}

int dqn_select(const DqnAgent& agent, std::span<const double> x, double epsilon,
               Rng& rng) {
  const int q = agent.q_net.dims.back();
  if (epsilon > 0.0 && rng.u01() < epsilon) return rng.uniform_int(q);
  const std::vector<double> values = agent.q_net.forward(x);
  int best = 0;
  for (int k = 1; k < q; ++k)
    if (values[k] > values[best]) best = k;
  return best;
}

void dqn_store(DqnAgent& agent, Transition t) {
  if (static_cast<int>(agent.buffer.size()) <
      agent.cfg.buffer_capacity) {
    agent.buffer.push_back(std::move(t));
  } else {
    agent.buffer[agent.write_pos] = std::move(t);
  }
  agent.write_pos = (agent.write_pos + 1) % static_cast<size_t>(agent.cfg.buffer_capacity);
}

bool dqn_update(DqnAgent& agent, Rng& rng) {
  const int batch = agent.cfg.batch_size;
  if (static_cast<int>(agent.buffer.size()) < batch) return false;

  Mlp::Grad grad = Mlp::Grad::zeros_like(agent.q_net);
  for (int i = 0; i < batch; ++i) {
    const Transition& t = agent.buffer[rng.uniform_int(static_cast<int>(agent.buffer.size()))];
    double target = t.reward;
    if (agent.cfg.gamma > 0.0) {
      const std::vector<double> next = agent.target_net.forward(t.x_next);
      target += agent.cfg.gamma * *std::max_element(next.begin(), next.end());
    }
    Mlp::Cache cache;
    const std::vector<double> values = agent.q_net.forward(t.x, cache);
    std::vector<double> dLdy(values.size(), 0.0);
    dLdy[t.action] = 2.0 * (values[t.action] - target) / batch;
    agent.q_net.backward(cache, dLdy, grad);
  }
  agent.q_net.apply_momentum_sgd(grad, agent.cfg.lr, 0.0, agent.velocity);
  agent.updates += 1;
  if (agent.cfg.sync_period > 0 && agent.updates % agent.cfg.sync_period == 0)
    agent.target_net = agent.q_net;
  return true;
}

void dqn_pretrain(DqnAgent& agent, const std::vector<TraceRecord>& records, int epochs,
                  Rng& rng) {
  // Consecutive records of the same policy become (x, a, r, x') transitions.
  std::vector<Transition> transitions;
  for (size_t i = 0; i + 1 < records.size(); ++i) {
    if (records[i].policy != records[i + 1].policy) continue;
    Transition t;
    t.x = records[i].state;
    t.action = records[i].policy;
    t.reward = -records[i].phi;
    t.x_next = records[i + 1].state;
    transitions.push_back(std::move(t));
  }
  for (auto& t : transitions) dqn_store(agent, std::move(t));
  const long steps = static_cast<long>(epochs) * static_cast<long>(transitions.size());
  for (long s = 0; s < steps; ++s) dqn_update(agent, rng);
}

// ---- selector runtimes ------------------------------------------------------

namespace {

class FixedSelector final : public SelectorRuntime {
 public:
  FixedSelector(int policy, std::string label)
      : policy_(policy), label_(std::move(label)) {}

  SelectionResult select(const EncodedState&, int) override {
    return SelectionResult{policy_, {}, 0.0};
  }
  void observe(const EncodedState&, int, double, double) override {}
  std::string name() const override { return label_; }

 private:
  int policy_;
  std::string label_;
};

class RandomSelector final : public SelectorRuntime {
 public:
  RandomSelector(int q, uint64_t seed) : q_(q), rng_(seed) {}

  SelectionResult select(const EncodedState&, int) override {
    return SelectionResult{rng_.uniform_int(q_), {}, 0.0};
  }
  void observe(const EncodedState&, int, double, double) override {}
  std::string name() const override { return "random"; }

 private:
  int q_;
  Rng rng_;
};

class MabSelector final : public SelectorRuntime {
 public:
  MabSelector(int q, const MabConfig& cfg, double omega_scale)
      : stats_(q, cfg.c), omega_scale_(omega_scale) {}

  void warm_start(const std::vector<TraceRecord>& records) {
    for (const auto& r : records) ucb_update(stats_, r.policy, -r.phi);
  }

  SelectionResult select(const EncodedState&, int) override {
    SelectionResult result;
    result.policy = ucb_select(stats_);
    result.omega = static_cast<double>(stats_.pulls.size()) * omega_scale_;
    return result;
  }
  void observe(const EncodedState&, int policy, double phi, double) override {
    ucb_update(stats_, policy, -phi);
  }
  std::string name() const override { return "mab"; }

 private:
  BanditStats stats_;
  double omega_scale_;
};

class DqnSelector final : public SelectorRuntime {
 public:
  DqnSelector(DqnAgent agent, FeatureLayout layout, double omega_scale, uint64_t seed)
      : agent_(std::move(agent)), layout_(layout), omega_scale_(omega_scale),
        rng_(seed) {}

  SelectionResult select(const EncodedState& enc, int) override {
    std::vector<double> x = state_features(enc, layout_);
    if (pending_.has_value()) {
      pending_->x_next = x;
      dqn_store(agent_, std::move(*pending_));
      dqn_update(agent_, rng_);
      pending_.reset();
    }
    const double eps = dqn_epsilon(agent_.cfg, agent_.selections);
    SelectionResult result;
    result.policy = dqn_select(agent_, x, eps, rng_);
    result.omega = static_cast<double>(forward_op_count(agent_.q_net)) * omega_scale_;
    agent_.selections += 1;
    pending_ = Transition{std::move(x), result.policy, 0.0, {}};
    return result;
  }

  void observe(const EncodedState&, int policy, double phi, double) override {
    if (pending_.has_value() && pending_->action == policy) pending_->reward = -phi;
  }
  std::string name() const override { return "dqn"; }

 private:
  DqnAgent agent_;
  FeatureLayout layout_;
  double omega_scale_;
  Rng rng_;
  std::optional<Transition> pending_;
};

class MetaNetSelector final : public SelectorRuntime {
 public:
  MetaNetSelector(SurrogateNet net, double lr_online, double omega_scale)
      : net_(std::move(net)), lr_online_(lr_online), omega_scale_(omega_scale) {}

  SelectionResult select(const EncodedState& enc, int) override {
    return metanet_select(net_, enc, omega_scale_);
  }

  void observe(const EncodedState& enc, int policy, double phi, double omega) override {
    TraceRecord r;
    r.policy = policy;
    r.phi = phi;
    r.omega = omega;
    r.state = state_features(enc, net_.layout);
    online_update(net_, r, lr_online_);
  }
  std::string name() const override { return "metanet"; }

 private:
  SurrogateNet net_;
  double lr_online_;
  double omega_scale_;
};

}  // namespace

std::unique_ptr<SelectorRuntime> make_selector(const ExperimentConfig& cfg,
                                               const FeatureLayout& layout,
                                               const SelectorArtifacts& artifacts,
                                               uint64_t seed) {
  const std::string& kind = cfg.selector.kind;
  const int q = cfg.policies.q();

  if (kind == "metanet") {
    if (artifacts.checkpoint_path.empty())
      throw MetaError(ErrorKind::Configuration,
                      "metanet selector requires a trained checkpoint (--checkpoint)");
    SurrogateNet net = load_checkpoint(artifacts.checkpoint_path);
    check_layout(net, layout);
    return std::make_unique<MetaNetSelector>(std::move(net), cfg.surrogate.lr_online,
                                             cfg.selector.omega_scale);
  }
  if (kind == "fixed") {
    const int idx = cfg.policies.index_of(cfg.selector.fixed_policy);
    if (idx < 0)
      throw MetaError(ErrorKind::Configuration,
                      "fixed selector needs a roster policy, got: '" +
                          cfg.selector.fixed_policy + "'");
    return std::make_unique<FixedSelector>(idx, "fixed:" + cfg.selector.fixed_policy);
  }
  if (kind == "random")
    return std::make_unique<RandomSelector>(q, derive_seed(seed, "selector"));
  if (kind == "mab") {
    auto mab = std::make_unique<MabSelector>(q, cfg.selector.mab, cfg.selector.omega_scale);
    if (!artifacts.trace_path.empty()) mab->warm_start(load_trace(artifacts.trace_path));
    return mab;
  }
  if (kind == "dqn") {
    if (artifacts.trace_path.empty())
      throw MetaError(ErrorKind::Configuration,
                      "dqn selector requires a trace for pretraining (--trace)");
    const std::vector<TraceRecord> records = load_trace(artifacts.trace_path);
    for (const auto& r : records)
      if (static_cast<int>(r.state.size()) != layout.state_dim())
        throw MetaError(ErrorKind::Configuration,
                        "trace feature width does not match the environment layout");
    DqnAgent agent =
        make_dqn(layout.state_dim(), q, cfg.selector.dqn, derive_seed(seed, "init", 7));
    Rng rng(derive_seed(seed, "selector", 1));
    dqn_pretrain(agent, records, cfg.selector.dqn.pretrain_epochs, rng);
    return std::make_unique<DqnSelector>(std::move(agent), layout,
                                         cfg.selector.omega_scale,
                                         derive_seed(seed, "selector"));
  }
  throw MetaError(ErrorKind::Configuration, "unknown selector kind: " + kind);
}

}  // namespace metanet
