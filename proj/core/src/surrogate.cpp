#include "metanet/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "metanet/error.hpp"

namespace metanet {

using nlohmann::json;

std::vector<double> state_features(const EncodedState& enc, const FeatureLayout& layout) {
  const int n = layout.n_hosts;
  if (static_cast<int>(enc.H.size()) != n)
    throw MetaError(ErrorKind::Argument, "state has wrong host count for layout");

  std::vector<double> counts(n, 0.0), demand(n, 0.0);
  for (size_t row = 0; row < enc.task_ids.size(); ++row) {
    auto it = enc.S.assignment.find(enc.task_ids[row]);
    if (it == enc.S.assignment.end()) continue;  // unplaced arrivals are not visible
    const int h = it->second;
    if (h < 0 || h >= n) continue;
    counts[h] += 1.0;
    demand[h] += enc.W[row][0];
  }
  const double max_count = std::max(1e-12, *std::max_element(counts.begin(), counts.end()));
  const double max_demand = std::max(1e-12, *std::max_element(demand.begin(), demand.end()));

  std::vector<double> x;
  x.reserve(layout.state_dim());
  for (int h = 0; h < n; ++h) {
    x.push_back(enc.H[h][0]);
    x.push_back(enc.H[h][1]);
    x.push_back(enc.H[h][2]);
    x.push_back(counts[h] / max_count);
    x.push_back(demand[h] / max_demand);
  }
  for (int h = 0; h < n; ++h) {
    const auto& hist = enc.histories[h];
    const int len = static_cast<int>(hist.size());
    // last `history` observations, zero padded at the front
    for (int i = layout.history; i-- > 0;) {
      const int idx = len - 1 - i;
      x.push_back(idx >= 0 ? hist[idx] : 0.0);
    }
  }
  return x;
}

std::vector<double> featurize(const EncodedState& enc, int policy,
                              const FeatureLayout& layout) {
  std::vector<double> x = state_features(enc, layout);
  x.resize(layout.state_dim() + layout.q, 0.0);
  if (policy < 0 || policy >= layout.q)
    throw MetaError(ErrorKind::Argument, "policy index out of range for one-hot block");
  x[layout.state_dim() + policy] = 1.0;
  return x;
}

double SurrogateNet::predict_normalized(std::span<const double> state, int k) const {
  for (double v : state)
    if (!std::isfinite(v))
      throw MetaError(ErrorKind::Argument, "non-finite feature input");
  if (q_heads) {
    return net.forward(state)[k];
  }
  std::vector<double> x(state.begin(), state.end());
  x.resize(layout.state_dim() + layout.q, 0.0);
  x[layout.state_dim() + k] = 1.0;
  return net.forward(x)[0];
}

double SurrogateNet::predict_cost(std::span<const double> state, int k) const {
  return norm.phi_max[k] * predict_normalized(state, k);
}

SurrogateNet make_surrogate(const FeatureLayout& layout, const SurrogateConfig& cfg,
                            uint64_t init_seed) {
  std::vector<int> dims;
  dims.push_back(layout.input_dim(cfg.q_heads));
  for (int h : cfg.hidden) dims.push_back(h);
  dims.push_back(cfg.q_heads ? layout.q : 1);
  Rng rng(init_seed);
  SurrogateNet s;
  s.net = Mlp::init(std::move(dims), /*sigmoid_output=*/true, rng);
  s.layout = layout;
  s.q_heads = cfg.q_heads;
  s.norm.phi_max.assign(layout.q, 1.0);
  return s;
}

double loss_residual(double phi, double phi_hat, double phi_max_k) {
  if (phi_max_k <= 0.0)
    throw MetaError(ErrorKind::Normalizer, "phi_max must be > 0");
  return std::abs(phi - phi_max_k * phi_hat);
}

Normalizer compute_phi_max(const std::vector<TraceRecord>& records, int q) {
  std::vector<double> phi_max(q, 0.0);
  std::vector<bool> seen(q, false);
  for (const auto& r : records) {
    if (r.policy < 0 || r.policy >= q)
      throw MetaError(ErrorKind::Coverage,
                      "trace names policy " + std::to_string(r.policy) +
                          " outside the roster of size " + std::to_string(q));
    seen[r.policy] = true;
    phi_max[r.policy] = std::max(phi_max[r.policy], r.phi);
  }
  for (int k = 0; k < q; ++k) {
    if (!seen[k])
      throw MetaError(ErrorKind::Coverage,
                      "policy " + std::to_string(k) + " absent from the trace");
    if (phi_max[k] <= 0.0)
      throw MetaError(ErrorKind::Coverage,
                      "policy " + std::to_string(k) + " has no positive cost in the trace");
  }
  return Normalizer{std::move(phi_max)};
}

namespace {

// dL/d(output) of the squared residual (phi - phi_max*yhat)^2 for head k.
void record_gradient(const SurrogateNet& s, const TraceRecord& r, Mlp::Grad& grad,
                     double* abs_residual) {
  Mlp::Cache cache;
  std::vector<double> x;
  if (s.q_heads) {
    x.assign(r.state.begin(), r.state.end());
  } else {
    x.assign(r.state.begin(), r.state.end());
    x.resize(s.layout.state_dim() + s.layout.q, 0.0);
    x[s.layout.state_dim() + r.policy] = 1.0;
  }
  const std::vector<double> y = s.net.forward(x, cache);
  const int head = s.q_heads ? r.policy : 0;
  const double phi_max_k = s.norm.phi_max[r.policy];
  const double residual = r.phi - phi_max_k * y[head];
  if (abs_residual != nullptr) *abs_residual = std::abs(residual);
  std::vector<double> dLdy(y.size(), 0.0);
  dLdy[head] = -2.0 * residual * phi_max_k;
  s.net.backward(cache, dLdy, grad);
}

}  // namespace

TrainResult train(SurrogateNet& net, const std::vector<TraceRecord>& records,
                  const SurrogateConfig& cfg, uint64_t shuffle_seed) {
  if (records.empty())
    throw MetaError(ErrorKind::Argument, "cannot train on an empty trace");
  for (int k = 0; k < net.layout.q; ++k)
    if (net.norm.phi_max[k] <= 0.0)
      throw MetaError(ErrorKind::Normalizer, "normalizer not computed before training");

  Rng rng(shuffle_seed);
  const size_t n = records.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;

  Mlp::Grad grad = Mlp::Grad::zeros_like(net.net);
  Mlp::Grad velocity = Mlp::Grad::zeros_like(net.net);
  TrainResult result;
  result.loss_curve.reserve(cfg.epochs);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own RNG keeps the shuffle bit-reproducible.
    for (size_t i = n - 1; i > 0; --i) {
      const size_t j = static_cast<size_t>(rng.uniform_int(static_cast<int>(i + 1)));
      std::swap(order[i], order[j]);
    }
    double loss_sum = 0.0;
    size_t pos = 0;
    while (pos < n) {
      const size_t batch_end = std::min(n, pos + static_cast<size_t>(cfg.batch_size));
      const double batch_n = static_cast<double>(batch_end - pos);
      grad.zero();
      for (size_t i = pos; i < batch_end; ++i) {
        double abs_res = 0.0;
        record_gradient(net, records[order[i]], grad, &abs_res);
        loss_sum += abs_res;
      }
      grad.scale(1.0 / batch_n);  // mean over the batch
      net.net.apply_momentum_sgd(grad, cfg.lr, cfg.momentum, velocity);
      pos = batch_end;
    }
    const double mean_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(mean_loss) || !net.net.finite())
      throw MetaError(ErrorKind::Divergence,
                      "training diverged at epoch " + std::to_string(epoch));
    result.loss_curve.push_back(mean_loss);
  }
  return result;
}

void online_update(SurrogateNet& net, const TraceRecord& record, double lr_online) {
  if (record.policy < 0 || record.policy >= net.layout.q)
    throw MetaError(ErrorKind::Argument, "online update with unknown policy");
  if (record.phi > net.norm.phi_max[record.policy])
    net.norm.phi_max[record.policy] = record.phi;  // running max
  Mlp::Grad grad = Mlp::Grad::zeros_like(net.net);
  record_gradient(net, record, grad, nullptr);
  Mlp::Grad velocity = Mlp::Grad::zeros_like(net.net);
  net.net.apply_momentum_sgd(grad, lr_online, 0.0, velocity);
  if (!net.net.finite())
    throw MetaError(ErrorKind::Divergence, "online update produced non-finite parameters");
}

double grad_check(const SurrogateNet& net, std::span<const double> x_state, int k,
                  double phi, double epsilon) {
  if (epsilon <= 0.0) throw MetaError(ErrorKind::Argument, "epsilon must be > 0");

  TraceRecord r;
  r.policy = k;
  r.phi = phi;
  r.state.assign(x_state.begin(), x_state.end());

  Mlp::Grad grad = Mlp::Grad::zeros_like(net.net);
  record_gradient(net, r, grad, nullptr);

  SurrogateNet probe = net;
  const double phi_max_k = net.norm.phi_max[k];
  std::vector<double> x;
  if (net.q_heads) {
    x = r.state;
  } else {
    x = r.state;
    x.resize(net.layout.state_dim() + net.layout.q, 0.0);
    x[net.layout.state_dim() + r.policy] = 1.0;
  }
  const int head = net.q_heads ? k : 0;

  // Loss and the ReLU activation mask; central differences are only valid
  // where no hidden unit switches inside [theta-eps, theta+eps].
  auto probe_loss = [&](std::vector<bool>& mask) {
    Mlp::Cache cache;
    const double yhat = probe.net.forward(x, cache)[head];
    mask.clear();
    for (size_t l = 1; l + 1 < cache.act.size(); ++l)
      for (double a : cache.act[l]) mask.push_back(a > 0.0);
    const double res = phi - phi_max_k * yhat;
    return res * res;
  };

  double worst = 0.0;
  const size_t params = net.net.param_count();
  std::vector<bool> mask_up, mask_down;
  for (size_t i = 0; i < params; ++i) {
    const double orig = net.net.get_param(i);
    probe.net.set_param(i, orig + epsilon);
    const double up = probe_loss(mask_up);
    probe.net.set_param(i, orig - epsilon);
    const double down = probe_loss(mask_down);
    probe.net.set_param(i, orig);
    if (mask_up != mask_down) continue;  // kink inside the stencil
    const double numeric = (up - down) / (2.0 * epsilon);
    const double analytic = net.net.grad_param(grad, i);
    const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-5});
    worst = std::max(worst, std::abs(numeric - analytic) / denom);
  }
  return worst;
}

void save_checkpoint(const SurrogateNet& net, const std::string& path) {
  json j{{"version", 1},
         {"layout",
          {{"n_hosts", net.layout.n_hosts},
           {"history", net.layout.history},
           {"q", net.layout.q}}},
         {"q_heads", net.q_heads},
         {"dims", net.net.dims},
         {"w", net.net.w},
         {"b", net.net.b},
         {"phi_max", net.norm.phi_max}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MetaError(ErrorKind::Io, "cannot write checkpoint: " + path);
  out << j.dump() << '\n';
  if (!out) throw MetaError(ErrorKind::Io, "checkpoint write failed: " + path);
}

SurrogateNet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MetaError(ErrorKind::Checkpoint, "cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw MetaError(ErrorKind::Checkpoint, std::string("bad checkpoint: ") + e.what());
  }
  if (j.value("version", 0) != 1)
    throw MetaError(ErrorKind::Checkpoint, "unsupported checkpoint version");
  SurrogateNet s;
  s.layout.n_hosts = j.at("layout").at("n_hosts").get<int>();
  s.layout.history = j.at("layout").at("history").get<int>();
  s.layout.q = j.at("layout").at("q").get<int>();
  s.q_heads = j.value("q_heads", false);
  s.net.dims = j.at("dims").get<std::vector<int>>();
  s.net.sigmoid_output = true;
  s.net.w = j.at("w").get<std::vector<std::vector<double>>>();
  s.net.b = j.at("b").get<std::vector<std::vector<double>>>();
  s.norm.phi_max = j.at("phi_max").get<std::vector<double>>();
  if (static_cast<int>(s.norm.phi_max.size()) != s.layout.q)
    throw MetaError(ErrorKind::Checkpoint, "checkpoint phi_max length mismatch");
  if (!s.net.finite())
    throw MetaError(ErrorKind::Checkpoint, "checkpoint holds non-finite parameters");
  return s;
}

void check_layout(const SurrogateNet& net, const FeatureLayout& expected) {
  if (!(net.layout == expected)) {
    std::ostringstream ss;
    ss << "checkpoint layout (hosts=" << net.layout.n_hosts
       << ", history=" << net.layout.history << ", q=" << net.layout.q
       << ") does not match environment (hosts=" << expected.n_hosts
       << ", history=" << expected.history << ", q=" << expected.q << ")";
    throw MetaError(ErrorKind::Checkpoint, ss.str());
  }
}

}  // namespace metanet
