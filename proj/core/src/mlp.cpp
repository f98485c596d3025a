#include "metanet/mlp.hpp"

#include <cmath>

#include "json.hpp"
#include "metanet/error.hpp"

namespace metanet {

using nlohmann::json;

Mlp Mlp::init(std::vector<int> dims, bool sigmoid_output, Rng& rng) {
  if (dims.size() < 2)
    throw MetaError(ErrorKind::Argument, "mlp needs at least input and output dims");
  Mlp m;
  m.dims = std::move(dims);
  m.sigmoid_output = sigmoid_output;
  const size_t layers = m.dims.size() - 1;
  m.w.resize(layers);
  m.b.resize(layers);
  for (size_t l = 0; l < layers; ++l) {
    const int fan_in = m.dims[l], fan_out = m.dims[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    m.w[l].resize(static_cast<size_t>(fan_in) * fan_out);
    for (double& v : m.w[l]) v = rng.uniform(-bound, bound);
    m.b[l].assign(fan_out, 0.0);
  }
  return m;
}

static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Cache cache;
  return forward(x, cache);
}

std::vector<double> Mlp::forward(std::span<const double> x, Cache& cache) const {
  if (static_cast<int>(x.size()) != dims.front())
    throw MetaError(ErrorKind::Argument, "mlp input size mismatch");
  const size_t layers = w.size();
  cache.act.assign(layers + 1, {});
  cache.act[0].assign(x.begin(), x.end());

  for (size_t l = 0; l < layers; ++l) {
    const int in = dims[l], out = dims[l + 1];
    const auto& prev = cache.act[l];
    auto& cur = cache.act[l + 1];
    cur.assign(out, 0.0);
    for (int o = 0; o < out; ++o) {
      double z = b[l][o];
      const double* row = &w[l][static_cast<size_t>(o) * in];
      for (int i = 0; i < in; ++i) z += row[i] * prev[i];
      if (l + 1 < layers) {
        cur[o] = z > 0.0 ? z : 0.0;  // ReLU
      } else {
        cur[o] = sigmoid_output ? sigmoid(z) : z;
      }
    }
  }
  return cache.act.back();
}

Mlp::Grad Mlp::Grad::zeros_like(const Mlp& m) {
  Grad g;
  g.w.resize(m.w.size());
  g.b.resize(m.b.size());
  for (size_t l = 0; l < m.w.size(); ++l) {
    g.w[l].assign(m.w[l].size(), 0.0);
    g.b[l].assign(m.b[l].size(), 0.0);
  }
  return g;
}

void Mlp::Grad::zero() {
  for (auto& layer : w) std::fill(layer.begin(), layer.end(), 0.0);
  for (auto& layer : b) std::fill(layer.begin(), layer.end(), 0.0);
}

void Mlp::Grad::add_scaled(const Grad& other, double scale) {
  for (size_t l = 0; l < w.size(); ++l) {
    for (size_t i = 0; i < w[l].size(); ++i) w[l][i] += scale * other.w[l][i];
    for (size_t i = 0; i < b[l].size(); ++i) b[l][i] += scale * other.b[l][i];
  }
}

void Mlp::Grad::scale(double s) {
  for (auto& layer : w)
    for (double& v : layer) v *= s;
  for (auto& layer : b)
    for (double& v : layer) v *= s;
}

void Mlp::backward(const Cache& cache, std::span<const double> dLdy, Grad& grad) const {
  const size_t layers = w.size();
  // delta = dL/dz of the current layer
  std::vector<double> delta(dLdy.begin(), dLdy.end());
  if (sigmoid_output) {
    const auto& y = cache.act[layers];
    for (size_t o = 0; o < delta.size(); ++o) delta[o] *= y[o] * (1.0 - y[o]);
  }

  for (size_t l = layers; l-- > 0;) {
    const int in = dims[l], out = dims[l + 1];
    const auto& prev = cache.act[l];
    for (int o = 0; o < out; ++o) {
      grad.b[l][o] += delta[o];
      double* grow = &grad.w[l][static_cast<size_t>(o) * in];
      for (int i = 0; i < in; ++i) grow[i] += delta[o] * prev[i];
    }
    if (l == 0) break;
    std::vector<double> prev_delta(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double* row = &w[l][static_cast<size_t>(o) * in];
      for (int i = 0; i < in; ++i) prev_delta[i] += row[i] * delta[o];
    }
    // ReLU derivative through cached activations of layer l
    for (int i = 0; i < in; ++i)
      if (prev[i] <= 0.0) prev_delta[i] = 0.0;
    delta = std::move(prev_delta);
  }
}

void Mlp::apply_momentum_sgd(const Grad& grad, double lr, double momentum,
                             Grad& velocity) {
  for (size_t l = 0; l < w.size(); ++l) {
    for (size_t i = 0; i < w[l].size(); ++i) {
      velocity.w[l][i] = momentum * velocity.w[l][i] - lr * grad.w[l][i];
      w[l][i] += velocity.w[l][i];
    }
    for (size_t i = 0; i < b[l].size(); ++i) {
      velocity.b[l][i] = momentum * velocity.b[l][i] - lr * grad.b[l][i];
      b[l][i] += velocity.b[l][i];
    }
  }
}

size_t Mlp::param_count() const {
  size_t n = 0;
  for (size_t l = 0; l < w.size(); ++l) n += w[l].size() + b[l].size();
  return n;
}

double Mlp::get_param(size_t i) const {
  for (size_t l = 0; l < w.size(); ++l) {
    if (i < w[l].size()) return w[l][i];
    i -= w[l].size();
    if (i < b[l].size()) return b[l][i];
    i -= b[l].size();
  }
  throw MetaError(ErrorKind::Argument, "mlp parameter index out of range");
}

void Mlp::set_param(size_t i, double v) {
  for (size_t l = 0; l < w.size(); ++l) {
    if (i < w[l].size()) { w[l][i] = v; return; }
    i -= w[l].size();
    if (i < b[l].size()) { b[l][i] = v; return; }
    i -= b[l].size();
  }
  throw MetaError(ErrorKind::Argument, "mlp parameter index out of range");
}

double Mlp::grad_param(const Grad& g, size_t i) const {
  for (size_t l = 0; l < g.w.size(); ++l) {
    if (i < g.w[l].size()) return g.w[l][i];
    i -= g.w[l].size();
    if (i < g.b[l].size()) return g.b[l][i];
    i -= g.b[l].size();
  }
  throw MetaError(ErrorKind::Argument, "mlp parameter index out of range");
}

bool Mlp::finite() const {
  for (const auto& layer : w)
    for (double v : layer)
      if (!std::isfinite(v)) return false;
  for (const auto& layer : b)
    for (double v : layer)
      if (!std::isfinite(v)) return false;
  return true;
}

std::string mlp_to_json(const Mlp& m) {
  json j{{"dims", m.dims},
         {"sigmoid_output", m.sigmoid_output},
         {"w", m.w},
         {"b", m.b}};
  return j.dump();
}

Mlp mlp_from_json(const std::string& text) {
  json j = json::parse(text);
  Mlp m;
  m.dims = j.at("dims").get<std::vector<int>>();
  m.sigmoid_output = j.at("sigmoid_output").get<bool>();
  m.w = j.at("w").get<std::vector<std::vector<double>>>();
  m.b = j.at("b").get<std::vector<std::vector<double>>>();
  return m;
}

}  // namespace metanet
