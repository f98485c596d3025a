#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "metanet/rng.hpp"

namespace metanet {

// Small dense feed-forward network with ReLU hidden layers; the output layer
// is sigmoid (cost surrogate) or identity (Q values). Plain double loops —
// the nets here are tiny and determinism matters more than peak FLOPs.
struct Mlp {
  std::vector<int> dims;       // e.g. {d_in, 64, 64, 64, 1}
  bool sigmoid_output = true;
  std::vector<std::vector<double>> w;  // w[l]: dims[l+1] x dims[l], row-major
  std::vector<std::vector<double>> b;  // b[l]: dims[l+1]

  static Mlp init(std::vector<int> dims, bool sigmoid_output, Rng& rng);

  struct Cache {
    std::vector<std::vector<double>> act;  // act[0] = input, act[L] = output
  };

  std::vector<double> forward(std::span<const double> x) const;
  std::vector<double> forward(std::span<const double> x, Cache& cache) const;

  struct Grad {
    std::vector<std::vector<double>> w, b;

    static Grad zeros_like(const Mlp& m);
    void zero();
    void add_scaled(const Grad& other, double scale);
    void scale(double s);
  };

  // Accumulates parameter gradients for dL/dy into `grad`.
  void backward(const Cache& cache, std::span<const double> dLdy, Grad& grad) const;

  // Momentum SGD: v = momentum*v - lr*g; theta += v.
  void apply_momentum_sgd(const Grad& grad, double lr, double momentum, Grad& velocity);

  size_t param_count() const;
  double get_param(size_t i) const;
  void set_param(size_t i, double v);
  double grad_param(const Grad& g, size_t i) const;

  bool finite() const;
  bool operator==(const Mlp&) const = default;
};

std::string mlp_to_json(const Mlp& m);
Mlp mlp_from_json(const std::string& text);

}  // namespace metanet
