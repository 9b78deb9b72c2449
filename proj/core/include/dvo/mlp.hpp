#pragma once

#include <span>
#include <vector>

#include "dvo/rng.hpp"

namespace dvo {

struct MlpGrad;

/// Two-layer perceptron: in -> tanh(hidden) -> linear out. Small enough at
/// desk scale that plain loops beat pulling in a linear-algebra dependency.
struct Mlp {
  int in_dim = 0;
  int hidden_dim = 0;
  int out_dim = 0;
  std::vector<double> w1;  // hidden_dim x in_dim, row-major
  std::vector<double> b1;  // hidden_dim
  std::vector<double> w2;  // out_dim x hidden_dim, row-major
  std::vector<double> b2;  // out_dim

  static Mlp xavier_init(int in_dim, int hidden_dim, int out_dim, Rng& rng);

  std::vector<double> forward(std::span<const double> x) const;

  /// Activations cached for backprop.
  struct Trace {
    std::vector<double> x;
    std::vector<double> hidden;
    std::vector<double> out;
  };
  Trace forward_trace(std::span<const double> x) const;

  /// Accumulates coeff * d(out . d_out)/d(params) into g.
  void backprop(const Trace& t, std::span<const double> d_out, double coeff,
                MlpGrad& g) const;

  std::size_t param_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
  }
};

struct MlpGrad {
  std::vector<double> w1, b1, w2, b2;

  void init_like(const Mlp& net);
  void scale(double s);
  void add_scaled(const MlpGrad& other, double s);
};

}  // namespace dvo
