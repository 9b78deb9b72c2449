#include "dvo/mlp.hpp"

#include <cmath>

namespace dvo {

Mlp Mlp::xavier_init(int in_dim, int hidden_dim, int out_dim, Rng& rng) {
  Mlp net;
  net.in_dim = in_dim;
  net.hidden_dim = hidden_dim;
  net.out_dim = out_dim;
  net.w1.resize(static_cast<std::size_t>(hidden_dim) * in_dim);
  net.b1.assign(hidden_dim, 0.0);
  net.w2.resize(static_cast<std::size_t>(out_dim) * hidden_dim);
  net.b2.assign(out_dim, 0.0);
  const double a1 = std::sqrt(6.0 / (in_dim + hidden_dim));
  for (double& w : net.w1) w = rng.uniform(-a1, a1);
  const double a2 = std::sqrt(6.0 / (hidden_dim + out_dim));
  for (double& w : net.w2) w = rng.uniform(-a2, a2);
  return net;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  std::vector<double> h(hidden_dim);
  for (int j = 0; j < hidden_dim; ++j) {
    double z = b1[j];
    const double* row = &w1[static_cast<std::size_t>(j) * in_dim];
    for (int i = 0; i < in_dim; ++i) z += row[i] * x[i];
    h[j] = std::tanh(z);
  }
  std::vector<double> out(out_dim);
  for (int k = 0; k < out_dim; ++k) {
    double z = b2[k];
    const double* row = &w2[static_cast<std::size_t>(k) * hidden_dim];
    for (int j = 0; j < hidden_dim; ++j) z += row[j] * h[j];
    out[k] = z;
  }
  return out;
}

Mlp::Trace Mlp::forward_trace(std::span<const double> x) const {
  Trace t;
  t.x.assign(x.begin(), x.end());
  t.hidden.resize(hidden_dim);
  for (int j = 0; j < hidden_dim; ++j) {
    double z = b1[j];
    const double* row = &w1[static_cast<std::size_t>(j) * in_dim];
    for (int i = 0; i < in_dim; ++i) z += row[i] * x[i];
    t.hidden[j] = std::tanh(z);
  }
  t.out.resize(out_dim);
  for (int k = 0; k < out_dim; ++k) {
    double z = b2[k];
    const double* row = &w2[static_cast<std::size_t>(k) * hidden_dim];
    for (int j = 0; j < hidden_dim; ++j) z += row[j] * t.hidden[j];
    t.out[k] = z;
  }
  return t;
}

void Mlp::backprop(const Trace& t, std::span<const double> d_out, double coeff,
                   MlpGrad& g) const {
  // Output layer.
  for (int k = 0; k < out_dim; ++k) {
    const double dk = coeff * d_out[k];
    if (dk == 0.0) continue;
    double* grow = &g.w2[static_cast<std::size_t>(k) * hidden_dim];
    for (int j = 0; j < hidden_dim; ++j) grow[j] += dk * t.hidden[j];
    g.b2[k] += dk;
  }
  // Hidden layer: dz1 = (W2^T d_out) * (1 - h^2).
  for (int j = 0; j < hidden_dim; ++j) {
    double dh = 0.0;
    for (int k = 0; k < out_dim; ++k) {
      dh += w2[static_cast<std::size_t>(k) * hidden_dim + j] * d_out[k];
    }
    const double dz = coeff * dh * (1.0 - t.hidden[j] * t.hidden[j]);
    if (dz == 0.0) continue;
    double* grow = &g.w1[static_cast<std::size_t>(j) * in_dim];
    for (int i = 0; i < in_dim; ++i) grow[i] += dz * t.x[i];
    g.b1[j] += dz;
  }
}

void MlpGrad::init_like(const Mlp& net) {
  w1.assign(net.w1.size(), 0.0);
  b1.assign(net.b1.size(), 0.0);
  w2.assign(net.w2.size(), 0.0);
  b2.assign(net.b2.size(), 0.0);
}

void MlpGrad::scale(double s) {
  for (double& v : w1) v *= s;
  for (double& v : b1) v *= s;
  for (double& v : w2) v *= s;
  for (double& v : b2) v *= s;
}

void MlpGrad::add_scaled(const MlpGrad& other, double s) {
  for (std::size_t i = 0; i < w1.size(); ++i) w1[i] += s * other.w1[i];
  for (std::size_t i = 0; i < b1.size(); ++i) b1[i] += s * other.b1[i];
  for (std::size_t i = 0; i < w2.size(); ++i) w2[i] += s * other.w2[i];
  for (std::size_t i = 0; i < b2.size(); ++i) b2[i] += s * other.b2[i];
}

}  // namespace dvo
