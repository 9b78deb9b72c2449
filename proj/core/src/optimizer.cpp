#include "dvo/optimizer.hpp"

#include <cmath>

namespace dvo {

namespace {

void adam_update(double g, double& m, double& v, double& param, double lr,
                 const OptimizerConfig& cfg, double bias1, double bias2) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
  const double m_hat = m / bias1;
  const double v_hat = v / bias2;
  param -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
}

}  // namespace

void Optimizer::step(PolicyParams& params, const PolicyGrad& grad) {
  if (config_.kind == OptimizerConfig::Kind::sgd) {
    apply_update(params, grad, -config_.lr);
    return;
  }
  t_ += 1;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));

  if (params.kind == PolicyKind::tabular) {
    for (const auto& [key, row] : grad.rows) {
      auto [pit, pinserted] = params.table.try_emplace(
          key, std::vector<double>(params.num_actions, 0.0));
      auto [mit, minserted] =
          m_rows_.try_emplace(key, std::vector<double>(row.size(), 0.0));
      auto [vit, vinserted] =
          v_rows_.try_emplace(key, std::vector<double>(row.size(), 0.0));
      for (std::size_t j = 0; j < row.size(); ++j) {
        adam_update(row[j], mit->second[j], vit->second[j], pit->second[j],
                    config_.lr, config_, bias1, bias2);
      }
    }
    return;
  }

  if (!net_state_ready_) {
    m_net_.init_like(params.net);
    v_net_.init_like(params.net);
    net_state_ready_ = true;
  }
  auto run = [&](const std::vector<double>& g, std::vector<double>& m,
                 std::vector<double>& v, std::vector<double>& p) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      adam_update(g[i], m[i], v[i], p[i], config_.lr, config_, bias1, bias2);
    }
  };
  run(grad.net.w1, m_net_.w1, v_net_.w1, params.net.w1);
  run(grad.net.b1, m_net_.b1, v_net_.b1, params.net.b1);
  run(grad.net.w2, m_net_.w2, v_net_.w2, params.net.w2);
  run(grad.net.b2, m_net_.b2, v_net_.b2, params.net.b2);
}

}  // namespace dvo
