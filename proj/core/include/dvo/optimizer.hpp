#pragma once

#include <map>

#include "dvo/mlp.hpp"
#include "dvo/policy.hpp"

namespace dvo {

struct OptimizerConfig {
  enum class Kind { sgd, adam };
  Kind kind = Kind::adam;
  double lr = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Gradient-descent stepper over policy parameters. Adam moments for tabular
/// rows are materialized lazily, keyed like the rows themselves; the bias
/// correction uses the global step count.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  const OptimizerConfig& config() const { return config_; }

  /// One descent step against the loss gradient.
  void step(PolicyParams& params, const PolicyGrad& grad);

 private:
  OptimizerConfig config_;
  long long t_ = 0;
  std::map<StateKey, std::vector<double>> m_rows_, v_rows_;
  MlpGrad m_net_, v_net_;
  bool net_state_ready_ = false;
};

}  // namespace dvo
