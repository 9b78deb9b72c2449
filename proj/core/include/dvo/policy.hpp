#pragma once

#include <map>
#include <string>
#include <vector>

#include "dvo/mlp.hpp"
#include "dvo/rng.hpp"
#include "dvo/step_mdp.hpp"

namespace dvo {

enum class PolicyKind { tabular, mlp };

/// Differentiable softmax policy over step actions. The action distribution
/// is softmax(logits(s) / beta), so the logits play the role of a soft
/// Q-function at temperature beta.
///
/// Tabular policies materialize logit rows lazily: an absent row behaves as
/// all zeros, i.e. a uniform distribution over the B actions.
struct PolicyParams {
  PolicyKind kind = PolicyKind::tabular;
  double beta = 0.1;
  int num_actions = 2;

  // tabular: state key -> logit vector of length num_actions.
  std::map<StateKey, std::vector<double>> table;

  // mlp: (depth*num_actions + 1) -> hidden -> num_actions.
  int mlp_depth = 0;
  Mlp net;

  static PolicyParams make_tabular(int num_actions, double beta);
  static PolicyParams make_mlp(int num_actions, int depth, int hidden,
                               double beta, Rng& rng);

  /// Logits for a state; tabular rows default to zeros without insertion.
  std::vector<double> logits(const TaskSpec& task, const State& s) const;

  /// Mutable tabular row, materializing the default if absent.
  std::vector<double>& logits_row(const State& s);
};

/// Frozen deep copy; the reference policy of the log-ratio objectives.
class PolicySnapshot {
 public:
  explicit PolicySnapshot(const PolicyParams& params) : params_(params) {}
  const PolicyParams& params() const { return params_; }

 private:
  PolicyParams params_;
};

PolicySnapshot snapshot(const PolicyParams& params);

/// Probability vector over the B actions at a non-terminal state.
std::vector<double> action_distribution(const PolicyParams& params,
                                        const TaskSpec& task, const State& s);
std::vector<double> action_distribution(const PolicySnapshot& ref,
                                        const TaskSpec& task, const State& s);

double log_prob(const PolicyParams& params, const TaskSpec& task,
                const State& s, Action a);
double log_prob(const PolicySnapshot& ref, const TaskSpec& task,
                const State& s, Action a);

/// Samples a full root-to-terminal trajectory. sampling_temperature applies
/// multiplicatively on top of the beta softmax (1.0 samples the policy
/// itself; values near zero approach the greedy path). Recorded per-step
/// log-probs are always those of the unmodified policy.
Trajectory sample_trajectory(const PolicyParams& params, const TaskSpec& task,
                             Rng& rng, double sampling_temperature = 1.0);

/// Policy rollout from an arbitrary state; returns the outcome reward.
double rollout_from(const PolicyParams& params, const TaskSpec& task,
                    const State& start, Rng& rng,
                    double sampling_temperature = 1.0);

/// Gradient container with the same shape as PolicyParams. Tabular rows are
/// sparse: only touched states appear.
struct PolicyGrad {
  std::map<StateKey, std::vector<double>> rows;
  MlpGrad net;

  void init_like(const PolicyParams& params);
  void scale(double s);
  double max_abs() const;
};

/// Accumulates coeff * d(log pi(a|s))/d(params) into grad.
void accumulate_grad_log_prob(const PolicyParams& params, const TaskSpec& task,
                              const State& s, Action a, double coeff,
                              PolicyGrad& grad);

/// Analytic gradient of log pi(a|s); convenience wrapper over the above.
PolicyGrad grad_log_prob(const PolicyParams& params, const TaskSpec& task,
                         const State& s, Action a);

/// params += scale * grad. Tabular rows are materialized on demand.
void apply_update(PolicyParams& params, const PolicyGrad& grad, double scale);

}  // namespace dvo
