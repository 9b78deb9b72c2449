#pragma once

#include <functional>
#include <map>
#include <vector>

#include "dvo/policy.hpp"
#include "dvo/step_mdp.hpp"

namespace dvo {

enum class RewardConvention { raw, kl_regularized };

/// Exact soft state values over a full task tree. V(terminal) = 0 always.
struct ValueTable {
  std::map<StateKey, double> v;
  double beta = 0.1;
  RewardConvention convention = RewardConvention::raw;

  double at(StateKey key) const;
};

/// Per-step reward r(s, a) of taking a at s. The built-in task reward is
/// zero everywhere except the final step, which pays the outcome.
using StepRewardFn = std::function<double(const State&, Action)>;

StepRewardFn outcome_reward_fn(const TaskSpec& task);

/// Backward soft-Bellman recursion at temperature beta over an arbitrary
/// step-reward function:
///   V(s) = beta * log sum_a exp((r(s,a) + V(s·a)) / beta)
/// or, when ref is given, the KL-regularized form
///   V(s) = beta * log sum_a pi_ref(a|s) * exp((r(s,a) + V(s·a)) / beta).
ValueTable soft_bellman_values(const TaskSpec& task, double beta,
                               const StepRewardFn& reward,
                               const PolicySnapshot* ref = nullptr);

/// Soft values under the raw task reward (outcome at the final step).
ValueTable exact_soft_v(const TaskSpec& task, double beta);

/// Soft values when the step reward is augmented with beta*log pi_ref, the
/// KL-regularized convention of the log-ratio objectives.
ValueTable exact_soft_v_kl(const TaskSpec& task, double beta,
                           const PolicySnapshot& ref);

/// Soft Q(s, a) = r(s, a) + V(s·a) read out of a value table.
double soft_q(const TaskSpec& task, const ValueTable& table,
              const StepRewardFn& reward, const State& s, Action a);

/// Optimal policy induced by a value table:
///   raw:  pi*(a|s) = exp((Q(s,a) - V(s)) / beta)
///   kl:   pi*(a|s) = pi_ref(a|s) * exp((r + V(s·a) - V(s)) / beta)
/// Normalization per state is a theorem for consistent tables, not a
/// renormalization step; a deviation beyond 1e-6 raises IntegrityError.
std::map<StateKey, std::vector<double>> optimal_policy_from_values(
    const TaskSpec& task, const ValueTable& table, const StepRewardFn& reward,
    const PolicySnapshot* ref = nullptr);

std::map<StateKey, std::vector<double>> optimal_policy_from_values(
    const TaskSpec& task, const ValueTable& table);

/// The reward table under which the policy's logits are an optimal soft
/// Q-function: r(s,a) = l(s)[a] - beta*logsumexp(l(s·a)/beta), with the
/// final-step convention V(terminal) = 0 so r there is the logit itself.
/// Tabular policies only.
std::map<StateKey, std::vector<double>> implied_reward_from_logits(
    const PolicyParams& params, const TaskSpec& task);

/// Adapts an implied-reward table to a StepRewardFn.
StepRewardFn reward_fn_from_table(
    const std::map<StateKey, std::vector<double>>& rewards);

/// Plain Monte Carlo estimate of the expected (non-soft) outcome reward of
/// policy rollouts from s.
double mc_rollout_value(const PolicyParams& params, const TaskSpec& task,
                        const State& s, int n_rollouts, Rng& rng);

/// Writes {state_key, V} JSON lines.
std::string value_table_to_jsonl(const ValueTable& table);

}  // namespace dvo
