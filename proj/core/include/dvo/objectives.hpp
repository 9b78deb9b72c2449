#pragma once

#include <span>
#include <vector>

#include "dvo/policy.hpp"
#include "dvo/step_mdp.hpp"
#include "dvo/training_data.hpp"

namespace dvo {

struct LossResult {
  double loss = 0.0;
  PolicyGrad grad;
};

/// MSE regression of the per-step implicit reward onto frozen targets:
///   mean over steps of 1/2 * (beta * log(pi/pi_ref) - delta)^2.
/// Response-level batches pool the log-ratios of a whole trajectory into a
/// single macro step against its single target. beta is taken from params;
/// no gradient flows through the targets.
LossResult dvo_loss(const TrainingBatch& batch, const TaskPool& tasks,
                    const PolicyParams& params, const PolicySnapshot& ref);

/// -log sigmoid(beta*(log-ratio(win) - log-ratio(lose))), response-level
/// log-ratios summed over steps, averaged over pairs.
LossResult dpo_loss(std::span<const TrajectoryPair> pairs,
                    const TaskPool& tasks, const PolicyParams& params,
                    const PolicySnapshot& ref);

/// DPO on single-step log ratios of sibling actions at a shared state.
LossResult step_dpo_loss(std::span<const StepPair> pairs,
                         const TaskPool& tasks, const PolicyParams& params,
                         const PolicySnapshot& ref);

/// Unpaired preference loss. With u = beta * sum of log ratios and the
/// detached batch mean z as reference point:
///   mean[ lambda_pos * (1 - sigmoid(u - z))   over positives,
///         lambda_neg * (1 - sigmoid(z - u))   over negatives ].
LossResult kto_loss(std::span<const LabeledTrajectory> batch,
                    const TaskPool& tasks, const PolicyParams& params,
                    const PolicySnapshot& ref, double lambda_pos = 1.33,
                    double lambda_neg = 1.0);

/// Mean negative log-likelihood over the steps of positive trajectories.
LossResult rft_loss(std::span<const Trajectory> positives,
                    const TaskPool& tasks, const PolicyParams& params);

/// beta * sum_t log(pi(a_t|s_t) / pi_ref(a_t|s_t)); the constant V*(s_0)
/// baseline is excluded.
double implicit_reward(const TaskSpec& task, const Trajectory& traj,
                       const PolicyParams& params, const PolicySnapshot& ref);

/// Per-step beta * log ratio; sums to the trajectory's implicit reward.
std::vector<double> dvo_credit(const TaskSpec& task, const Trajectory& traj,
                               const PolicyParams& params,
                               const PolicySnapshot& ref);

}  // namespace dvo
