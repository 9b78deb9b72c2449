#include "dvo/objectives.hpp"

#include <cmath>

#include "dvo/numerics.hpp"

namespace dvo {

namespace {

/// log(1 + exp(z)) without overflow; -log sigmoid(m) == softplus(-m).
double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

/// Sum over the trajectory of log pi_theta - log pi_ref, optionally
/// accumulating coeff * grad(log pi_theta) per step into grad.
double log_ratio_sum(const TaskSpec& task, const Trajectory& traj,
                     const PolicyParams& params, const PolicySnapshot& ref) {
  double total = 0.0;
  State s = task.root();
  for (int a : traj.actions) {
    total += log_prob(params, task, s, Action{a}) -
             log_prob(ref, task, s, Action{a});
    s = task.transition(s, Action{a});
  }
  return total;
}

void accumulate_trajectory_grad(const TaskSpec& task, const Trajectory& traj,
                                const PolicyParams& params, double coeff,
                                PolicyGrad& grad) {
  State s = task.root();
  for (int a : traj.actions) {
    accumulate_grad_log_prob(params, task, s, Action{a}, coeff, grad);
    s = task.transition(s, Action{a});
  }
}

}  // namespace

LossResult dvo_loss(const TrainingBatch& batch, const TaskPool& tasks,
                    const PolicyParams& params, const PolicySnapshot& ref) {
  LossResult result;
  result.grad.init_like(params);
  const double beta = params.beta;
  std::size_t count = 0;

  if (batch.granularity == Granularity::response) {
    for (const LabeledTrajectory& item : batch.items) {
      const TaskSpec& task = tasks.at(item.traj.task_id);
      const double residual =
          beta * log_ratio_sum(task, item.traj, params, ref) -
          item.targets.at(0);
      result.loss += 0.5 * residual * residual;
      accumulate_trajectory_grad(task, item.traj, params, residual * beta,
                                 result.grad);
      ++count;
    }
  } else {
    for (const LabeledTrajectory& item : batch.items) {
      const TaskSpec& task = tasks.at(item.traj.task_id);
      State s = task.root();
      for (std::size_t t = 0; t < item.traj.actions.size(); ++t) {
        const Action a{item.traj.actions[t]};
        const double ratio =
            log_prob(params, task, s, a) - log_prob(ref, task, s, a);
        const double residual = beta * ratio - item.targets[t];
        result.loss += 0.5 * residual * residual;
        accumulate_grad_log_prob(params, task, s, a, residual * beta,
                                 result.grad);
        s = task.transition(s, a);
        ++count;
      }
    }
  }
  if (count > 0) {
    const double inv = 1.0 / static_cast<double>(count);
    result.loss *= inv;
    result.grad.scale(inv);
  }
  return result;
}

LossResult dpo_loss(std::span<const TrajectoryPair> pairs,
                    const TaskPool& tasks, const PolicyParams& params,
                    const PolicySnapshot& ref) {
  if (pairs.empty()) throw ConfigError("dpo_loss needs at least one pair");
  LossResult result;
  result.grad.init_like(params);
  const double beta = params.beta;
  for (const TrajectoryPair& pair : pairs) {
    const TaskSpec& task = tasks.at(pair.win.task_id);
    const double margin = beta * (log_ratio_sum(task, pair.win, params, ref) -
                                  log_ratio_sum(task, pair.lose, params, ref));
    result.loss += softplus(-margin);
    const double d_margin = sigmoid(margin) - 1.0;
    accumulate_trajectory_grad(task, pair.win, params, d_margin * beta,
                               result.grad);
    accumulate_trajectory_grad(tasks.at(pair.lose.task_id), pair.lose, params,
                               -d_margin * beta, result.grad);
  }
  const double inv = 1.0 / static_cast<double>(pairs.size());
  result.loss *= inv;
  result.grad.scale(inv);
  return result;
}

LossResult step_dpo_loss(std::span<const StepPair> pairs,
                         const TaskPool& tasks, const PolicyParams& params,
                         const PolicySnapshot& ref) {
  if (pairs.empty()) {
    throw ConfigError("step_dpo_loss needs at least one pair");
  }
  LossResult result;
  result.grad.init_like(params);
  const double beta = params.beta;
  for (const StepPair& pair : pairs) {
    const TaskSpec& task = tasks.at(pair.task_id);
    const State s = task.make_state(pair.prefix);
    const Action win{pair.action_win};
    const Action lose{pair.action_lose};
    const double ratio_win =
        log_prob(params, task, s, win) - log_prob(ref, task, s, win);
    const double ratio_lose =
        log_prob(params, task, s, lose) - log_prob(ref, task, s, lose);
    const double margin = beta * (ratio_win - ratio_lose);
    result.loss += softplus(-margin);
    const double d_margin = sigmoid(margin) - 1.0;
    accumulate_grad_log_prob(params, task, s, win, d_margin * beta,
                             result.grad);
    accumulate_grad_log_prob(params, task, s, lose, -d_margin * beta,
                             result.grad);
  }
  const double inv = 1.0 / static_cast<double>(pairs.size());
  result.loss *= inv;
  result.grad.scale(inv);
  return result;
}

LossResult kto_loss(std::span<const LabeledTrajectory> batch,
                    const TaskPool& tasks, const PolicyParams& params,
                    const PolicySnapshot& ref, double lambda_pos,
                    double lambda_neg) {
  if (batch.empty()) throw ConfigError("kto_loss needs a nonempty batch");
  LossResult result;
  result.grad.init_like(params);
  const double beta = params.beta;

  std::vector<double> u(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const TaskSpec& task = tasks.at(batch[i].traj.task_id);
    u[i] = beta * log_ratio_sum(task, batch[i].traj, params, ref);
  }
  double z = 0.0;  // detached batch reference point
  for (double ui : u) z += ui;
  z /= static_cast<double>(u.size());

  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const TaskSpec& task = tasks.at(batch[i].traj.task_id);
    double d_u;  // d(loss_i)/d(u_i)
    if (batch[i].positive) {
      const double s = sigmoid(u[i] - z);
      result.loss += lambda_pos * (1.0 - s);
      d_u = -lambda_pos * s * (1.0 - s);
    } else {
      const double s = sigmoid(z - u[i]);
      result.loss += lambda_neg * (1.0 - s);
      d_u = lambda_neg * s * (1.0 - s);
    }
    accumulate_trajectory_grad(task, batch[i].traj, params,
                               inv * d_u * beta, result.grad);
  }
  result.loss *= inv;
  return result;
}

LossResult rft_loss(std::span<const Trajectory> positives,
                    const TaskPool& tasks, const PolicyParams& params) {
  if (positives.empty()) {
    throw ConfigError("rft_loss needs at least one trajectory");
  }
  LossResult result;
  result.grad.init_like(params);
  std::size_t count = 0;
  for (const Trajectory& traj : positives) {
    const TaskSpec& task = tasks.at(traj.task_id);
    State s = task.root();
    for (int a : traj.actions) {
      result.loss -= log_prob(params, task, s, Action{a});
      accumulate_grad_log_prob(params, task, s, Action{a}, -1.0, result.grad);
      s = task.transition(s, Action{a});
      ++count;
    }
  }
  const double inv = 1.0 / static_cast<double>(count);
  result.loss *= inv;
  result.grad.scale(inv);
  return result;
}

double implicit_reward(const TaskSpec& task, const Trajectory& traj,
                       const PolicyParams& params, const PolicySnapshot& ref) {
  return params.beta * log_ratio_sum(task, traj, params, ref);
}

std::vector<double> dvo_credit(const TaskSpec& task, const Trajectory& traj,
                               const PolicyParams& params,
                               const PolicySnapshot& ref) {
  std::vector<double> credits;
  credits.reserve(traj.actions.size());
  State s = task.root();
  for (int a : traj.actions) {
    const double ratio = log_prob(params, task, s, Action{a}) -
                         log_prob(ref, task, s, Action{a});
    credits.push_back(params.beta * ratio);
    s = task.transition(s, Action{a});
  }
  return credits;
}

}  // namespace dvo
