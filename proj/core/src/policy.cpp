#include "dvo/policy.hpp"

#include <algorithm>
#include <cmath>

#include "dvo/numerics.hpp"

namespace dvo {

PolicyParams PolicyParams::make_tabular(int num_actions, double beta) {
  PolicyParams p;
  p.kind = PolicyKind::tabular;
  p.num_actions = num_actions;
  p.beta = beta;
  return p;
}

PolicyParams PolicyParams::make_mlp(int num_actions, int depth, int hidden,
                                    double beta, Rng& rng) {
  PolicyParams p;
  p.kind = PolicyKind::mlp;
  p.num_actions = num_actions;
  p.beta = beta;
  p.mlp_depth = depth;
  p.net = Mlp::xavier_init(depth * num_actions + 1, hidden, num_actions, rng);
  return p;
}

std::vector<double> PolicyParams::logits(const TaskSpec& task,
                                         const State& s) const {
  if (kind == PolicyKind::tabular) {
    auto it = table.find(state_key(s));
    if (it != table.end()) return it->second;
    return std::vector<double>(num_actions, 0.0);
  }
  return net.forward(task.encode_state(s));
}

std::vector<double>& PolicyParams::logits_row(const State& s) {
  auto [it, inserted] =
      table.try_emplace(state_key(s), std::vector<double>(num_actions, 0.0));
  return it->second;
}

PolicySnapshot snapshot(const PolicyParams& params) {
  return PolicySnapshot(params);
}

std::vector<double> action_distribution(const PolicyParams& params,
                                        const TaskSpec& task, const State& s) {
  if (task.is_terminal(s)) {
    throw IllegalTransitionError("action distribution on a terminal state");
  }
  return softmax_scaled(params.logits(task, s), params.beta);
}

std::vector<double> action_distribution(const PolicySnapshot& ref,
                                        const TaskSpec& task, const State& s) {
  return action_distribution(ref.params(), task, s);
}

double log_prob(const PolicyParams& params, const TaskSpec& task,
                const State& s, Action a) {
  if (task.is_terminal(s)) {
    throw IllegalTransitionError("log_prob on a terminal state");
  }
  const std::vector<double> l = params.logits(task, s);
  // log softmax(l/beta)[a], max-subtracted.
  const double m = *std::max_element(l.begin(), l.end());
  double total = 0.0;
  for (double v : l) total += std::exp((v - m) / params.beta);
  return (l[a.index] - m) / params.beta - std::log(total);
}

double log_prob(const PolicySnapshot& ref, const TaskSpec& task,
                const State& s, Action a) {
  return log_prob(ref.params(), task, s, a);
}

Trajectory sample_trajectory(const PolicyParams& params, const TaskSpec& task,
                             Rng& rng, double sampling_temperature) {
  Trajectory traj;
  traj.task_id = task.id();
  State s = task.root();
  while (!task.is_terminal(s)) {
    const std::vector<double> l = params.logits(task, s);
    const std::vector<double> probs =
        softmax_scaled(l, params.beta * sampling_temperature);
    const int a = static_cast<int>(rng.categorical(probs));
    traj.actions.push_back(a);
    traj.per_step_log_probs.push_back(log_prob(params, task, s, Action{a}));
    s = task.transition(s, Action{a});
  }
  traj.outcome_reward = task.terminal_reward(s);
  return traj;
}

double rollout_from(const PolicyParams& params, const TaskSpec& task,
                    const State& start, Rng& rng, double sampling_temperature) {
  State s = start;
  while (!task.is_terminal(s)) {
    const std::vector<double> probs = softmax_scaled(
        params.logits(task, s), params.beta * sampling_temperature);
    s = task.transition(s, Action{static_cast<int>(rng.categorical(probs))});
  }
  return task.terminal_reward(s);
}

void PolicyGrad::init_like(const PolicyParams& params) {
  rows.clear();
  if (params.kind == PolicyKind::mlp) {
    net.init_like(params.net);
  } else {
    net = MlpGrad{};
  }
}

void PolicyGrad::scale(double s) {
  for (auto& [key, row] : rows) {
    for (double& v : row) v *= s;
  }
  net.scale(s);
}

double PolicyGrad::max_abs() const {
  double m = 0.0;
  for (const auto& [key, row] : rows) {
    for (double v : row) m = std::max(m, std::abs(v));
  }
  for (double v : net.w1) m = std::max(m, std::abs(v));
  for (double v : net.b1) m = std::max(m, std::abs(v));
  for (double v : net.w2) m = std::max(m, std::abs(v));
  for (double v : net.b2) m = std::max(m, std::abs(v));
  return m;
}

void accumulate_grad_log_prob(const PolicyParams& params, const TaskSpec& task,
                              const State& s, Action a, double coeff,
                              PolicyGrad& grad) {
  if (task.is_terminal(s)) {
    throw IllegalTransitionError("grad_log_prob on a terminal state");
  }
  if (params.kind == PolicyKind::tabular) {
    const std::vector<double> probs = action_distribution(params, task, s);
    auto [it, inserted] = grad.rows.try_emplace(
        state_key(s), std::vector<double>(params.num_actions, 0.0));
    std::vector<double>& row = it->second;
    const double inv_beta = 1.0 / params.beta;
    for (int j = 0; j < params.num_actions; ++j) {
      const double indicator = (j == a.index) ? 1.0 : 0.0;
      row[j] += coeff * inv_beta * (indicator - probs[j]);
    }
    return;
  }
  const Mlp::Trace trace = params.net.forward_trace(task.encode_state(s));
  const std::vector<double> probs = softmax_scaled(trace.out, params.beta);
  std::vector<double> d_logits(params.num_actions);
  const double inv_beta = 1.0 / params.beta;
  for (int j = 0; j < params.num_actions; ++j) {
    const double indicator = (j == a.index) ? 1.0 : 0.0;
    d_logits[j] = inv_beta * (indicator - probs[j]);
  }
  params.net.backprop(trace, d_logits, coeff, grad.net);
}

PolicyGrad grad_log_prob(const PolicyParams& params, const TaskSpec& task,
                         const State& s, Action a) {
  PolicyGrad g;
  g.init_like(params);
  accumulate_grad_log_prob(params, task, s, a, 1.0, g);
  return g;
}

void apply_update(PolicyParams& params, const PolicyGrad& grad, double scale) {
  if (params.kind == PolicyKind::tabular) {
    for (const auto& [key, row] : grad.rows) {
      auto [it, inserted] = params.table.try_emplace(
          key, std::vector<double>(params.num_actions, 0.0));
      std::vector<double>& dst = it->second;
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * row[j];
    }
    return;
  }
  for (std::size_t i = 0; i < params.net.w1.size(); ++i) {
    params.net.w1[i] += scale * grad.net.w1[i];
  }
  for (std::size_t i = 0; i < params.net.b1.size(); ++i) {
    params.net.b1[i] += scale * grad.net.b1[i];
  }
  for (std::size_t i = 0; i < params.net.w2.size(); ++i) {
    params.net.w2[i] += scale * grad.net.w2[i];
  }
  for (std::size_t i = 0; i < params.net.b2.size(); ++i) {
    params.net.b2[i] += scale * grad.net.b2[i];
  }
}

}  // namespace dvo
