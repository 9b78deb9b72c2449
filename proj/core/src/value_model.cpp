#include "dvo/value_model.hpp"

#include <algorithm>
#include <numeric>

namespace dvo {

ValueModelParams make_value_model(int num_actions, int depth, int hidden,
                                  Rng& rng) {
  ValueModelParams model;
  model.num_actions = num_actions;
  model.depth = depth;
  model.net = Mlp::xavier_init(depth * num_actions + 1, hidden, 1, rng);
  return model;
}

double value_model_loss(const Mlp& net, std::span<const ValueExample> examples,
                        MlpGrad* grad) {
  if (examples.empty()) throw ConfigError("empty value-model batch");
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(examples.size());
  for (const ValueExample& ex : examples) {
    if (grad == nullptr) {
      const double err = net.forward(ex.features)[0] - ex.target;
      loss += err * err;
      continue;
    }
    const Mlp::Trace trace = net.forward_trace(ex.features);
    const double err = trace.out[0] - ex.target;
    loss += err * err;
    const double d_out[1] = {2.0 * err * inv_n};
    net.backprop(trace, d_out, 1.0, *grad);
  }
  return loss * inv_n;
}

std::vector<ValueExample> build_value_dataset(
    const TaskPool& tasks, std::span<const Trajectory> trajectories) {
  std::vector<ValueExample> out;
  for (const Trajectory& traj : trajectories) {
    const TaskSpec& task = tasks.at(traj.task_id);
    State s = task.root();
    out.push_back({task.encode_state(s), traj.outcome_reward});
    for (int a : traj.actions) {
      s = task.transition(s, Action{a});
      out.push_back({task.encode_state(s), traj.outcome_reward});
    }
  }
  return out;
}

ValueModelParams train_value_model(const TaskPool& tasks,
                                   std::span<const Trajectory> trajectories,
                                   const ValueModelTrainConfig& config,
                                   Rng& rng,
                                   std::vector<double>* epoch_losses) {
  if (trajectories.empty()) throw ConfigError("empty value-model dataset");
  const TaskSpec& first = tasks.at(trajectories.front().task_id);
  ValueModelParams model = make_value_model(first.branching(), first.depth(),
                                            config.hidden, rng);
  const std::vector<ValueExample> dataset =
      build_value_dataset(tasks, trajectories);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<ValueExample> batch;
  MlpGrad grad;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(
          order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(dataset[order[i]]);
      }
      grad.init_like(model.net);
      value_model_loss(model.net, batch, &grad);
      MlpGrad scaled = grad;
      scaled.scale(-config.lr);
      // parameter update: net += -lr * grad
      for (std::size_t i = 0; i < model.net.w1.size(); ++i) {
        model.net.w1[i] += scaled.w1[i];
      }
      for (std::size_t i = 0; i < model.net.b1.size(); ++i) {
        model.net.b1[i] += scaled.b1[i];
      }
      for (std::size_t i = 0; i < model.net.w2.size(); ++i) {
        model.net.w2[i] += scaled.w2[i];
      }
      for (std::size_t i = 0; i < model.net.b2.size(); ++i) {
        model.net.b2[i] += scaled.b2[i];
      }
    }
    if (epoch_losses != nullptr) {
      epoch_losses->push_back(value_model_loss(model.net, dataset, nullptr));
    }
  }
  return model;
}

double predict_value(const ValueModelParams& model, const TaskSpec& task,
                     const State& s) {
  return model.net.forward(task.encode_state(s))[0];
}

LabeledTrajectory label_targets_with_model(const ValueModelParams& model,
                                           const TaskSpec& task,
                                           const Trajectory& traj) {
  const int depth = task.depth();
  LabeledTrajectory lt;
  lt.traj = traj;
  lt.positive = traj.outcome_reward == task.reward_correct();
  lt.step_values.resize(depth + 1);
  State s = task.root();
  lt.step_values[0] = predict_value(model, task, s);
  for (int t = 0; t < depth; ++t) {
    s = task.transition(s, Action{traj.actions[t]});
    lt.step_values[t + 1] =
        task.is_terminal(s) ? 0.0 : predict_value(model, task, s);
  }
  lt.targets.resize(depth);
  for (int t = 0; t < depth; ++t) {
    const double r = (t == depth - 1) ? traj.outcome_reward : 0.0;
    lt.targets[t] = r + lt.step_values[t + 1] - lt.step_values[t];
  }
  return lt;
}

}  // namespace dvo
