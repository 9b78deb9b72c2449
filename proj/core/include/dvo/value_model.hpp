#pragma once

#include <span>
#include <utility>
#include <vector>

#include "dvo/mlp.hpp"
#include "dvo/step_mdp.hpp"
#include "dvo/training_data.hpp"

namespace dvo {

/// Outcome value model V_phi: a (D*B+1) -> H -> 1 tanh network regressed on
/// terminal outcome rewards over every prefix state of the training
/// trajectories. Linear output; the targets themselves bound the range.
struct ValueModelParams {
  Mlp net;
  int num_actions = 0;
  int depth = 0;
};

ValueModelParams make_value_model(int num_actions, int depth, int hidden,
                                  Rng& rng);

struct ValueModelTrainConfig {
  int epochs = 200;
  double lr = 1e-2;
  int batch_size = 64;
  int hidden = 32;
};

/// One regression pair: encoded state -> outcome reward of its trajectory.
struct ValueExample {
  std::vector<double> features;
  double target = 0.0;
};

/// Mean squared error over the examples; when grad is non-null the gradient
/// is accumulated there (grad must be init_like the net).
double value_model_loss(const Mlp& net, std::span<const ValueExample> examples,
                        MlpGrad* grad);

/// Flattens trajectories into regression pairs: every state (root through
/// terminal) pairs with the trajectory's outcome reward.
std::vector<ValueExample> build_value_dataset(
    const TaskPool& tasks, std::span<const Trajectory> trajectories);

/// Mini-batch gradient descent on the MSE loss. Per-epoch full-dataset loss
/// is appended to epoch_losses when provided. Throws on an empty dataset.
ValueModelParams train_value_model(const TaskPool& tasks,
                                   std::span<const Trajectory> trajectories,
                                   const ValueModelTrainConfig& config,
                                   Rng& rng,
                                   std::vector<double>* epoch_losses = nullptr);

/// Raw model output for a state. Callers force V(terminal) = 0 where the
/// soft-value convention requires it; this function does not.
double predict_value(const ValueModelParams& model, const TaskSpec& task,
                     const State& s);

/// delta_t = r_t + V_phi(s_{t+1}) - V_phi(s_t) with V_phi(terminal) forced
/// to zero.
LabeledTrajectory label_targets_with_model(const ValueModelParams& model,
                                           const TaskSpec& task,
                                           const Trajectory& traj);

}  // namespace dvo
