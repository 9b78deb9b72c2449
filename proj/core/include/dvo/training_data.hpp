#pragma once

#include <string>
#include <vector>

#include "dvo/step_mdp.hpp"

namespace dvo {

/// One regression target of the MSE objective:
/// delta = r(s_t, a_t) + V(s_{t+1}) - V(s_t), with V(terminal) = 0.
struct StepTarget {
  StateKey state = 0;
  int action = 0;
  double delta = 0.0;
};

/// A trajectory with the stepwise value estimates and regression targets it
/// was labeled with. step_values has length D+1 (terminal entry forced to
/// zero); targets has length D, or length 1 for response-level batches where
/// the whole trajectory is one macro step.
struct LabeledTrajectory {
  Trajectory traj;
  std::vector<double> step_values;
  std::vector<double> targets;
  bool positive = false;
};

/// Flattened per-step view of a labeled step-level trajectory.
std::vector<StepTarget> step_targets(const TaskSpec& task,
                                     const LabeledTrajectory& lt);

enum class Granularity { step, response };

struct TrainingBatch {
  std::vector<LabeledTrajectory> items;
  Granularity granularity = Granularity::step;
  std::string reference_id;
};

/// Response-level preference pair; both trajectories answer the same task.
struct TrajectoryPair {
  Trajectory win;
  Trajectory lose;
};

/// Two sibling actions at a shared prefix state, ordered by estimated Q.
struct StepPair {
  std::string task_id;
  std::vector<int> prefix;
  int action_win = 0;
  int action_lose = 0;
};

}  // namespace dvo
