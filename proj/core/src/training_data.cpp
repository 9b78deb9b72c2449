#include "dvo/training_data.hpp"

namespace dvo {

std::vector<StepTarget> step_targets(const TaskSpec& task,
                                     const LabeledTrajectory& lt) {
  std::vector<StepTarget> out;
  out.reserve(lt.targets.size());
  State s = task.root();
  for (std::size_t t = 0; t < lt.targets.size(); ++t) {
    out.push_back(StepTarget{state_key(s), lt.traj.actions[t], lt.targets[t]});
    s = task.transition(s, Action{lt.traj.actions[t]});
  }
  return out;
}

}  // namespace dvo
