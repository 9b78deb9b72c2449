#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dvo/errors.hpp"

namespace dvo {

/// Exhaustive-enumeration bound on B^D.
inline constexpr int kMaxLeaves = 65536;

struct Action {
  int index = 0;
};

/// Position in a task: the question id plus the actions taken so far.
/// A state whose prefix has length D is terminal.
struct State {
  std::string task_id;
  std::vector<int> prefix;

  int depth() const { return static_cast<int>(prefix.size()); }
};

/// 64-bit key identifying (task_id, prefix) across all policy/value tables.
using StateKey = std::uint64_t;
StateKey state_key(const State& s);
StateKey state_key(const std::string& task_id, std::span<const int> prefix);

/// A complete root-to-terminal path with its outcome reward. Intermediate
/// rewards are identically zero; the only payoff arrives at the final step.
struct Trajectory {
  std::string task_id;
  std::vector<int> actions;
  double outcome_reward = 0.0;
  std::vector<double> per_step_log_probs;  // may be empty
};

/// A deterministic, fully enumerable B-ary depth-D decision tree with an
/// outcome-only reward: leaves inside the accepting set pay reward_correct,
/// all others pay reward_incorrect. The accepting set is a pure function of
/// (seed, B, D, accepting_fraction) — it is recomputed on construction, never
/// stored in the serialized form.
class TaskSpec {
 public:
  TaskSpec(std::string task_id, std::uint64_t seed, int branching, int depth,
           double accepting_fraction, double reward_correct = 1.0,
           double reward_incorrect = -1.0);

  const std::string& id() const { return task_id_; }
  std::uint64_t seed() const { return seed_; }
  int branching() const { return branching_; }
  int depth() const { return depth_; }
  double accepting_fraction() const { return accepting_fraction_; }
  double reward_correct() const { return reward_correct_; }
  double reward_incorrect() const { return reward_incorrect_; }

  int num_leaves() const { return num_leaves_; }
  /// max(1, round(frac * B^D)), clamped so the set is a proper subset.
  int accepting_size() const { return accepting_size_; }

  State root() const { return State{task_id_, {}}; }
  State make_state(std::vector<int> prefix) const;
  bool is_terminal(const State& s) const;

  /// Appends the action; throws IllegalTransitionError on a terminal state.
  State transition(const State& s, Action a) const;

  /// Outcome reward of a terminal state; throws on non-terminal input.
  double terminal_reward(const State& s) const;

  /// Lexicographic leaf index of a terminal state (base-B digits).
  int leaf_index(const State& s) const;
  bool is_accepting(int leaf) const { return accepting_[leaf]; }

  /// All B^D leaves in lexicographic order with their rewards.
  std::vector<std::pair<std::vector<int>, double>> enumerate_leaves() const;

  /// Feature vector of length D*B + 1: one-hot of the action taken at each
  /// filled depth slot, zeros elsewhere, plus len(prefix)/D.
  std::vector<double> encode_state(const State& s) const;

 private:
  std::string task_id_;
  std::uint64_t seed_ = 0;
  int branching_ = 2;
  int depth_ = 1;
  double accepting_fraction_ = 0.5;
  double reward_correct_ = 1.0;
  double reward_incorrect_ = -1.0;
  int num_leaves_ = 0;
  int accepting_size_ = 0;
  std::vector<bool> accepting_;
};

/// Seeded generator; the task id is derived from the inputs.
TaskSpec generate_task(std::uint64_t seed, int branching, int depth,
                       double accepting_fraction, double reward_correct = 1.0,
                       double reward_incorrect = -1.0);

/// Ordered task collection addressable by id.
class TaskPool {
 public:
  TaskPool() = default;
  explicit TaskPool(std::vector<TaskSpec> tasks);

  void add(TaskSpec task);
  const TaskSpec& at(const std::string& task_id) const;
  bool contains(const std::string& task_id) const;
  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  std::size_t size() const { return tasks_.size(); }

 private:
  std::vector<TaskSpec> tasks_;
  std::map<std::string, std::size_t> index_;
};

/// Visits every state of the task tree (root included, terminals included)
/// in pre-order.
template <typename Fn>
void for_each_state(const TaskSpec& task, Fn&& fn) {
  std::vector<int> prefix;
  auto walk = [&](auto&& self) -> void {
    fn(State{task.id(), prefix});
    if (static_cast<int>(prefix.size()) == task.depth()) return;
    for (int a = 0; a < task.branching(); ++a) {
      prefix.push_back(a);
      self(self);
      prefix.pop_back();
    }
  };
  walk(walk);
}

}  // namespace dvo
