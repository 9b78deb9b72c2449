#include "dvo/step_mdp.hpp"

#include <algorithm>
#include <cmath>

#include "dvo/rng.hpp"

namespace dvo {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a_byte(std::uint64_t h, unsigned char b) {
  return (h ^ b) * kFnvPrime;
}

}  // namespace

StateKey state_key(const std::string& task_id, std::span<const int> prefix) {
  std::uint64_t h = kFnvOffset;
  for (char c : task_id) h = fnv1a_byte(h, static_cast<unsigned char>(c));
  h = fnv1a_byte(h, 0x1f);  // separator between id and actions
  for (int a : prefix) h = fnv1a_byte(h, static_cast<unsigned char>(a));
  return h;
}

StateKey state_key(const State& s) { return state_key(s.task_id, s.prefix); }

TaskSpec::TaskSpec(std::string task_id, std::uint64_t seed, int branching,
                   int depth, double accepting_fraction, double reward_correct,
                   double reward_incorrect)
    : task_id_(std::move(task_id)),
      seed_(seed),
      branching_(branching),
      depth_(depth),
      accepting_fraction_(accepting_fraction),
      reward_correct_(reward_correct),
      reward_incorrect_(reward_incorrect) {
  if (branching_ < 2 || branching_ > 8) {
    throw ConfigError("branching must be in [2, 8], got " +
                      std::to_string(branching_));
  }
  if (depth_ < 1 || depth_ > 8) {
    throw ConfigError("depth must be in [1, 8], got " + std::to_string(depth_));
  }
  if (!(accepting_fraction_ > 0.0) || !(accepting_fraction_ < 1.0)) {
    throw ConfigError("accepting_fraction must lie strictly in (0, 1)");
  }
  if (!(reward_correct_ > reward_incorrect_)) {
    throw ConfigError("reward_correct must exceed reward_incorrect");
  }
  long long leaves = 1;
  for (int i = 0; i < depth_; ++i) leaves *= branching_;
  if (leaves > kMaxLeaves) {
    throw EnumerabilityError("B^D = " + std::to_string(leaves) +
                             " exceeds the enumerability bound of " +
                             std::to_string(kMaxLeaves));
  }
  num_leaves_ = static_cast<int>(leaves);

  int size = static_cast<int>(
      std::llround(accepting_fraction_ * static_cast<double>(num_leaves_)));
  size = std::max(1, std::min(size, num_leaves_ - 1));
  accepting_size_ = size;

  // Rank leaves by a seeded hash and accept the lowest-ranked ones. Ties
  // (which would need a hash collision) fall back to the leaf index.
  std::vector<std::pair<std::uint64_t, int>> keys(num_leaves_);
  const std::uint64_t spread = splitmix64(seed_ ^ 0xd1b54a32d192ed03ULL);
  for (int i = 0; i < num_leaves_; ++i) {
    keys[i] = {splitmix64(spread + static_cast<std::uint64_t>(i)), i};
  }
  std::nth_element(keys.begin(), keys.begin() + (accepting_size_ - 1),
                   keys.end());
  accepting_.assign(num_leaves_, false);
  for (int i = 0; i < accepting_size_; ++i) accepting_[keys[i].second] = true;
}

State TaskSpec::make_state(std::vector<int> prefix) const {
  if (static_cast<int>(prefix.size()) > depth_) {
    throw ConfigError("prefix longer than task depth");
  }
  for (int a : prefix) {
    if (a < 0 || a >= branching_) {
      throw ConfigError("action index out of range");
    }
  }
  return State{task_id_, std::move(prefix)};
}

bool TaskSpec::is_terminal(const State& s) const {
  return s.depth() >= depth_;
}

State TaskSpec::transition(const State& s, Action a) const {
  if (is_terminal(s)) {
    throw IllegalTransitionError("transition from a terminal state");
  }
  if (a.index < 0 || a.index >= branching_) {
    throw ConfigError("action index out of range");
  }
  State next = s;
  next.prefix.push_back(a.index);
  return next;
}

int TaskSpec::leaf_index(const State& s) const {
  int idx = 0;
  for (int a : s.prefix) idx = idx * branching_ + a;
  return idx;
}

double TaskSpec::terminal_reward(const State& s) const {
  if (!is_terminal(s)) {
    throw IllegalTransitionError("terminal_reward on a non-terminal state");
  }
  return accepting_[leaf_index(s)] ? reward_correct_ : reward_incorrect_;
}

std::vector<std::pair<std::vector<int>, double>> TaskSpec::enumerate_leaves()
    const {
  std::vector<std::pair<std::vector<int>, double>> out;
  out.reserve(num_leaves_);
  std::vector<int> actions(depth_, 0);
  for (int leaf = 0; leaf < num_leaves_; ++leaf) {
    int rem = leaf;
    for (int t = depth_ - 1; t >= 0; --t) {
      actions[t] = rem % branching_;
      rem /= branching_;
    }
    const double reward =
        accepting_[leaf] ? reward_correct_ : reward_incorrect_;
    out.emplace_back(actions, reward);
  }
  return out;
}

std::vector<double> TaskSpec::encode_state(const State& s) const {
  std::vector<double> x(static_cast<std::size_t>(depth_ * branching_) + 1,
                        0.0);
  for (int t = 0; t < s.depth(); ++t) {
    x[static_cast<std::size_t>(t * branching_ + s.prefix[t])] = 1.0;
  }
  x.back() = static_cast<double>(s.depth()) / static_cast<double>(depth_);
  return x;
}

TaskSpec generate_task(std::uint64_t seed, int branching, int depth,
                       double accepting_fraction, double reward_correct,
                       double reward_incorrect) {
  return TaskSpec("task-" + std::to_string(seed), seed, branching, depth,
                  accepting_fraction, reward_correct, reward_incorrect);
}

TaskPool::TaskPool(std::vector<TaskSpec> tasks) {
  for (auto& t : tasks) add(std::move(t));
}

void TaskPool::add(TaskSpec task) {
  if (index_.count(task.id())) {
    throw ConfigError("duplicate task id: " + task.id());
  }
  index_[task.id()] = tasks_.size();
  tasks_.push_back(std::move(task));
}

const TaskSpec& TaskPool::at(const std::string& task_id) const {
  auto it = index_.find(task_id);
  if (it == index_.end()) throw ConfigError("unknown task id: " + task_id);
  return tasks_[it->second];
}

bool TaskPool::contains(const std::string& task_id) const {
  return index_.count(task_id) > 0;
}

}  // namespace dvo
