#include "dvo/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dvo {

namespace {

std::unique_ptr<SearchNode> make_node(const TaskSpec& task, State state,
                                      double prior) {
  auto node = std::make_unique<SearchNode>();
  node->prior = prior;
  node->terminal = task.is_terminal(state);
  if (node->terminal) node->terminal_reward = task.terminal_reward(state);
  node->state = std::move(state);
  return node;
}

}  // namespace

int puct_select(const SearchNode& node, double c_puct) {
  if (!node.expanded || node.children.empty()) {
    throw Error("puct_select on an unexpanded node");
  }
  const double sqrt_n = std::sqrt(static_cast<double>(node.visits));
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(node.children.size()); ++i) {
    const SearchNode& child = *node.children[i];
    const double q = child.visits > 0 ? child.value() : 0.0;
    const double score =
        q + c_puct * child.prior * sqrt_n / (1.0 + child.visits);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

void expand(SearchNode& node, const PolicyParams& params, const TaskSpec& task,
            int k) {
  if (node.terminal) throw Error("expand on a terminal node");
  if (node.expanded) throw Error("node already expanded");
  if (k < 1) throw ConfigError("expansion breadth must be at least 1");
  const std::vector<double> probs =
      action_distribution(params, task, node.state);
  const int B = task.branching();
  k = std::min(k, B);
  std::vector<int> order(B);
  for (int a = 0; a < B; ++a) order[a] = a;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return probs[a] > probs[b]; });
  node.children.reserve(k);
  for (int i = 0; i < k; ++i) {
    const int a = order[i];
    node.children.push_back(
        make_node(task, task.transition(node.state, Action{a}), probs[a]));
  }
  node.expanded = true;
}

double evaluate_leaf(const SearchNode& node, const PolicyParams& params,
                     const TaskSpec& task, const SearchConfig& config,
                     Rng& rng) {
  if (node.terminal) return node.terminal_reward;
  if (config.leaf_eval == LeafEval::zero_init) return 0.0;
  return rollout_from(params, task, node.state, rng);
}

void backup(std::span<SearchNode* const> path, double value) {
  for (SearchNode* node : path) {
    node->visits += 1;
    node->total_value += value;
  }
}

SearchTree run_search(const PolicyParams& params, const TaskSpec& task,
                      const SearchConfig& config, Rng& rng) {
  if (config.iterations < 1) throw ConfigError("iterations must be >= 1");
  if (config.breadth < 1) throw ConfigError("breadth must be >= 1");
  if (config.max_depth < 1) throw ConfigError("max_depth must be >= 1");

  SearchTree tree;
  tree.task_id = task.id();
  tree.config = config;
  tree.root = make_node(task, task.root(), 1.0);

  std::vector<SearchNode*> path;
  for (int iter = 0; iter < config.iterations; ++iter) {
    path.clear();
    SearchNode* node = tree.root.get();
    path.push_back(node);
    while (node->expanded && !node->terminal) {
      node = node->children[puct_select(*node, config.c_puct)].get();
      path.push_back(node);
    }
    if (!node->terminal && !node->expanded &&
        node->state.depth() < config.max_depth) {
      expand(*node, params, task, config.breadth);
    }
    const double value = evaluate_leaf(*node, params, task, config, rng);
    node->eval_count += 1;
    backup(path, value);
  }
  return tree;
}

std::vector<double> extract_step_values(const SearchTree& tree,
                                        const TaskSpec& task,
                                        std::span<const int> actions) {
  if (static_cast<int>(actions.size()) != task.depth()) {
    throw ExtractionError("trajectory length does not match task depth");
  }
  std::vector<double> values;
  values.reserve(actions.size() + 1);
  const SearchNode* node = tree.root.get();
  if (node == nullptr || node->visits == 0) {
    throw ExtractionError("root has no visits");
  }
  values.push_back(node->value());
  for (std::size_t t = 0; t < actions.size(); ++t) {
    const SearchNode* next = nullptr;
    for (const auto& child : node->children) {
      if (child->state.prefix.back() == actions[t]) {
        next = child.get();
        break;
      }
    }
    if (next == nullptr) {
      throw ExtractionError("trajectory leaves the search tree");
    }
    if (next->terminal) {
      values.push_back(0.0);  // V(terminal) = 0 by convention
    } else {
      if (next->visits == 0) {
        throw ExtractionError("interior node on trajectory has no visits");
      }
      values.push_back(next->value());
    }
    node = next;
  }
  return values;
}

namespace {

struct TerminalPath {
  const SearchNode* node;
  std::vector<int> actions;
};

void collect_terminals(const SearchNode& node, std::vector<int>& prefix,
                       std::vector<TerminalPath>& out) {
  if (node.terminal) {
    out.push_back({&node, prefix});
    return;
  }
  for (const auto& child : node.children) {
    prefix.push_back(child->state.prefix.back());
    collect_terminals(*child, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

LabeledExamples select_training_examples(const SearchTree& tree,
                                         const TaskSpec& task, int max_pos,
                                         int max_neg) {
  std::vector<TerminalPath> candidates;
  std::vector<int> prefix;
  collect_terminals(*tree.root, prefix, candidates);
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const TerminalPath& a, const TerminalPath& b) {
                     if (a.node->visits != b.node->visits) {
                       return a.node->visits > b.node->visits;
                     }
                     return a.actions < b.actions;
                   });

  LabeledExamples out;
  for (const TerminalPath& cand : candidates) {
    const bool positive =
        cand.node->terminal_reward == task.reward_correct();
    auto& bucket = positive ? out.positives : out.negatives;
    const int cap = positive ? max_pos : max_neg;
    if (static_cast<int>(bucket.size()) >= cap) continue;

    LabeledTrajectory lt;
    lt.traj.task_id = task.id();
    lt.traj.actions = cand.actions;
    lt.traj.outcome_reward = cand.node->terminal_reward;
    lt.step_values = extract_step_values(tree, task, cand.actions);
    lt.positive = positive;
    const int depth = task.depth();
    lt.targets.resize(depth);
    for (int t = 0; t < depth; ++t) {
      const double r = (t == depth - 1) ? lt.traj.outcome_reward : 0.0;
      lt.targets[t] = r + lt.step_values[t + 1] - lt.step_values[t];
    }
    bucket.push_back(std::move(lt));
  }
  return out;
}

std::vector<StepPair> select_step_pairs(const SearchTree& tree,
                                        const TaskSpec& task, int max_pairs) {
  struct Candidate {
    int visits;
    StepPair pair;
  };
  std::vector<Candidate> candidates;

  std::vector<int> prefix;
  auto walk = [&](auto&& self, const SearchNode& node) -> void {
    if (!node.expanded) return;
    int best = -1, worst = -1;
    double best_q = 0.0, worst_q = 0.0;
    for (const auto& child : node.children) {
      double q;
      if (child->terminal) {
        q = child->terminal_reward;
      } else if (child->visits > 0) {
        q = child->value();
      } else {
        continue;  // no estimate for this sibling
      }
      const int a = child->state.prefix.back();
      if (best < 0 || q > best_q) {
        best = a;
        best_q = q;
      }
      if (worst < 0 || q < worst_q) {
        worst = a;
        worst_q = q;
      }
    }
    if (best >= 0 && worst >= 0 && best_q > worst_q) {
      candidates.push_back(
          {node.visits, StepPair{task.id(), prefix, best, worst}});
    }
    for (const auto& child : node.children) {
      prefix.push_back(child->state.prefix.back());
      self(self, *child);
      prefix.pop_back();
    }
  };
  walk(walk, *tree.root);

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.visits != b.visits) return a.visits > b.visits;
                     return a.pair.prefix < b.pair.prefix;
                   });
  std::vector<StepPair> out;
  for (const Candidate& c : candidates) {
    if (static_cast<int>(out.size()) >= max_pairs) break;
    out.push_back(c.pair);
  }
  return out;
}

}  // namespace dvo
