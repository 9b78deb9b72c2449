#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dvo/policy.hpp"
#include "dvo/step_mdp.hpp"
#include "dvo/training_data.hpp"

namespace dvo {

enum class LeafEval { rollout, zero_init };

struct SearchConfig {
  int iterations = 80;
  int breadth = 5;  // top-k expansion; clamped to B per task
  int max_depth = 8;
  double c_puct = 1.0;
  LeafEval leaf_eval = LeafEval::rollout;
};

/// One node of the search tree. V is maintained as W / N; eval_count records
/// how many times this node itself was the evaluated leaf, which makes the
/// visit-count conservation N = eval_count + sum(children N) checkable
/// exactly.
struct SearchNode {
  State state;
  double prior = 1.0;  // pi_theta of the edge leading here; 1.0 at the root
  int visits = 0;
  double total_value = 0.0;
  int eval_count = 0;
  bool expanded = false;
  bool terminal = false;
  double terminal_reward = 0.0;
  std::vector<std::unique_ptr<SearchNode>> children;

  double value() const { return visits > 0 ? total_value / visits : 0.0; }
};

struct SearchTree {
  std::unique_ptr<SearchNode> root;
  std::string task_id;
  SearchConfig config;
  std::uint64_t seed = 0;
};

/// PUCT score argmax over the children of an expanded node:
///   Q(s,a) + c * prior(a) * sqrt(N(s)) / (1 + N(child)),
/// with Q of an unvisited child taken as 0 and ties resolved to the lowest
/// child index.
int puct_select(const SearchNode& node, double c_puct);

/// Adds the k most probable actions (ties by index) as children, recording
/// their policy priors. Throws if the node is terminal or already expanded.
void expand(SearchNode& node, const PolicyParams& params, const TaskSpec& task,
            int k);

/// Leaf value: terminal nodes return their outcome reward; non-terminal
/// leaves run one policy rollout (rollout mode) or return 0 (zero_init).
/// Rollout states are not added to the tree.
double evaluate_leaf(const SearchNode& node, const PolicyParams& params,
                     const TaskSpec& task, const SearchConfig& config,
                     Rng& rng);

/// N += 1 and W += value for every node on the root-to-leaf path.
void backup(std::span<SearchNode* const> path, double value);

/// Runs config.iterations of select/expand/evaluate/backup. Deterministic
/// given (params, task, config, rng seed).
SearchTree run_search(const PolicyParams& params, const TaskSpec& task,
                      const SearchConfig& config, Rng& rng);

/// V(s_0..s_D) along a trajectory that lies inside the tree; the terminal
/// entry is 0 by convention. Interior nodes must exist with N > 0; the
/// terminal node only has to exist. Throws ExtractionError otherwise.
std::vector<double> extract_step_values(const SearchTree& tree,
                                        const TaskSpec& task,
                                        std::span<const int> actions);

struct LabeledExamples {
  std::vector<LabeledTrajectory> positives;
  std::vector<LabeledTrajectory> negatives;
};

/// Root-to-terminal tree paths ranked by terminal visit count (descending,
/// ties by lexicographic action order), split by outcome and capped. Each
/// returned trajectory carries its step values and regression targets.
LabeledExamples select_training_examples(const SearchTree& tree,
                                         const TaskSpec& task, int max_pos = 4,
                                         int max_neg = 4);

/// Sibling-action preference pairs read from tree value estimates: at each
/// expanded node, the best and worst child by Q = r + V(child) form a pair
/// (ties skipped). Candidates are ranked by node visit count and capped.
std::vector<StepPair> select_step_pairs(const SearchTree& tree,
                                        const TaskSpec& task,
                                        int max_pairs = 4);

}  // namespace dvo
