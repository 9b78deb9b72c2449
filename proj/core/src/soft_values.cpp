#include "dvo/soft_values.hpp"

#include <cmath>
#include <sstream>

#include "dvo/numerics.hpp"

namespace dvo {

double ValueTable::at(StateKey key) const {
  auto it = v.find(key);
  if (it == v.end()) {
    throw ExtractionError("state key missing from value table");
  }
  return it->second;
}

StepRewardFn outcome_reward_fn(const TaskSpec& task) {
  return [&task](const State& s, Action a) -> double {
    if (s.depth() + 1 == task.depth()) {
      State leaf = s;
      leaf.prefix.push_back(a.index);
      return task.terminal_reward(leaf);
    }
    return 0.0;
  };
}

namespace {

double recurse_v(const TaskSpec& task, double beta, const StepRewardFn& reward,
                 const PolicySnapshot* ref, const State& s, ValueTable& out) {
  if (task.is_terminal(s)) {
    out.v[state_key(s)] = 0.0;
    return 0.0;
  }
  const int B = task.branching();
  std::vector<double> exponents(B);
  std::vector<double> log_ref;
  if (ref != nullptr) {
    const std::vector<double> probs = action_distribution(*ref, task, s);
    log_ref.resize(B);
    for (int a = 0; a < B; ++a) log_ref[a] = std::log(probs[a]);
  }
  for (int a = 0; a < B; ++a) {
    State next = s;
    next.prefix.push_back(a);
    const double v_next = recurse_v(task, beta, reward, ref, next, out);
    double q = reward(s, Action{a}) + v_next;
    if (ref != nullptr) q += beta * log_ref[a];
    exponents[a] = q / beta;
  }
  const double v = beta * log_sum_exp(exponents);
  out.v[state_key(s)] = v;
  return v;
}

}  // namespace

ValueTable soft_bellman_values(const TaskSpec& task, double beta,
                               const StepRewardFn& reward,
                               const PolicySnapshot* ref) {
  if (beta <= 0.0) throw ConfigError("beta must be positive");
  ValueTable table;
  table.beta = beta;
  table.convention =
      ref ? RewardConvention::kl_regularized : RewardConvention::raw;
  recurse_v(task, beta, reward, ref, task.root(), table);
  return table;
}

ValueTable exact_soft_v(const TaskSpec& task, double beta) {
  return soft_bellman_values(task, beta, outcome_reward_fn(task));
}

ValueTable exact_soft_v_kl(const TaskSpec& task, double beta,
                           const PolicySnapshot& ref) {
  return soft_bellman_values(task, beta, outcome_reward_fn(task), &ref);
}

double soft_q(const TaskSpec& task, const ValueTable& table,
              const StepRewardFn& reward, const State& s, Action a) {
  State next = s;
  next.prefix.push_back(a.index);
  return reward(s, a) + table.at(state_key(next));
}

std::map<StateKey, std::vector<double>> optimal_policy_from_values(
    const TaskSpec& task, const ValueTable& table, const StepRewardFn& reward,
    const PolicySnapshot* ref) {
  const bool want_kl = table.convention == RewardConvention::kl_regularized;
  if (want_kl && ref == nullptr) {
    throw ConfigError("KL-convention table requires the reference policy");
  }
  std::map<StateKey, std::vector<double>> out;
  const int B = task.branching();
  for_each_state(task, [&](const State& s) {
    if (task.is_terminal(s)) return;
    const double v_here = table.at(state_key(s));
    std::vector<double> probs(B);
    std::vector<double> ref_probs;
    if (want_kl) ref_probs = action_distribution(*ref, task, s);
    for (int a = 0; a < B; ++a) {
      const double q = soft_q(task, table, reward, s, Action{a});
      const double weight = std::exp((q - v_here) / table.beta);
      probs[a] = want_kl ? ref_probs[a] * weight : weight;
    }
    double total = 0.0;
    for (double p : probs) total += p;
    if (std::abs(total - 1.0) > 1e-6) {
      throw IntegrityError(
          "value table inconsistent: optimal policy at a state sums to " +
          format_double(total));
    }
    out[state_key(s)] = std::move(probs);
  });
  return out;
}

std::map<StateKey, std::vector<double>> optimal_policy_from_values(
    const TaskSpec& task, const ValueTable& table) {
  return optimal_policy_from_values(task, table, outcome_reward_fn(task));
}

std::map<StateKey, std::vector<double>> implied_reward_from_logits(
    const PolicyParams& params, const TaskSpec& task) {
  if (params.kind != PolicyKind::tabular) {
    throw ConfigError("implied rewards are defined for tabular policies");
  }
  std::map<StateKey, std::vector<double>> rewards;
  const int B = task.branching();
  const double beta = params.beta;
  for_each_state(task, [&](const State& s) {
    if (task.is_terminal(s)) return;
    const std::vector<double> here = params.logits(task, s);
    std::vector<double> row(B);
    for (int a = 0; a < B; ++a) {
      State next = s;
      next.prefix.push_back(a);
      double v_next = 0.0;  // terminal convention
      if (!task.is_terminal(next)) {
        const std::vector<double> l_next = params.logits(task, next);
        std::vector<double> scaled(l_next.size());
        for (std::size_t i = 0; i < l_next.size(); ++i) {
          scaled[i] = l_next[i] / beta;
        }
        v_next = beta * log_sum_exp(scaled);
      }
      row[a] = here[a] - v_next;
    }
    rewards[state_key(s)] = std::move(row);
  });
  return rewards;
}

StepRewardFn reward_fn_from_table(
    const std::map<StateKey, std::vector<double>>& rewards) {
  return [&rewards](const State& s, Action a) -> double {
    auto it = rewards.find(state_key(s));
    if (it == rewards.end()) {
      throw ExtractionError("state key missing from reward table");
    }
    return it->second.at(static_cast<std::size_t>(a.index));
  };
}

double mc_rollout_value(const PolicyParams& params, const TaskSpec& task,
                        const State& s, int n_rollouts, Rng& rng) {
  if (n_rollouts < 1) throw ConfigError("n_rollouts must be at least 1");
  double total = 0.0;
  for (int i = 0; i < n_rollouts; ++i) {
    total += rollout_from(params, task, s, rng);
  }
  return total / n_rollouts;
}

std::string value_table_to_jsonl(const ValueTable& table) {
  std::ostringstream os;
  for (const auto& [key, value] : table.v) {
    os << "{\"state_key\":\"" << key << "\",\"V\":" << format_double(value)
       << "}\n";
  }
  return os.str();
}

}  // namespace dvo
