#include "dvo/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "dvo/numerics.hpp"
#include "dvo/serialization.hpp"

namespace dvo {

namespace {

// Stream tags for deriving independent seeds from the experiment seed.
constexpr std::uint64_t kQuestionTag = 0x71;
constexpr std::uint64_t kDataTag = 0xda;
constexpr std::uint64_t kShuffleTag = 0x5f;
constexpr std::uint64_t kEvalTag = 0xe7;

template <typename Fn>
void parallel_for(int jobs, std::size_t n, Fn&& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::min<std::size_t>(jobs, n);
  pool.reserve(count);
  for (std::size_t w = 0; w < count; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

namespace seeds {
std::uint64_t questions(std::uint64_t seed, int round) {
  return mix_seed(seed, kQuestionTag, static_cast<std::uint64_t>(round));
}
std::uint64_t data(std::uint64_t seed, int round) {
  return mix_seed(seed, kDataTag, static_cast<std::uint64_t>(round));
}
std::uint64_t eval(std::uint64_t seed) { return mix_seed(seed, kEvalTag); }
std::uint64_t warm(std::uint64_t seed) { return mix_seed(seed, 0x3a); }
}  // namespace seeds

std::string objective_name(Objective o) {
  switch (o) {
    case Objective::dvo: return "dvo";
    case Objective::dpo: return "dpo";
    case Objective::step_dpo: return "step-dpo";
    case Objective::kto: return "kto";
    case Objective::rft: return "rft";
  }
  return "dvo";
}

Objective objective_from_name(const std::string& name) {
  if (name == "dvo") return Objective::dvo;
  if (name == "dpo") return Objective::dpo;
  if (name == "step-dpo") return Objective::step_dpo;
  if (name == "kto") return Objective::kto;
  if (name == "rft") return Objective::rft;
  throw ConfigError("unknown objective: " + name);
}

std::string target_source_name(TargetSource s) {
  switch (s) {
    case TargetSource::mcts: return "mcts";
    case TargetSource::value_model: return "value-model";
    case TargetSource::oracle: return "oracle";
  }
  return "mcts";
}

TargetSource target_source_from_name(const std::string& name) {
  if (name == "mcts") return TargetSource::mcts;
  if (name == "value-model" || name == "value_model") {
    return TargetSource::value_model;
  }
  if (name == "oracle") return TargetSource::oracle;
  throw ConfigError("unknown target source: " + name);
}

std::string metrics_csv_header() {
  return "round,epoch,update,objective,loss,ir_pos,ir_neg,margin,acc_greedy,"
         "acc_sampled";
}

std::string metrics_csv_row(const MetricsRecord& r) {
  std::ostringstream os;
  os << r.round << ',' << r.epoch << ',' << r.update << ',' << r.objective
     << ',' << format_double(r.loss) << ',' << format_double(r.ir_pos) << ','
     << format_double(r.ir_neg) << ',' << format_double(r.margin) << ','
     << format_double(r.acc_greedy) << ',' << format_double(r.acc_sampled);
  return os.str();
}

void save_metrics_csv(const std::filesystem::path& path,
                      std::span<const MetricsRecord> records) {
  std::ostringstream os;
  os << metrics_csv_header() << "\n";
  for (const MetricsRecord& r : records) os << metrics_csv_row(r) << "\n";
  write_text_file(path, os.str());
}

double evaluate_greedy(const PolicyParams& params,
                       std::span<const TaskSpec> eval_tasks) {
  if (eval_tasks.empty()) return 0.0;
  int hits = 0;
  for (const TaskSpec& task : eval_tasks) {
    State s = task.root();
    while (!task.is_terminal(s)) {
      const std::vector<double> l = params.logits(task, s);
      s = task.transition(s, Action{static_cast<int>(argmax(l))});
    }
    if (task.terminal_reward(s) == task.reward_correct()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(eval_tasks.size());
}

double evaluate_sampled(const PolicyParams& params,
                        std::span<const TaskSpec> eval_tasks,
                        double temperature, int trials, std::uint64_t seed) {
  if (eval_tasks.empty() || trials < 1) return 0.0;
  double total = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    int hits = 0;
    for (std::size_t i = 0; i < eval_tasks.size(); ++i) {
      const TaskSpec& task = eval_tasks[i];
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(trial), i));
      const double reward =
          rollout_from(params, task, task.root(), rng, temperature);
      if (reward == task.reward_correct()) ++hits;
    }
    total += static_cast<double>(hits) / static_cast<double>(eval_tasks.size());
  }
  return total / trials;
}

bool warm_start(PolicyParams& params, const TaskPool& train_tasks,
                const RoundConfig& config, Rng& rng) {
  if (!config.warm_start) return false;
  std::vector<Trajectory> positives;
  const auto& tasks = train_tasks.tasks();
  std::vector<std::vector<Trajectory>> per_task(tasks.size());
  std::vector<std::uint64_t> seeds(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) seeds[i] = rng.next_u64();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    Rng trng(seeds[i]);
    for (int k = 0; k < config.warm_start_samples; ++k) {
      Trajectory traj = sample_trajectory(params, tasks[i], trng);
      if (traj.outcome_reward == tasks[i].reward_correct()) {
        per_task[i].push_back(std::move(traj));
      }
    }
  }
  for (auto& bucket : per_task) {
    for (auto& traj : bucket) positives.push_back(std::move(traj));
  }
  if (positives.empty()) {
    std::cerr << "warm start: no accepting trajectories found in "
              << config.warm_start_samples << " samples per task; skipping\n";
    return false;
  }
  Optimizer opt(config.optimizer);
  std::vector<std::size_t> order(positives.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<Trajectory> batch;
  for (std::size_t start = 0; start < order.size();
       start += static_cast<std::size_t>(config.batch_size)) {
    const std::size_t stop = std::min(
        order.size(), start + static_cast<std::size_t>(config.batch_size));
    batch.clear();
    for (std::size_t i = start; i < stop; ++i) {
      batch.push_back(positives[order[i]]);
    }
    const LossResult res = rft_loss(batch, train_tasks, params);
    opt.step(params, res.grad);
  }
  return true;
}

std::vector<std::size_t> sample_question_indices(std::size_t pool_size,
                                                 int questions_per_round,
                                                 Rng& rng) {
  std::vector<std::size_t> all(pool_size);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::size_t want =
      std::min<std::size_t>(pool_size, std::max(1, questions_per_round));
  for (std::size_t i = 0; i < want; ++i) {
    const std::size_t j = i + rng.next_index(pool_size - i);
    std::swap(all[i], all[j]);
  }
  all.resize(want);
  return all;
}

namespace {

/// delta labeling against an arbitrary state-value function with the
/// terminal forced to zero.
template <typename ValueFn>
LabeledTrajectory label_with_values(const TaskSpec& task,
                                    const Trajectory& traj, ValueFn&& value) {
  const int depth = task.depth();
  LabeledTrajectory lt;
  lt.traj = traj;
  lt.positive = traj.outcome_reward == task.reward_correct();
  lt.step_values.resize(depth + 1);
  State s = task.root();
  lt.step_values[0] = value(s);
  for (int t = 0; t < depth; ++t) {
    s = task.transition(s, Action{traj.actions[t]});
    lt.step_values[t + 1] = task.is_terminal(s) ? 0.0 : value(s);
  }
  lt.targets.resize(depth);
  for (int t = 0; t < depth; ++t) {
    const double r = (t == depth - 1) ? traj.outcome_reward : 0.0;
    lt.targets[t] = r + lt.step_values[t + 1] - lt.step_values[t];
  }
  return lt;
}

void to_response_level(LabeledTrajectory& lt) {
  lt.targets.assign(1, lt.traj.outcome_reward - lt.step_values.front());
}

/// Sampled-trajectory selection for the non-tree target sources: dedupe by
/// action sequence, split by outcome, cap each side.
struct SampledSplit {
  std::vector<Trajectory> positives;
  std::vector<Trajectory> negatives;
};

SampledSplit split_sampled(const TaskSpec& task,
                           std::span<const Trajectory> sampled, int max_pos,
                           int max_neg) {
  SampledSplit out;
  std::vector<std::vector<int>> seen;
  for (const Trajectory& traj : sampled) {
    if (std::find(seen.begin(), seen.end(), traj.actions) != seen.end()) {
      continue;
    }
    seen.push_back(traj.actions);
    const bool positive = traj.outcome_reward == task.reward_correct();
    auto& bucket = positive ? out.positives : out.negatives;
    const int cap = positive ? max_pos : max_neg;
    if (static_cast<int>(bucket.size()) < cap) bucket.push_back(traj);
  }
  return out;
}

/// Sibling preference pairs for the non-tree target sources: every prefix
/// state of the selected trajectories is a candidate, ranked by how many
/// trajectories pass through it; Q(a) = r + V(s·a) uses the value function.
template <typename ValueFn>
std::vector<StepPair> step_pairs_from_values(
    const TaskSpec& task, std::span<const LabeledTrajectory> selected,
    ValueFn&& value, int max_pairs) {
  struct Site {
    std::vector<int> prefix;
    int count = 0;
  };
  std::vector<Site> sites;
  for (const LabeledTrajectory& lt : selected) {
    std::vector<int> prefix;
    for (int a : lt.traj.actions) {
      auto it = std::find_if(sites.begin(), sites.end(), [&](const Site& s) {
        return s.prefix == prefix;
      });
      if (it == sites.end()) {
        sites.push_back({prefix, 1});
      } else {
        it->count += 1;
      }
      prefix.push_back(a);
    }
  }
  std::stable_sort(sites.begin(), sites.end(), [](const Site& a,
                                                  const Site& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.prefix < b.prefix;
  });
  std::vector<StepPair> out;
  for (const Site& site : sites) {
    if (static_cast<int>(out.size()) >= max_pairs) break;
    const State s = task.make_state(site.prefix);
    int best = -1, worst = -1;
    double best_q = 0.0, worst_q = 0.0;
    for (int a = 0; a < task.branching(); ++a) {
      const State next = task.transition(s, Action{a});
      double q;
      if (task.is_terminal(next)) {
        q = task.terminal_reward(next);
      } else {
        q = value(next);
      }
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
      out.push_back(StepPair{task.id(), site.prefix, best, worst});
    }
  }
  return out;
}

double mean_implicit_reward(std::span<const LabeledTrajectory> items,
                            const TaskPool& pool, const PolicyParams& params,
                            const PolicySnapshot& ref) {
  if (items.empty()) return 0.0;
  double total = 0.0;
  for (const LabeledTrajectory& lt : items) {
    total += implicit_reward(pool.at(lt.traj.task_id), lt.traj, params, ref);
  }
  return total / static_cast<double>(items.size());
}

}  // namespace

RoundData generate_round_data(const PolicyParams& params,
                              const PolicySnapshot& ref,
                              const TaskPool& train_pool,
                              std::span<const std::size_t> question_indices,
                              const RoundConfig& config, bool with_step_pairs,
                              std::uint64_t seed, int jobs) {
  RoundData data;
  data.questions.resize(question_indices.size());
  const auto& tasks = train_pool.tasks();
  const bool want_step_pairs = with_step_pairs;

  if (config.target_source == TargetSource::mcts) {
    parallel_for(jobs, question_indices.size(), [&](std::size_t qi) {
      const TaskSpec& task = tasks[question_indices[qi]];
      QuestionData& q = data.questions[qi];
      q.task_id = task.id();
      Rng rng(mix_seed(seed, qi));
      SearchTree tree = run_search(params, task, config.search, rng);
      LabeledExamples examples = select_training_examples(
          tree, task, config.max_pos, config.max_neg);
      q.positives = std::move(examples.positives);
      q.negatives = std::move(examples.negatives);
      if (want_step_pairs) {
        q.step_pairs = select_step_pairs(tree, task, config.max_pos);
      }
      q.tree = std::move(tree);
    });
  } else {
    // Sample trajectories from the current policy for every question first.
    std::vector<std::vector<Trajectory>> sampled(question_indices.size());
    parallel_for(jobs, question_indices.size(), [&](std::size_t qi) {
      const TaskSpec& task = tasks[question_indices[qi]];
      Rng rng(mix_seed(seed, qi));
      sampled[qi].reserve(config.samples_per_question);
      for (int k = 0; k < config.samples_per_question; ++k) {
        sampled[qi].push_back(sample_trajectory(params, task, rng));
      }
    });

    if (config.target_source == TargetSource::value_model) {
      std::vector<Trajectory> flat;
      for (const auto& bucket : sampled) {
        flat.insert(flat.end(), bucket.begin(), bucket.end());
      }
      Rng vm_rng(mix_seed(seed, 0x7a1e));
      const ValueModelParams model = train_value_model(
          train_pool, flat, config.value_model, vm_rng, nullptr);
      parallel_for(jobs, question_indices.size(), [&](std::size_t qi) {
        const TaskSpec& task = tasks[question_indices[qi]];
        QuestionData& q = data.questions[qi];
        q.task_id = task.id();
        const SampledSplit split = split_sampled(
            task, sampled[qi], config.max_pos, config.max_neg);
        for (const Trajectory& t : split.positives) {
          q.positives.push_back(label_targets_with_model(model, task, t));
        }
        for (const Trajectory& t : split.negatives) {
          q.negatives.push_back(label_targets_with_model(model, task, t));
        }
        if (want_step_pairs) {
          std::vector<LabeledTrajectory> selected = q.positives;
          selected.insert(selected.end(), q.negatives.begin(),
                          q.negatives.end());
          q.step_pairs = step_pairs_from_values(
              task, selected,
              [&](const State& s) { return predict_value(model, task, s); },
              config.max_pos);
        }
      });
    } else {  // oracle
      parallel_for(jobs, question_indices.size(), [&](std::size_t qi) {
        const TaskSpec& task = tasks[question_indices[qi]];
        QuestionData& q = data.questions[qi];
        q.task_id = task.id();
        const ValueTable table = exact_soft_v_kl(task, params.beta, ref);
        auto value_at = [&](const State& s) {
          return table.at(state_key(s));
        };
        const SampledSplit split = split_sampled(
            task, sampled[qi], config.max_pos, config.max_neg);
        for (const Trajectory& t : split.positives) {
          q.positives.push_back(label_with_values(task, t, value_at));
        }
        for (const Trajectory& t : split.negatives) {
          q.negatives.push_back(label_with_values(task, t, value_at));
        }
        if (want_step_pairs) {
          std::vector<LabeledTrajectory> selected = q.positives;
          selected.insert(selected.end(), q.negatives.begin(),
                          q.negatives.end());
          q.step_pairs = step_pairs_from_values(task, selected, value_at,
                                                config.max_pos);
        }
      });
    }
  }

  if (config.granularity == Granularity::response) {
    for (QuestionData& q : data.questions) {
      for (LabeledTrajectory& lt : q.positives) to_response_level(lt);
      for (LabeledTrajectory& lt : q.negatives) to_response_level(lt);
    }
  }
  for (const QuestionData& q : data.questions) {
    data.all_positives.insert(data.all_positives.end(), q.positives.begin(),
                              q.positives.end());
    data.all_negatives.insert(data.all_negatives.end(), q.negatives.begin(),
                              q.negatives.end());
  }
  return data;
}

void train_on_round_data(PolicyParams& params, const PolicySnapshot& ref,
                         const RoundData& data, const TaskPool& train_pool,
                         std::span<const TaskSpec> eval_tasks,
                         const RoundConfig& config, Objective objective,
                         int round_index, std::uint64_t seed,
                         std::vector<MetricsRecord>& metrics) {
  // Assemble the objective's training set from the round data.
  std::vector<LabeledTrajectory> items;     // dvo, kto
  std::vector<TrajectoryPair> pairs;        // dpo
  std::vector<StepPair> step_pairs;         // step-dpo
  std::vector<Trajectory> positives_only;   // rft
  for (const QuestionData& q : data.questions) {
    switch (objective) {
      case Objective::dvo:
      case Objective::kto:
        items.insert(items.end(), q.positives.begin(), q.positives.end());
        items.insert(items.end(), q.negatives.begin(), q.negatives.end());
        break;
      case Objective::dpo: {
        const std::size_t n = std::min(q.positives.size(), q.negatives.size());
        for (std::size_t i = 0; i < n; ++i) {
          pairs.push_back(
              TrajectoryPair{q.positives[i].traj, q.negatives[i].traj});
        }
        break;
      }
      case Objective::step_dpo:
        step_pairs.insert(step_pairs.end(), q.step_pairs.begin(),
                          q.step_pairs.end());
        break;
      case Objective::rft:
        for (const LabeledTrajectory& lt : q.positives) {
          positives_only.push_back(lt.traj);
        }
        break;
    }
  }

  std::size_t n_items = 0;
  switch (objective) {
    case Objective::dvo:
    case Objective::kto: n_items = items.size(); break;
    case Objective::dpo: n_items = pairs.size(); break;
    case Objective::step_dpo: n_items = step_pairs.size(); break;
    case Objective::rft: n_items = positives_only.size(); break;
  }
  if (n_items == 0) {
    throw Error("round " + std::to_string(round_index) + " aborted: no usable " +
                objective_name(objective) + " training examples");
  }

  Optimizer opt(config.optimizer);
  const std::uint64_t eval_seed = mix_seed(seed, kEvalTag);
  std::vector<std::size_t> order(n_items);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(seed, kShuffleTag,
                             static_cast<std::uint64_t>(round_index) * 131 +
                                 static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    int update = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(
          order.size(), start + static_cast<std::size_t>(config.batch_size));
      LossResult res;
      switch (objective) {
        case Objective::dvo: {
          TrainingBatch batch;
          batch.granularity = config.granularity;
          batch.reference_id = "round_" + std::to_string(round_index);
          for (std::size_t i = start; i < stop; ++i) {
            batch.items.push_back(items[order[i]]);
          }
          res = dvo_loss(batch, train_pool, params, ref);
          break;
        }
        case Objective::kto: {
          std::vector<LabeledTrajectory> batch;
          for (std::size_t i = start; i < stop; ++i) {
            batch.push_back(items[order[i]]);
          }
          res = kto_loss(batch, train_pool, params, ref,
                         config.kto_lambda_pos, config.kto_lambda_neg);
          break;
        }
        case Objective::dpo: {
          std::vector<TrajectoryPair> batch;
          for (std::size_t i = start; i < stop; ++i) {
            batch.push_back(pairs[order[i]]);
          }
          res = dpo_loss(batch, train_pool, params, ref);
          break;
        }
        case Objective::step_dpo: {
          std::vector<StepPair> batch;
          for (std::size_t i = start; i < stop; ++i) {
            batch.push_back(step_pairs[order[i]]);
          }
          res = step_dpo_loss(batch, train_pool, params, ref);
          break;
        }
        case Objective::rft: {
          std::vector<Trajectory> batch;
          for (std::size_t i = start; i < stop; ++i) {
            batch.push_back(positives_only[order[i]]);
          }
          res = rft_loss(batch, train_pool, params);
          break;
        }
      }
      opt.step(params, res.grad);

      MetricsRecord rec;
      rec.round = round_index;
      rec.epoch = epoch;
      rec.update = update++;
      rec.objective = objective_name(objective);
      rec.loss = res.loss;
      rec.ir_pos =
          mean_implicit_reward(data.all_positives, train_pool, params, ref);
      rec.ir_neg =
          mean_implicit_reward(data.all_negatives, train_pool, params, ref);
      rec.margin = rec.ir_pos - rec.ir_neg;
      rec.acc_greedy = evaluate_greedy(params, eval_tasks);
      rec.acc_sampled =
          evaluate_sampled(params, eval_tasks, config.eval_temperature,
                           config.eval_trials, eval_seed);
      metrics.push_back(std::move(rec));
    }
  }
}

void run_round(PolicyParams& params, const TaskPool& train_pool,
               std::span<const TaskSpec> eval_tasks, const RoundConfig& config,
               Objective objective, int round_index, std::uint64_t seed,
               int jobs, const PolicySnapshot* pinned_ref,
               std::vector<MetricsRecord>& metrics,
               const std::filesystem::path* out_dir) {
  const PolicySnapshot ref =
      pinned_ref != nullptr ? *pinned_ref : snapshot(params);
  Rng qrng(mix_seed(seed, kQuestionTag, round_index));
  const std::vector<std::size_t> question_indices = sample_question_indices(
      train_pool.size(), config.questions_per_round, qrng);
  const RoundData data = generate_round_data(
      params, ref, train_pool, question_indices, config, objective,
      mix_seed(seed, kDataTag, round_index), jobs);

  if (out_dir != nullptr) {
    if (config.target_source == TargetSource::mcts) {
      std::string trees;
      for (const QuestionData& q : data.questions) {
        trees += tree_to_jsonl(*q.tree);
      }
      write_text_file(*out_dir / "trees.jsonl", trees);
    }
    std::string lines;
    for (const QuestionData& q : data.questions) {
      for (const LabeledTrajectory& lt : q.positives) {
        lines += labeled_trajectory_to_json(lt) + "\n";
      }
      for (const LabeledTrajectory& lt : q.negatives) {
        lines += labeled_trajectory_to_json(lt) + "\n";
      }
    }
    write_text_file(*out_dir / "data.jsonl", lines);
  }

  train_on_round_data(params, ref, data, train_pool, eval_tasks, config,
                      objective, round_index, seed, metrics);

  if (out_dir != nullptr) {
    save_policy(*out_dir / "checkpoint.json", params);
  }
}

}  // namespace dvo
