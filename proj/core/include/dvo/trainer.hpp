#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dvo/mcts.hpp"
#include "dvo/objectives.hpp"
#include "dvo/optimizer.hpp"
#include "dvo/soft_values.hpp"
#include "dvo/value_model.hpp"

namespace dvo {

enum class Objective { dvo, dpo, step_dpo, kto, rft };

std::string objective_name(Objective o);
Objective objective_from_name(const std::string& name);

/// Stream derivations from the experiment seed. Kept in one place so the
/// round driver and the experiment driver agree on them.
namespace seeds {
std::uint64_t questions(std::uint64_t seed, int round);
std::uint64_t data(std::uint64_t seed, int round);
std::uint64_t eval(std::uint64_t seed);
std::uint64_t warm(std::uint64_t seed);
}  // namespace seeds

enum class TargetSource { mcts, value_model, oracle };

std::string target_source_name(TargetSource s);
TargetSource target_source_from_name(const std::string& name);

struct RoundConfig {
  int questions_per_round = 200;
  int rounds = 3;
  OptimizerConfig optimizer;  // adam, lr 5e-3 at desk scale
  int epochs = 3;
  int batch_size = 64;
  TargetSource target_source = TargetSource::mcts;
  bool warm_start = true;
  bool pin_reference = false;
  Granularity granularity = Granularity::step;
  int max_pos = 4;
  int max_neg = 4;
  SearchConfig search;
  int warm_start_samples = 16;   // trajectories sampled per task
  int samples_per_question = 8;  // value_model / oracle target sources
  ValueModelTrainConfig value_model;
  double kto_lambda_pos = 1.33;
  double kto_lambda_neg = 1.0;
  double eval_temperature = 0.7;
  int eval_trials = 3;
};

struct MetricsRecord {
  int round = 0;
  int epoch = 0;
  int update = 0;
  std::string objective;
  double loss = 0.0;
  double ir_pos = 0.0;
  double ir_neg = 0.0;
  double margin = 0.0;
  double acc_greedy = 0.0;
  double acc_sampled = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRecord& rec);
void save_metrics_csv(const std::filesystem::path& path,
                      std::span<const MetricsRecord> records);

/// Fraction of tasks whose greedy path (argmax per step, ties to the lowest
/// index) is accepting.
double evaluate_greedy(const PolicyParams& params,
                       std::span<const TaskSpec> eval_tasks);

/// Mean accuracy over `trials` seeded sampling passes at the given
/// temperature.
double evaluate_sampled(const PolicyParams& params,
                        std::span<const TaskSpec> eval_tasks,
                        double temperature, int trials, std::uint64_t seed);

/// Samples from the initial policy, keeps the accepting trajectories and
/// runs one epoch of likelihood training on them. Returns false (leaving the
/// params untouched) when the sampling budget finds no positives.
bool warm_start(PolicyParams& params, const TaskPool& train_tasks,
                const RoundConfig& config, Rng& rng);

/// Per-question training data for one round.
struct QuestionData {
  std::string task_id;
  std::optional<SearchTree> tree;  // mcts target source only
  std::vector<LabeledTrajectory> positives;
  std::vector<LabeledTrajectory> negatives;
  std::vector<StepPair> step_pairs;
};

struct RoundData {
  std::vector<QuestionData> questions;
  std::vector<LabeledTrajectory> all_positives;
  std::vector<LabeledTrajectory> all_negatives;
};

/// Generates one round of training data with the current policy: MCTS trees
/// or sampled trajectories, labeled with step values from the configured
/// target source. Deterministic given (params, seed).
RoundData generate_round_data(const PolicyParams& params,
                              const PolicySnapshot& ref,
                              const TaskPool& train_pool,
                              std::span<const std::size_t> question_indices,
                              const RoundConfig& config, bool with_step_pairs,
                              std::uint64_t seed, int jobs);

/// Runs the update phase of a round over pre-generated data and appends one
/// metrics record per gradient update.
void train_on_round_data(PolicyParams& params, const PolicySnapshot& ref,
                         const RoundData& data, const TaskPool& train_pool,
                         std::span<const TaskSpec> eval_tasks,
                         const RoundConfig& config, Objective objective,
                         int round_index, std::uint64_t seed,
                         std::vector<MetricsRecord>& metrics);

/// Full round: snapshot the reference (unless one is pinned), generate data,
/// train, and optionally persist trees/data/checkpoint under out_dir.
/// Throws Error when the round produces no usable training examples.
void run_round(PolicyParams& params, const TaskPool& train_pool,
               std::span<const TaskSpec> eval_tasks, const RoundConfig& config,
               Objective objective, int round_index, std::uint64_t seed,
               int jobs, const PolicySnapshot* pinned_ref,
               std::vector<MetricsRecord>& metrics,
               const std::filesystem::path* out_dir);

/// Indices of the round's questions: a seeded draw without replacement.
std::vector<std::size_t> sample_question_indices(std::size_t pool_size,
                                                 int questions_per_round,
                                                 Rng& rng);

}  // namespace dvo
