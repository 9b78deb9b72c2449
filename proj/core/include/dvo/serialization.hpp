#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dvo/mcts.hpp"
#include "dvo/policy.hpp"
#include "dvo/step_mdp.hpp"
#include "dvo/training_data.hpp"
#include "dvo/value_model.hpp"

namespace dvo {

// ---- tasks: one JSON object per line -------------------------------------

std::string task_to_json(const TaskSpec& task);
TaskSpec task_from_json(const std::string& line);
void save_tasks(const std::filesystem::path& path,
                std::span<const TaskSpec> tasks);
std::vector<TaskSpec> load_tasks(const std::filesystem::path& path);

// ---- policy / value-model checkpoints -------------------------------------

/// {"kind","beta","tabular":{key:[logits]}} or
/// {"kind","beta","mlp":{"W1","b1","W2","b2"},...}. Doubles round-trip at
/// full precision (shortest-form formatting).
std::string policy_to_json(const PolicyParams& params);
PolicyParams policy_from_json(const std::string& text);
void save_policy(const std::filesystem::path& path, const PolicyParams& params);
PolicyParams load_policy(const std::filesystem::path& path);

std::string value_model_to_json(const ValueModelParams& model);
ValueModelParams value_model_from_json(const std::string& text);

// ---- search trees: one node per line, pre-order ---------------------------

std::string tree_to_jsonl(const SearchTree& tree);
/// Parses one or more concatenated tree dumps (a new tree starts whenever
/// parent_id is -1); states are rebuilt against the pool's tasks.
std::vector<SearchTree> trees_from_jsonl(const std::string& text,
                                         const TaskPool& tasks);

// ---- labeled trajectory records -------------------------------------------

std::string labeled_trajectory_to_json(const LabeledTrajectory& lt);
LabeledTrajectory labeled_trajectory_from_json(const std::string& line);

// ---- small file helpers ----------------------------------------------------

void write_text_file(const std::filesystem::path& path,
                     const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

/// FNV-1a digest used for data-provenance assertions.
std::uint64_t fnv1a_digest(std::string_view bytes);

}  // namespace dvo
