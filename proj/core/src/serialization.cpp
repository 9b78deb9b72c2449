#include "dvo/serialization.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dvo {

namespace {

using nlohmann::json;

json mlp_to_json(const Mlp& net) {
  json w1 = json::array();
  for (int j = 0; j < net.hidden_dim; ++j) {
    json row = json::array();
    for (int i = 0; i < net.in_dim; ++i) {
      row.push_back(net.w1[static_cast<std::size_t>(j) * net.in_dim + i]);
    }
    w1.push_back(std::move(row));
  }
  json w2 = json::array();
  for (int k = 0; k < net.out_dim; ++k) {
    json row = json::array();
    for (int j = 0; j < net.hidden_dim; ++j) {
      row.push_back(net.w2[static_cast<std::size_t>(k) * net.hidden_dim + j]);
    }
    w2.push_back(std::move(row));
  }
  return json{{"W1", std::move(w1)},
              {"b1", net.b1},
              {"W2", std::move(w2)},
              {"b2", net.b2}};
}

Mlp mlp_from_json(const json& j) {
  Mlp net;
  const auto& w1 = j.at("W1");
  const auto& w2 = j.at("W2");
  net.hidden_dim = static_cast<int>(w1.size());
  net.in_dim = net.hidden_dim > 0 ? static_cast<int>(w1[0].size()) : 0;
  net.out_dim = static_cast<int>(w2.size());
  net.w1.reserve(static_cast<std::size_t>(net.hidden_dim) * net.in_dim);
  for (const auto& row : w1) {
    for (const auto& v : row) net.w1.push_back(v.get<double>());
  }
  net.b1 = j.at("b1").get<std::vector<double>>();
  net.w2.reserve(static_cast<std::size_t>(net.out_dim) * net.hidden_dim);
  for (const auto& row : w2) {
    for (const auto& v : row) net.w2.push_back(v.get<double>());
  }
  net.b2 = j.at("b2").get<std::vector<double>>();
  return net;
}

}  // namespace

std::string task_to_json(const TaskSpec& task) {
  json j{{"task_id", task.id()},
         {"seed", task.seed()},
         {"B", task.branching()},
         {"D", task.depth()},
         {"accepting_fraction", task.accepting_fraction()},
         {"reward_correct", task.reward_correct()},
         {"reward_incorrect", task.reward_incorrect()}};
  return j.dump();
}

TaskSpec task_from_json(const std::string& line) {
  json j = json::parse(line);
  return TaskSpec(j.at("task_id").get<std::string>(),
                  j.at("seed").get<std::uint64_t>(), j.at("B").get<int>(),
                  j.at("D").get<int>(),
                  j.at("accepting_fraction").get<double>(),
                  j.value("reward_correct", 1.0),
                  j.value("reward_incorrect", -1.0));
}

void save_tasks(const std::filesystem::path& path,
                std::span<const TaskSpec> tasks) {
  std::ostringstream os;
  for (const TaskSpec& t : tasks) os << task_to_json(t) << "\n";
  write_text_file(path, os.str());
}

std::vector<TaskSpec> load_tasks(const std::filesystem::path& path) {
  std::vector<TaskSpec> out;
  std::istringstream is(read_text_file(path));
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(task_from_json(line));
  }
  return out;
}

std::string policy_to_json(const PolicyParams& params) {
  json j;
  j["beta"] = params.beta;
  j["num_actions"] = params.num_actions;
  if (params.kind == PolicyKind::tabular) {
    j["kind"] = "tabular";
    json table = json::object();
    for (const auto& [key, row] : params.table) {
      table[std::to_string(key)] = row;
    }
    j["tabular"] = std::move(table);
  } else {
    j["kind"] = "mlp";
    j["depth"] = params.mlp_depth;
    j["mlp"] = mlp_to_json(params.net);
  }
  return j.dump();
}

PolicyParams policy_from_json(const std::string& text) {
  json j = json::parse(text);
  const std::string kind = j.at("kind").get<std::string>();
  PolicyParams params;
  params.beta = j.at("beta").get<double>();
  params.num_actions = j.at("num_actions").get<int>();
  if (kind == "tabular") {
    params.kind = PolicyKind::tabular;
    for (const auto& [key, row] : j.at("tabular").items()) {
      params.table[std::stoull(key)] = row.get<std::vector<double>>();
    }
  } else if (kind == "mlp") {
    params.kind = PolicyKind::mlp;
    params.mlp_depth = j.at("depth").get<int>();
    params.net = mlp_from_json(j.at("mlp"));
  } else {
    throw ConfigError("unknown policy kind: " + kind);
  }
  return params;
}

void save_policy(const std::filesystem::path& path,
                 const PolicyParams& params) {
  write_text_file(path, policy_to_json(params) + "\n");
}

PolicyParams load_policy(const std::filesystem::path& path) {
  return policy_from_json(read_text_file(path));
}

std::string value_model_to_json(const ValueModelParams& model) {
  json j{{"kind", "value_model"},
         {"num_actions", model.num_actions},
         {"depth", model.depth},
         {"mlp", mlp_to_json(model.net)}};
  return j.dump();
}

ValueModelParams value_model_from_json(const std::string& text) {
  json j = json::parse(text);
  ValueModelParams model;
  model.num_actions = j.at("num_actions").get<int>();
  model.depth = j.at("depth").get<int>();
  model.net = mlp_from_json(j.at("mlp"));
  return model;
}

namespace {

void dump_node(const SearchNode& node, const std::string& task_id,
               int parent_id, int action, int& next_id, std::ostringstream& os) {
  const int node_id = next_id++;
  json j{{"node_id", node_id},
         {"parent_id", parent_id},
         {"action", action},
         {"prior", node.prior},
         {"N", node.visits},
         {"W", node.total_value},
         {"V", node.value()},
         {"terminal", node.terminal},
         {"task_id", task_id}};
  if (node.terminal) j["reward"] = node.terminal_reward;
  os << j.dump() << "\n";
  for (const auto& child : node.children) {
    dump_node(*child, task_id, node_id, child->state.prefix.back(), next_id,
              os);
  }
}

}  // namespace

std::string tree_to_jsonl(const SearchTree& tree) {
  std::ostringstream os;
  int next_id = 0;
  dump_node(*tree.root, tree.task_id, -1, -1, next_id, os);
  return os.str();
}

std::vector<SearchTree> trees_from_jsonl(const std::string& text,
                                         const TaskPool& tasks) {
  std::vector<SearchTree> out;
  std::vector<SearchNode*> by_id;  // nodes of the tree being parsed
  const TaskSpec* task = nullptr;

  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    const int parent_id = j.at("parent_id").get<int>();
    auto node = std::make_unique<SearchNode>();
    node->prior = j.at("prior").get<double>();
    node->visits = j.at("N").get<int>();
    node->total_value = j.at("W").get<double>();
    node->terminal = j.at("terminal").get<bool>();
    if (node->terminal) node->terminal_reward = j.at("reward").get<double>();

    if (parent_id < 0) {
      SearchTree tree;
      tree.task_id = j.at("task_id").get<std::string>();
      task = &tasks.at(tree.task_id);
      node->state = task->root();
      by_id.clear();
      by_id.push_back(node.get());
      tree.root = std::move(node);
      out.push_back(std::move(tree));
      continue;
    }
    if (out.empty() ||
        parent_id >= static_cast<int>(by_id.size())) {
      throw ConfigError("malformed tree dump: dangling parent id");
    }
    SearchNode* parent = by_id[parent_id];
    node->state =
        task->transition(parent->state, Action{j.at("action").get<int>()});
    parent->expanded = true;
    by_id.push_back(node.get());
    parent->children.push_back(std::move(node));
  }
  return out;
}

std::string labeled_trajectory_to_json(const LabeledTrajectory& lt) {
  json j{{"task_id", lt.traj.task_id},
         {"actions", lt.traj.actions},
         {"outcome", lt.traj.outcome_reward},
         {"step_values", lt.step_values},
         {"targets", lt.targets}};
  return j.dump();
}

LabeledTrajectory labeled_trajectory_from_json(const std::string& line) {
  json j = json::parse(line);
  LabeledTrajectory lt;
  lt.traj.task_id = j.at("task_id").get<std::string>();
  lt.traj.actions = j.at("actions").get<std::vector<int>>();
  lt.traj.outcome_reward = j.at("outcome").get<double>();
  lt.step_values = j.at("step_values").get<std::vector<double>>();
  lt.targets = j.at("targets").get<std::vector<double>>();
  lt.positive = lt.traj.outcome_reward > 0.0;
  return lt;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  if (!path.parent_path().empty()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  os << content;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open for reading: " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::uint64_t fnv1a_digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

}  // namespace dvo
