#include "btsynth/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

namespace btsynth {

namespace {

using nlohmann::json;

Vec3 vec3_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(what + " must be an [x, y, z] array");
  }
  return Vec3{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

BehaviorId behavior_from(const json& j, const std::string& what) {
  if (!j.is_string()) {
    throw ConfigError(what + " must be a behavior string");
  }
  auto id = parse_behavior(j.get<std::string>());
  if (!id) {
    throw ConfigError(what + ": unrecognized behavior '" +
                      j.get<std::string>() + "'");
  }
  return *id;
}

void validate_bundle(const TaskBundle& bundle) {
  const TaskSpec& task = bundle.task;
  std::set<std::string> brick_ids;
  for (const auto& b : task.bricks) {
    if (is_reserved_word(b.id)) {
      throw ConfigError("brick id '" + b.id + "' is a reserved word");
    }
    if (!brick_ids.insert(b.id).second) {
      throw ConfigError("duplicate brick id '" + b.id + "'");
    }
  }
  for (const auto& [pid, pos] : task.positions) {
    (void)pos;
    if (is_reserved_word(pid)) {
      throw ConfigError("position id '" + pid + "' is a reserved word");
    }
    if (brick_ids.count(pid) != 0) {
      throw ConfigError("position id '" + pid + "' collides with a brick id");
    }
  }
  for (const auto& g : task.goals) {
    if (brick_ids.count(g.brick) == 0) {
      throw ConfigError("goal references missing brick '" + g.brick + "'");
    }
  }
  if (task.allowed_positions) {
    for (const auto& p : *task.allowed_positions) {
      if (task.positions.count(p) == 0) {
        throw ConfigError("allowed position '" + p + "' is not declared");
      }
    }
  }

  auto check_param = [&](const BehaviorId& id, std::size_t param_idx,
                         bool is_position) {
    const std::string& p = id.params[param_idx];
    if (is_position) {
      if (task.positions.count(p) == 0) {
        throw ConfigError("behavior '" + id.display() +
                          "' references unknown position '" + p + "'");
      }
    } else if (brick_ids.count(p) == 0) {
      throw ConfigError("behavior '" + id.display() +
                        "' references unknown brick '" + p + "'");
    }
  };
  auto check_behavior = [&](const BehaviorId& id) {
    switch (id.tmpl) {
      case BehaviorTemplate::Picked:
      case BehaviorTemplate::Pick:
      case BehaviorTemplate::PlaceOn:
      case BehaviorTemplate::ApplyForce:
        check_param(id, 0, false);
        break;
      case BehaviorTemplate::PlaceAt:
        check_param(id, 0, true);
        break;
      case BehaviorTemplate::On:
      case BehaviorTemplate::PutOn:
        check_param(id, 0, false);
        check_param(id, 1, false);
        if (id.params[0] == id.params[1]) {
          throw ConfigError("behavior '" + id.display() +
                            "' names the same brick twice");
        }
        break;
      case BehaviorTemplate::AtPos:
      case BehaviorTemplate::PutAt:
        check_param(id, 0, false);
        check_param(id, 1, true);
        break;
    }
  };

  std::set<BehaviorId> pool_set;
  for (const auto& id : task.behavior_pool) {
    check_behavior(id);
    if (!pool_set.insert(id).second) {
      throw ConfigError("duplicate pool behavior '" + id.display() + "'");
    }
    // Floor placement targets must come from the allowed set when one is
    // declared; elevated positions are exempt.
    if (task.allowed_positions && (id.tmpl == BehaviorTemplate::PlaceAt ||
                                   id.tmpl == BehaviorTemplate::PutAt)) {
      const std::string& pid = id.params.back();
      const Vec3 pos = task.position(pid);
      if (pos.z == 0.0 && task.allowed_positions->count(pid) == 0) {
        throw ConfigError("behavior '" + id.display() +
                          "' targets a table position outside the allowed set");
      }
    }
  }

  for (const auto& fact : bundle.goals.facts) {
    if (fact.kind() != BehaviorKind::Condition) {
      throw ConfigError("goal '" + fact.display() + "' is not a condition");
    }
    if (pool_set.count(fact) == 0) {
      throw ConfigError("goal condition '" + fact.display() +
                        "' is not in the behavior pool");
    }
  }
  for (const auto& m : bundle.action_models) {
    if (m.behavior.kind() != BehaviorKind::Action) {
      throw ConfigError("action model behavior '" + m.behavior.display() +
                        "' is not an action");
    }
    if (pool_set.count(m.behavior) == 0) {
      throw ConfigError("action model behavior '" + m.behavior.display() +
                        "' is not in the behavior pool");
    }
    if (m.post.empty()) {
      throw ConfigError("action model for '" + m.behavior.display() +
                        "' has no postconditions");
    }
    std::set<SymbolicFact> seen;
    for (const auto& lists : {&m.pre, &m.post, &m.del}) {
      for (const auto& f : *lists) {
        if (f.kind() != BehaviorKind::Condition) {
          throw ConfigError("model fact '" + f.display() +
                            "' is not a condition");
        }
        if (pool_set.count(f) == 0) {
          throw ConfigError("model fact '" + f.display() +
                            "' is not in the behavior pool");
        }
      }
    }
    for (const auto& f : m.pre) {
      if (!seen.insert(f).second) {
        throw ConfigError("duplicate precondition '" + f.display() + "'");
      }
    }
  }
  bundle.gp.check();
}

}  // namespace

TaskBundle load_task_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }

  TaskBundle bundle;
  TaskSpec& task = bundle.task;
  try {
    task.name = j.at("name").get<std::string>();

    for (const auto& jb : j.at("bricks")) {
      BrickSpec b;
      b.id = jb.at("id").get<std::string>();
      const auto& size = jb.at("size_mm");
      b.width = size[0].get<double>();
      b.depth = size[1].get<double>();
      b.height = size[2].get<double>();
      b.start = vec3_from(jb.at("start_mm"), "brick start_mm");
      b.com_offset_x = jb.value("com_offset_x_mm", 0.0);
      b.no_stack = jb.value("no_stack", false);
      task.bricks.push_back(std::move(b));
    }

    for (const auto& [pid, jpos] : j.at("positions").items()) {
      task.positions.emplace(pid, vec3_from(jpos, "position " + pid));
    }

    for (const auto& jg : j.at("goals")) {
      task.goals.push_back(TaskGoal{jg.at("brick").get<std::string>(),
                                    vec3_from(jg.at("target_mm"), "goal")});
    }

    if (j.contains("allowed_positions")) {
      std::set<std::string> allowed;
      for (const auto& p : j.at("allowed_positions")) {
        allowed.insert(p.get<std::string>());
      }
      task.allowed_positions = std::move(allowed);
    }

    if (j.contains("rules")) {
      const auto& jr = j.at("rules");
      task.rules.collision_corridor_check =
          jr.value("collision_corridor_check", false);
      task.rules.balance_check = jr.value("balance_check", false);
      task.rules.press_fit_residual = jr.value("press_fit_residual", false);
      task.rules.red_no_stack = jr.value("red_no_stack", false);
    }

    if (j.contains("limits")) {
      const auto& jl = j.at("limits");
      task.limits.max_ticks = jl.value("max_ticks", 200);
      task.limits.max_action_ticks = jl.value("max_action_ticks", 50);
      if (jl.contains("work_budget")) {
        task.limits.work_budget = jl.at("work_budget").get<long>();
      }
    }

    if (j.contains("fitness")) {
      const auto& jf = j.at("fitness");
      task.fitness.delta = jf.value("delta_mm", 0.4);
      task.fitness.length_penalty = jf.value("length_penalty", 0.1);
      task.fitness.timeout_penalty = jf.value("timeout_penalty", 10.0);
      task.fitness.failure_penalty = jf.value("failure_penalty", 50.0);
      task.fitness.hold_penalty = jf.value("hold_penalty", 0.0);
    }

    if (j.contains("geometry")) {
      const auto& jg = j.at("geometry");
      task.transport_z = jg.value("transport_z_mm", 150.0);
      task.press_fit_residual_mm = jg.value("press_fit_residual_mm", 0.8);
      if (jg.contains("gripper_start_mm")) {
        task.gripper_start = vec3_from(jg.at("gripper_start_mm"),
                                       "gripper_start_mm");
      }
    }

    for (const auto& jb : j.at("behavior_pool")) {
      task.behavior_pool.push_back(behavior_from(jb, "behavior_pool entry"));
    }
    if (j.contains("pool_size")) {
      const auto expected = j.at("pool_size").get<std::size_t>();
      if (task.behavior_pool.size() != expected) {
        throw ConfigError("behavior pool has " +
                          std::to_string(task.behavior_pool.size()) +
                          " entries, expected " + std::to_string(expected));
      }
    }

    if (j.contains("planner")) {
      const auto& jp = j.at("planner");
      for (const auto& jg : jp.at("goal_conditions")) {
        bundle.goals.facts.push_back(behavior_from(jg, "goal condition"));
      }
      for (const auto& jm : jp.at("action_models")) {
        ActionModel m;
        m.behavior = behavior_from(jm.at("behavior"), "model behavior");
        for (const auto& f : jm.value("pre", json::array())) {
          m.pre.push_back(behavior_from(f, "model precondition"));
        }
        for (const auto& f : jm.at("post")) {
          m.post.push_back(behavior_from(f, "model postcondition"));
        }
        for (const auto& f : jm.value("delete", json::array())) {
          m.del.push_back(behavior_from(f, "model deletion"));
        }
        bundle.action_models.push_back(std::move(m));
      }
    }

    if (j.contains("experiment")) {
      const auto& je = j.at("experiment");
      task.default_generations = je.value("generations", 200);
      if (je.contains("boosted_generations")) {
        task.boosted_generations = je.at("boosted_generations").get<int>();
      }
      for (const auto& s : je.value("seeds", json::array())) {
        task.default_seeds.push_back(s.get<std::uint32_t>());
      }
    }

    if (j.contains("gp")) {
      const auto& jg = j.at("gp");
      GpParams& gp = bundle.gp;
      gp.population_size = jg.value("population_size", gp.population_size);
      gp.initial_tree_size = jg.value("initial_tree_size", gp.initial_tree_size);
      gp.mutation_parents = jg.value("mutation_parents", gp.mutation_parents);
      gp.mutation_offspring_per_parent = jg.value(
          "mutation_offspring_per_parent", gp.mutation_offspring_per_parent);
      if (jg.contains("mutation_probs")) {
        const auto& jp = jg.at("mutation_probs");
        gp.p_add = jp.at("add").get<double>();
        gp.p_delete = jp.at("delete").get<double>();
        gp.p_change = jp.at("change").get<double>();
      }
      gp.crossover_parents = jg.value("crossover_parents", gp.crossover_parents);
      gp.crossover_offspring_per_parent = jg.value(
          "crossover_offspring_per_parent", gp.crossover_offspring_per_parent);
      gp.elites = jg.value("elites", gp.elites);
      gp.control_node_prob = jg.value("control_node_prob", gp.control_node_prob);
      gp.max_resample_attempts =
          jg.value("max_resample_attempts", gp.max_resample_attempts);
    }
  } catch (const json::exception& e) {
    throw ConfigError("schema error in " + path + ": " + e.what());
  }

  validate_bundle(bundle);
  return bundle;
}

std::string resolve_config_path(const std::string& name_or_path) {
  namespace fs = std::filesystem;
  if (fs::exists(name_or_path)) {
    return name_or_path;
  }
  std::vector<std::string> dirs;
  if (const char* env = std::getenv("BTSYNTH_CONFIG_DIR")) {
    dirs.emplace_back(env);
  }
#ifdef BTSYNTH_DEFAULT_CONFIG_DIR
  dirs.emplace_back(BTSYNTH_DEFAULT_CONFIG_DIR);
#endif
  dirs.emplace_back("configs");
  for (const auto& dir : dirs) {
    const fs::path candidate = fs::path(dir) / (name_or_path + ".json");
    if (fs::exists(candidate)) {
      return candidate.string();
    }
  }
  throw ConfigError("cannot resolve task config '" + name_or_path + "'");
}

TaskBundle load_task(const std::string& name_or_path) {
  return load_task_file(resolve_config_path(name_or_path));
}

}  // namespace btsynth
