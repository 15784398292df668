#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "btsynth/behavior.hpp"
#include "btsynth/world.hpp"

namespace btsynth {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Constants of the fitness function. All lengths in mm.
struct FitnessParams {
  double delta = 0.4;            // per-target error allowance
  double length_penalty = 0.1;   // per node
  double timeout_penalty = 10.0;
  double failure_penalty = 50.0;
  double hold_penalty = 0.0;     // nonzero only where holding must be deterred
};

struct TaskRules {
  bool collision_corridor_check = false;
  bool balance_check = false;
  bool press_fit_residual = false;
  bool red_no_stack = false;
};

struct EpisodeLimits {
  int max_ticks = 200;
  int max_action_ticks = 50;
  // Abstract per-episode work cap (counts leaf evaluations); disabled by
  // default. Stands in for a wall-clock limit without breaking determinism.
  std::optional<long> work_budget;
};

struct BrickSpec {
  std::string id;
  double width = 31.8;
  double depth = 31.8;
  double height = 19.2;
  Vec3 start;
  double com_offset_x = 0.0;
  bool no_stack = false;
};

struct TaskGoal {
  std::string brick;
  Vec3 target;
};

struct TaskSpec {
  std::string name;
  std::vector<BrickSpec> bricks;
  std::map<std::string, Vec3> positions;
  std::vector<TaskGoal> goals;
  std::optional<std::set<std::string>> allowed_positions;
  TaskRules rules;
  EpisodeLimits limits;
  FitnessParams fitness;
  std::vector<BehaviorId> behavior_pool;

  double transport_z = 150.0;
  double press_fit_residual_mm = 0.8;
  Vec3 gripper_start{-200.0, 150.0, 150.0};

  int default_generations = 200;
  std::optional<int> boosted_generations;
  std::vector<std::uint32_t> default_seeds;

  const BrickSpec* find_brick_spec(const std::string& id) const;
  bool brick_no_stack(const std::string& id) const;
  Vec3 position(const std::string& id) const;
  bool in_pool(const BehaviorId& id) const;
};

}  // namespace btsynth
