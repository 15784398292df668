#pragma once

#include <string>
#include <vector>

#include "btsynth/gp.hpp"
#include "btsynth/planner.hpp"
#include "btsynth/task.hpp"

namespace btsynth {

/// Everything one task config file declares: the simulation task, the
/// planner's action models and goal conditions, and GP parameter
/// overrides.
struct TaskBundle {
  TaskSpec task;
  std::vector<ActionModel> action_models;
  GoalSpec goals;
  GpParams gp;
};

/// Loads and validates a task config. Throws ConfigError with a
/// descriptive message on any schema or invariant violation.
TaskBundle load_task_file(const std::string& path);

/// Resolves a task name ("task1") or a path to a config file. Name
/// resolution checks $BTSYNTH_CONFIG_DIR, then the built-in config
/// directory.
TaskBundle load_task(const std::string& name_or_path);

std::string resolve_config_path(const std::string& name_or_path);

}  // namespace btsynth
