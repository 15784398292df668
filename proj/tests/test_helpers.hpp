#pragma once

#include <string>
#include <vector>

#include "btsynth/task.hpp"
#include "btsynth/text.hpp"
#include "btsynth/tree.hpp"

namespace btsynth::test {

inline BehaviorId beh(const std::string& text) {
  auto id = parse_behavior(text);
  REQUIRE(id.has_value());
  return *id;
}

inline BehaviorTree tree_of(const std::string& canonical) {
  return parse_tree(canonical);
}

/// Minimal single-brick task: one brick `g`, one position `P` at
/// (50, 0, 0); the pool carries the condition and put needed to solve it.
inline TaskSpec mini_task() {
  TaskSpec task;
  task.name = "mini";
  BrickSpec b;
  b.id = "g";
  b.start = {0.0, 0.0, 0.0};
  task.bricks.push_back(b);
  task.positions.emplace("P", Vec3{50.0, 0.0, 0.0});
  task.goals.push_back({"g", Vec3{50.0, 0.0, 0.0}});
  for (const char* s :
       {"picked g?", "g at pos P?", "pick g!", "place at pos P!",
        "put g at pos P!", "apply force g!"}) {
    task.behavior_pool.push_back(*parse_behavior(s));
  }
  return task;
}

}  // namespace btsynth::test
