#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "btsynth/task.hpp"
#include "btsynth/tree.hpp"

namespace btsynth {

/// A symbolic fact shares its identity with the condition behavior that
/// observes it. A symbolic state is a finite set of true facts; anything
/// absent is false.
using SymbolicFact = BehaviorId;
using FactSet = std::set<SymbolicFact>;

struct ActionModel {
  BehaviorId behavior;              // an action from the task pool
  std::vector<SymbolicFact> pre;    // must hold before the action runs
  std::vector<SymbolicFact> post;   // added on symbolic success
  std::vector<SymbolicFact> del;    // removed on symbolic success
};

struct GoalSpec {
  std::vector<SymbolicFact> facts;  // ordered; all must hold at the end
};

struct UnachievableGoal : std::runtime_error {
  explicit UnachievableGoal(const SymbolicFact& fact)
      : std::runtime_error("no action model achieves '" + fact.display() +
                           "'"),
        fact(fact) {}
  SymbolicFact fact;
};

struct PlanDepthExceeded : std::runtime_error {
  explicit PlanDepthExceeded(int limit)
      : std::runtime_error("plan expansion exceeded " +
                           std::to_string(limit) + " iterations") {}
};

/// Evaluates the tree over a symbolic state: conditions test membership,
/// actions succeed (applying post/delete effects to `state`) when their
/// model's preconditions are all present. Also reports the condition node
/// whose failure drove an overall Failure, when one exists.
std::pair<Status, std::optional<int>> symbolic_tick(
    const BehaviorTree& tree, const std::vector<ActionModel>& models,
    FactSet& state);

/// Replaces the failing condition with
///   Fallback(condition, Sequence(preconditions..., action))
/// using the first declared model whose postconditions contain the fact.
/// With no preconditions the sequence wrapper is dropped.
BehaviorTree expand(const BehaviorTree& tree, int failing,
                    const std::vector<ActionModel>& models);

/// Backchains from the goal conditions until symbolic execution succeeds.
/// The initial symbolic state is read off the task's start configuration.
/// The planner knows nothing of collision or balance rules, so its output
/// may still fail in simulation.
BehaviorTree plan(const TaskSpec& task, const std::vector<ActionModel>& models,
                  const GoalSpec& goals, int depth_limit = 50);

/// Facts from the task pool that hold in the task's initial world state.
FactSet initial_facts(const TaskSpec& task);

}  // namespace btsynth
